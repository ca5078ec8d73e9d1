"""Small dense linear algebra kernel used by the estimators.

Matrices are plain 2-D ``float64`` numpy arrays. Two operations matter:

* ``solve_spd`` -- Cholesky solve of a symmetric positive (semi)definite
  system with an explicit relative pivot test, so that collinear factors or
  degenerate loadings surface as :class:`SingularMatrix` instead of garbage.
* ``top_k_eigen`` -- leading eigenpairs of a symmetric matrix with a fixed
  sign convention so repeated calls are bit-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidK, NoConvergence, SingularMatrix, ZeroAlphaError

PIVOT_TOL = 1e-12
JACOBI_MAX_N = 64
_JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class EigenPairs:
    """Leading eigenpairs, values in descending order.

    ``vectors`` is N x K with unit-norm columns; the largest-magnitude
    entry of every column is positive.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def k(self) -> int:
        return self.values.shape[0]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ZeroAlphaError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ZeroAlphaError(f"{name} contains NaN or Inf")
    return m


def _check_square_symmetric(a: np.ndarray, name: str) -> None:
    if a.shape[0] != a.shape[1]:
        raise ZeroAlphaError(f"{name} must be square, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-10 * scale):
        raise ZeroAlphaError(f"{name} is not symmetric")


def cholesky(a: np.ndarray, *, pivot_tol: float = PIVOT_TOL,
             reference: float | None = None) -> np.ndarray:
    """Lower Cholesky factor of a symmetric matrix.

    Raises :class:`SingularMatrix` as soon as a pivot (the squared diagonal
    of the factor) drops below ``pivot_tol * reference``. ``reference``
    defaults to the largest diagonal entry of ``a``; callers that centre
    their data pass the uncentred scale instead so an all-zero centred
    matrix is still caught.
    """
    a = as_matrix(a, "A")
    _check_square_symmetric(a, "A")
    n = a.shape[0]
    if reference is None:
        reference = float(np.max(np.diag(a))) if n else 0.0
    threshold = pivot_tol * reference
    low = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        if not pivot > threshold or pivot <= 0.0:
            raise SingularMatrix(
                f"pivot {pivot:.3e} at column {j} below {threshold:.3e}")
        d = np.sqrt(pivot)
        low[j, j] = d
        if j + 1 < n:
            low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / d
    return low


def solve_spd(a, b, *, pivot_tol: float = PIVOT_TOL,
              reference: float | None = None) -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a``.

    ``b`` may be a vector or a matrix of right-hand sides; the result has
    the same shape as ``b``.
    """
    a = as_matrix(a, "A")
    b_arr = np.asarray(b, dtype=np.float64)
    vector = b_arr.ndim == 1
    rhs = as_matrix(b_arr, "b")
    if rhs.shape[0] != a.shape[0]:
        raise ZeroAlphaError(
            f"dimension mismatch: A is {a.shape}, b has {rhs.shape[0]} rows")
    low = cholesky(a, pivot_tol=pivot_tol, reference=reference)
    n = a.shape[0]
    # forward then back substitution
    y = np.empty_like(rhs)
    for i in range(n):
        y[i] = (rhs[i] - low[i, :i] @ y[:i]) / low[i, i]
    x = np.empty_like(rhs)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - low[i + 1:, i] @ x[i + 1:]) / low[i, i]
    return x[:, 0] if vector else x


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _off_diagonal_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m - np.diag(np.diag(m))))


def jacobi_eigen(a) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition by cyclic Jacobi rotations.

    Returns ``(values, vectors)`` sorted by descending value, columns
    normalised and sign-fixed. Intended for small matrices.
    """
    a = as_matrix(a, "A")
    _check_square_symmetric(a, "A")
    n = a.shape[0]
    m = 0.5 * (a + a.T)
    v = np.eye(n)
    fro = np.linalg.norm(m)
    # off-diagonal mass cannot be driven much below rounding of the diagonal
    tol = 4.0 * n * np.finfo(float).eps * max(fro, np.finfo(float).tiny)
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = _off_diagonal_norm(m)
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                mp = m[:, p].copy()
                mq = m[:, q].copy()
                m[:, p] = c * mp - s * mq
                m[:, q] = s * mp + c * mq
                mp = m[p, :].copy()
                mq = m[q, :].copy()
                m[p, :] = c * mp - s * mq
                m[q, :] = s * mp + c * mq
                m[p, q] = m[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        off = _off_diagonal_norm(m)
        raise NoConvergence(
            f"Jacobi did not converge in {_JACOBI_MAX_SWEEPS} sweeps", off)
    values = np.diag(m).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    v = v[:, order]
    v /= np.linalg.norm(v, axis=0)
    return values, _fix_signs(v)


def eigen_residuals(a: np.ndarray, pairs: EigenPairs) -> np.ndarray:
    """Per-pair residual norms ``||A v_j - lambda_j v_j||``."""
    r = a @ pairs.vectors - pairs.vectors * pairs.values
    return np.linalg.norm(r, axis=0)


def top_k_eigen(a, k: int, method: str = "auto") -> EigenPairs:
    """Top-``k`` eigenpairs of a symmetric matrix.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    64 x 64, LAPACK ``syevd`` above). Every returned pair is checked
    against ``||A v - lambda v|| <= 1e-8 (1 + |lambda|) ||A||_F``.
    """
    a = as_matrix(a, "A")
    _check_square_symmetric(a, "A")
    n = a.shape[0]
    if not 1 <= k <= n:
        raise InvalidK(f"k must satisfy 1 <= k <= {n}, got {k}")
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        values, vectors = jacobi_eigen(a)
    elif method == "lapack":
        sym = 0.5 * (a + a.T)
        w, vecs = np.linalg.eigh(sym)
        order = np.argsort(-w, kind="stable")
        values, vectors = w[order], _fix_signs(vecs[:, order])
    else:
        raise ValueError(f"unknown method {method!r}")
    pairs = EigenPairs(values=values[:k].copy(), vectors=vectors[:, :k].copy())
    res = eigen_residuals(a, pairs)
    bound = 1e-8 * (1.0 + np.abs(pairs.values)) * np.linalg.norm(a)
    if np.any(res > bound):
        raise NoConvergence("eigenpair residual above tolerance",
                            float(np.max(res)))
    return pairs
