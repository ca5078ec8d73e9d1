"""Alpha estimators: time-series OLS, Fama-MacBeth and PCA.

All three return an :class:`~zeroalpha.panel.AlphaFit` whose ``scale`` is
the pooled residual RMS ``sqrt(sum_{i,t} u_{i,t}^2 / (N T))`` computed on
the estimator's own residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateScale, InvalidK, InvalidPanel, SingularBetaGram,
                     SingularFactorCovariance, SingularMatrix)
from .linalg import EigenPairs, solve_spd, top_k_eigen
from .panel import AlphaFit, FactorPanel, ReturnPanel

SCALE_TOL = 1e-14


@dataclass(frozen=True)
class FmIntermediate:
    beta_hat: np.ndarray
    lambda_hat: np.ndarray
    ybar: np.ndarray
    fbar: np.ndarray


@dataclass(frozen=True)
class PcIntermediate:
    sigma_y: np.ndarray
    beta_pc: np.ndarray
    lambda_pc: np.ndarray
    fhat: np.ndarray


def pooled_scale(residuals: np.ndarray, reference: np.ndarray) -> float:
    """Pooled RMS of the residuals; raises if it is numerically zero."""
    s = float(np.sqrt(np.mean(residuals * residuals)))
    ref = float(np.sqrt(np.mean(reference * reference)))
    if not s > SCALE_TOL * ref or s == 0.0:
        raise DegenerateScale(
            f"residual scale {s:.3e} is zero relative to panel scale {ref:.3e}")
    return s


def _check_dims(returns: ReturnPanel, factors: FactorPanel) -> None:
    if np.any(np.isnan(returns.excess_returns)):
        raise InvalidPanel("returns contain missing values")
    if factors.t != returns.t:
        raise InvalidPanel(
            f"returns have T={returns.t} but factors have T={factors.t}")
    if returns.t < factors.k + 2:
        raise InvalidPanel(
            f"insufficient observations: T={returns.t} <= K+1={factors.k + 1}")


def time_series_betas(y: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Per-asset OLS slopes on demeaned factors, N x K."""
    k = f.shape[0]
    if k == 0:
        return np.zeros((y.shape[0], 0))
    fc = f - f.mean(axis=1, keepdims=True)
    gram = fc @ fc.T
    # uncentred second moment as the pivot reference: constant factors centre to ~0
    ref = float(np.max(np.diag(f @ f.T)))
    try:
        coef = solve_spd(gram, fc @ (y - y.mean(axis=1, keepdims=True)).T,
                         reference=ref)
    except SingularMatrix as exc:
        raise SingularFactorCovariance(f"singular factor covariance: {exc}") from None
    return coef.T


def cross_sectional_premia(beta: np.ndarray, ybar: np.ndarray) -> np.ndarray:
    """Slopes of the cross-sectional regression of ``ybar`` on a constant and ``beta``."""
    bc = beta - beta.mean(axis=0)
    ref = float(np.max(np.diag(beta.T @ beta))) if beta.size else 0.0
    try:
        return solve_spd(bc.T @ bc, bc.T @ ybar, reference=ref)
    except SingularMatrix as exc:
        raise SingularBetaGram(f"cross-sectional beta Gram is singular: {exc}") from None


def fit_ols(returns: ReturnPanel, factors: FactorPanel) -> AlphaFit:
    """Time-series OLS alpha for every asset (tradable factors)."""
    _check_dims(returns, factors)
    y = returns.excess_returns
    f = factors.values
    beta = time_series_betas(y, f)
    alpha = y.mean(axis=1) - beta @ f.mean(axis=1)
    resid = y - alpha[:, None] - beta @ f
    scale = pooled_scale(resid, y)
    return AlphaFit("OLS", alpha, beta, resid, scale)


def fama_macbeth_parts(returns: ReturnPanel, factors: FactorPanel) -> FmIntermediate:
    _check_dims(returns, factors)
    y = returns.excess_returns
    f = factors.values
    if returns.n <= factors.k:
        raise SingularBetaGram(f"need N > K, got N={returns.n}, K={factors.k}")
    beta = time_series_betas(y, f)
    ybar = y.mean(axis=1)
    lam = cross_sectional_premia(beta, ybar)
    return FmIntermediate(beta, lam, ybar, f.mean(axis=1))


def fit_fama_macbeth(returns: ReturnPanel, factors: FactorPanel) -> AlphaFit:
    """Two-pass alpha for non-tradable factors.

    Pass one estimates betas by time-series OLS; pass two regresses mean
    returns on a constant and the betas to get the premia ``lam``. The
    alpha is ``ybar_i - beta_i' lam`` (the cross-sectional intercept is
    part of the alpha), and residuals are ``y_it - alpha_i - beta_i' f_t``.
    """
    parts = fama_macbeth_parts(returns, factors)
    y = returns.excess_returns
    alpha = parts.ybar - parts.beta_hat @ parts.lambda_hat
    resid = y - alpha[:, None] - parts.beta_hat @ factors.values
    scale = pooled_scale(resid, y)
    return AlphaFit("FM", alpha, parts.beta_hat, resid, scale, lam=parts.lambda_hat)


def pca_parts(returns: ReturnPanel, k: int, method: str = "auto") -> tuple[PcIntermediate, EigenPairs]:
    if np.any(np.isnan(returns.excess_returns)):
        raise InvalidPanel("returns contain missing values")
    n, t = returns.n, returns.t
    if not 1 <= k < min(n, t):
        raise InvalidK(f"k must satisfy 1 <= k < min(N, T) = {min(n, t)}, got {k}")
    y = returns.excess_returns
    ybar = y.mean(axis=1)
    yc = y - ybar[:, None]
    sigma = (yc @ yc.T) / (n * t)
    sigma = 0.5 * (sigma + sigma.T)
    pairs = top_k_eigen(sigma, k, method=method)
    beta = np.sqrt(n) * pairs.vectors
    fhat = beta.T @ yc / n
    lam = cross_sectional_premia(beta, ybar)
    return PcIntermediate(sigma, beta, lam, fhat), pairs


def fit_pca(returns: ReturnPanel, k: int, method: str = "auto") -> AlphaFit:
    """Alpha under ``k`` latent factors estimated by principal components.

    Loadings are ``sqrt(N)`` times the leading unit eigenvectors of the
    demeaned second-moment matrix, so ``beta' beta / N = I_k``.
    """
    parts, pairs = pca_parts(returns, k, method)
    y = returns.excess_returns
    ybar = y.mean(axis=1)
    alpha = ybar - parts.beta_pc @ parts.lambda_pc
    resid = y - alpha[:, None] - parts.beta_pc @ parts.fhat
    scale = pooled_scale(resid, y)
    return AlphaFit("PC", alpha, parts.beta_pc, resid, scale, lam=parts.lambda_pc,
                    eigen=pairs, factors_hat=parts.fhat)


def fit(returns: ReturnPanel, factors: FactorPanel | None, estimator: str,
        k: int | None = None) -> AlphaFit:
    """Dispatch on estimator tag (``OLS``, ``FM`` or ``PC``)."""
    tag = estimator.upper()
    if tag in ("OLS",):
        return fit_ols(returns, factors)
    if tag in ("FM", "FAMA-MACBETH"):
        return fit_fama_macbeth(returns, factors)
    if tag in ("PC", "PCA"):
        if k is None:
            raise InvalidK("PCA requires the number of factors k")
        return fit_pca(returns, k)
    raise ValueError(f"unknown estimator {estimator!r}")
