"""Counter-based random streams.

All randomness in the package goes through this module. A stream is named
by a :class:`StreamKey` (a master seed plus a path of integer indices such
as ``(cell, replication, purpose)``); the ``c``-th 64-bit word of a stream
is a pure function of the key and ``c``, so any element can be computed
without generating the ones before it. That is what makes parallel and
sequential runs bit-identical.

Construction (all arithmetic modulo 2**64)::

    mix(x)   = SplitMix64 finaliser of x + 0x9E3779B97F4A7C15
               (shifts 30/27/31, multipliers 0xBF58476D1CE4E5B9,
                0x94D049BB133111EB)
    key(m, [])         = mix(m ^ 0x5851F42D4C957F2D)
    key(m, [p1..pk])   = mix(key(m, [p1..pk-1]) ^ mix(pk + 0x2545F4914F6CDD1D))
    word(key, c)       = mix(key + c * 0x9E3779B97F4A7C15)
    uniform(key, c)    = (word(key, c) >> 11) * 2**-53        in [0, 1)

Gaussians use the Marsaglia polar method: output ``j`` belongs to pair
``j // 2``; attempt ``a`` of that pair reads words ``2*(j//2)`` and
``2*(j//2)+1`` of the sub-stream ``[a]`` and is retried on the next
sub-stream until ``0 < s < 1``. Because uniforms live on a 2**-53 grid,
``s >= 2**-104`` and every normal satisfies ``|z| <= sqrt(208 ln 2) < 12.01``.

Student-t draws are ``Z / sqrt(2 G / df)`` with ``Z`` from sub-stream
``[0]`` and ``G ~ Gamma(df/2)`` from sub-stream ``[1]`` (Marsaglia-Tsang).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDf

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_ROOT_SALT = 0x5851F42D4C957F2D
_PATH_SALT = 0x2545F4914F6CDD1D

# largest |z| the polar method can emit, see module docstring
GAUSSIAN_BOUND = float(np.sqrt(208.0 * np.log(2.0)))

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U30, _U27, _U31, _U11 = (np.uint64(s) for s in (30, 27, 31, 11))
_TWO_M53 = 2.0 ** -53


def mix64(x: int) -> int:
    """Scalar SplitMix64 step (Python ints)."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *path: int) -> int:
    """Deterministic 64-bit seed for ``path`` under ``master``."""
    h = mix64((int(master) & MASK64) ^ _ROOT_SALT)
    for p in path:
        h = mix64(h ^ mix64((int(p) + _PATH_SALT) & MASK64))
    return h


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> _U30)
    z = z * _U_M1
    z = z ^ (z >> _U27)
    z = z * _U_M2
    return z ^ (z >> _U31)


def words(key: int, counters: np.ndarray) -> np.ndarray:
    """64-bit words of stream ``key`` at the given counters."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (c + np.uint64(1)) * _U_GOLDEN
        return _mix_array(z)


def _uniform_at(key: int, counters: np.ndarray) -> np.ndarray:
    return (words(key, counters) >> _U11).astype(np.float64) * _TWO_M53


@dataclass(frozen=True)
class StreamKey:
    """Name of an independent random stream."""

    master: int
    path: tuple[int, ...] = ()

    def child(self, *indices: int) -> "StreamKey":
        return StreamKey(self.master, self.path + tuple(int(i) for i in indices))

    @property
    def key(self) -> int:
        return derive_seed(self.master, *self.path)


def uniform(stream: StreamKey, count: int, offset: int = 0) -> np.ndarray:
    """``count`` U[0, 1) draws starting at element ``offset``."""
    return _uniform_at(stream.key, np.arange(offset, offset + count, dtype=np.uint64))


def _polar_at(stream: StreamKey, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Both normals of each requested polar pair."""
    first = np.empty(pairs.shape[0])
    second = np.empty(pairs.shape[0])
    todo = np.arange(pairs.shape[0])
    attempt = 0
    while todo.size:
        key = stream.child(attempt).key
        p = pairs[todo].astype(np.uint64)
        v1 = 2.0 * _uniform_at(key, 2 * p) - 1.0
        v2 = 2.0 * _uniform_at(key, 2 * p + np.uint64(1)) - 1.0
        s = v1 * v1 + v2 * v2
        ok = (s > 0.0) & (s < 1.0)
        f = np.sqrt(-2.0 * np.log(s[ok]) / s[ok])
        first[todo[ok]] = v1[ok] * f
        second[todo[ok]] = v2[ok] * f
        todo = todo[~ok]
        attempt += 1
    return first, second


def gaussian_at(stream: StreamKey, indices: np.ndarray) -> np.ndarray:
    """Standard normal draws at arbitrary element indices of a stream."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        return np.empty(0)
    pairs, which = np.divmod(idx, 2)
    uniq, inverse = np.unique(pairs, return_inverse=True)
    first, second = _polar_at(stream, uniq)
    return np.where(which == 0, first[inverse], second[inverse])


def gaussian(stream: StreamKey, count: int, offset: int = 0) -> np.ndarray:
    """``count`` i.i.d. N(0, 1) draws, elements ``offset .. offset+count-1``."""
    if count <= 0:
        return np.empty(0)
    lo, hi = offset // 2, (offset + count - 1) // 2
    first, second = _polar_at(stream, np.arange(lo, hi + 1, dtype=np.int64))
    both = np.empty(2 * (hi - lo + 1))
    both[0::2] = first
    both[1::2] = second
    start = offset - 2 * lo
    return both[start:start + count]


def gamma_at(stream: StreamKey, shape: float, indices: np.ndarray) -> np.ndarray:
    """Gamma(shape, 1) draws (shape >= 1) by Marsaglia-Tsang."""
    if shape < 1.0:
        raise ValueError("gamma_at requires shape >= 1")
    idx = np.asarray(indices, dtype=np.int64)
    out = np.empty(idx.shape[0])
    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    todo = np.arange(idx.shape[0])
    attempt = 0
    while todo.size:
        sub = stream.child(attempt)
        x = gaussian_at(sub.child(0), idx[todo])
        u = _uniform_at(sub.child(1).key, idx[todo].astype(np.uint64))
        v = (1.0 + c * x) ** 3
        ok = v > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            accept = ok & (np.log(u) < 0.5 * x * x + d - d * v + d * np.log(np.where(ok, v, 1.0)))
        out[todo[accept]] = d * v[accept]
        todo = todo[~accept]
        attempt += 1
    return out


def student_t(stream: StreamKey, df: float, count: int, offset: int = 0) -> np.ndarray:
    """i.i.d. Student-t(df) draws with unit scale (variance df/(df-2))."""
    if not df > 2.0:
        raise InvalidDf(f"df must exceed 2, got {df}")
    idx = np.arange(offset, offset + count, dtype=np.int64)
    z = gaussian(stream.child(0), count, offset)
    g = gamma_at(stream.child(1), 0.5 * df, idx)
    return z / np.sqrt(2.0 * g / df)


def permutation(stream: StreamKey, n: int) -> np.ndarray:
    """Uniformly random permutation of ``range(n)`` (argsort of uniforms)."""
    return np.argsort(uniform(stream, n), kind="stable")


def choose_subset(stream: StreamKey, n: int, m: int) -> np.ndarray:
    """Sorted uniformly random ``m``-subset of ``range(n)``."""
    return np.sort(permutation(stream, n)[:m])
