"""Return/factor panels and fitted-model containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidPanel
from .linalg import EigenPairs

ESTIMATORS = ("OLS", "FM", "PC")


def _labels(values: Sequence, n: int, what: str) -> tuple:
    labels = tuple(values) if values is not None else tuple(str(i) for i in range(n))
    if len(labels) != n:
        raise InvalidPanel(f"{what}: expected {n} labels, got {len(labels)}")
    return labels


@dataclass(frozen=True)
class ReturnPanel:
    """N x T matrix of excess returns (percent per period).

    Rows are assets, columns are periods. ``allow_missing=True`` admits NaN
    cells; such panels are only accepted by the rolling pipeline, which
    drops incomplete assets window by window.
    """

    excess_returns: np.ndarray
    assets: tuple = None
    dates: tuple = None
    allow_missing: bool = False

    def __post_init__(self):
        y = np.array(self.excess_returns, dtype=np.float64)
        if y.ndim != 2:
            raise InvalidPanel(f"returns must be N x T, got shape {y.shape}")
        if np.any(np.isinf(y)):
            raise InvalidPanel("returns contain Inf")
        if not self.allow_missing and np.any(np.isnan(y)):
            raise InvalidPanel("returns contain NaN")
        y.setflags(write=False)
        object.__setattr__(self, "excess_returns", y)
        object.__setattr__(self, "assets", _labels(self.assets, y.shape[0], "assets"))
        object.__setattr__(self, "dates", _labels(self.dates, y.shape[1], "dates"))
        if len(set(self.assets)) != len(self.assets):
            raise InvalidPanel("duplicated asset identifiers")

    @property
    def n(self) -> int:
        return self.excess_returns.shape[0]

    @property
    def t(self) -> int:
        return self.excess_returns.shape[1]

    def scaled(self, c: float) -> "ReturnPanel":
        return ReturnPanel(self.excess_returns * c, self.assets, self.dates,
                           self.allow_missing)

    def select(self, rows=None, cols=None) -> "ReturnPanel":
        rows = np.arange(self.n) if rows is None else np.asarray(rows)
        cols = np.arange(self.t) if cols is None else np.asarray(cols)
        y = self.excess_returns[np.ix_(rows, cols)]
        return ReturnPanel(y, [self.assets[i] for i in rows],
                           [self.dates[j] for j in cols],
                           allow_missing=self.allow_missing)


@dataclass(frozen=True)
class FactorPanel:
    """K x T matrix of factor realisations; K may be 0 (latent mode)."""

    values: np.ndarray
    names: tuple = None
    dates: Optional[tuple] = None

    def __post_init__(self):
        f = np.array(self.values, dtype=np.float64)
        if f.ndim == 1:
            f = f[None, :]
        if f.ndim != 2:
            raise InvalidPanel(f"factors must be K x T, got shape {f.shape}")
        if not np.all(np.isfinite(f)):
            raise InvalidPanel("factors contain NaN or Inf")
        f.setflags(write=False)
        object.__setattr__(self, "values", f)
        object.__setattr__(self, "names", _labels(self.names, f.shape[0], "factor names"))
        if self.dates is not None:
            object.__setattr__(self, "dates", _labels(self.dates, f.shape[1], "factor dates"))

    @classmethod
    def empty(cls, t: int) -> "FactorPanel":
        return cls(np.zeros((0, t)), ())

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> int:
        return self.values.shape[1]

    def subset(self, names: Sequence[str]) -> "FactorPanel":
        missing = [n for n in names if n not in self.names]
        if missing:
            raise InvalidPanel(f"unknown factors: {missing}")
        rows = [self.names.index(n) for n in names]
        return FactorPanel(self.values[rows], tuple(names), self.dates)

    def window(self, cols) -> "FactorPanel":
        cols = np.asarray(cols)
        dates = None if self.dates is None else [self.dates[j] for j in cols]
        return FactorPanel(self.values[:, cols], self.names, dates)


@dataclass(frozen=True)
class AlphaFit:
    """Output of one of the alpha estimators."""

    estimator: str
    alphas: np.ndarray
    betas: np.ndarray
    residuals: np.ndarray
    scale: float
    lam: Optional[np.ndarray] = None
    eigen: Optional[EigenPairs] = None
    factors_hat: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")

    @property
    def n(self) -> int:
        return self.alphas.shape[0]

    @property
    def t(self) -> int:
        return self.residuals.shape[1]


def validate_panel(returns: ReturnPanel, factors: FactorPanel) -> list[str]:
    """Return a list of problems; an empty list means the panel can be fitted."""
    problems = []
    y = returns.excess_returns
    f = factors.values
    n, t = y.shape
    k = f.shape[0]
    if f.shape[1] != t:
        problems.append(f"dimension mismatch: returns have T={t}, factors have T={f.shape[1]}")
    if np.any(np.isnan(y)):
        problems.append("returns contain missing values")
    if n < 3:
        problems.append(f"too few assets: N={n} < 3")
    if t < k + 2:
        problems.append(f"insufficient observations: T={t} <= K+1={k + 1}")
    if k and f.shape[1] == t and t >= 2:
        fc = f - f.mean(axis=1, keepdims=True)
        cov = fc @ fc.T
        ref = max(float(np.max(np.diag(f @ f.T))), np.finfo(float).tiny)
        if np.min(np.linalg.eigvalsh(cov)) <= 1e-12 * ref:
            problems.append("singular factor covariance")
    return problems
