"""Seeded data-generating processes for the Monte Carlo designs.

Tradable design::

    y_it = alpha_i + sum_p beta_ip f_pt + u_it
    f_t  = fbar + Phi f_{t-1} + zeta_t,      zeta_t ~ N(0, I_3)
    u_t  = gamma g_t + xi_t,   g_t = phi_g g_{t-1} + chi_t

Non-tradable and latent designs replace the pricing part with
``beta_i' lam + beta_i' v_t`` where ``v_t = Phi v_{t-1} + zeta_t`` and
``lam_p ~ U(0, 1/2)``. The observed factors are ``v_t`` (non-tradable) or
nothing at all (latent).

Every ingredient is drawn from its own sub-stream of the configuration
seed, so e.g. changing the error distribution leaves the loadings
untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidConfig
from .panel import FactorPanel, ReturnPanel
from .rng import StreamKey, choose_subset, gaussian, student_t, uniform

FBAR = np.array([0.53, 0.19, 0.19])
PHI = np.array([-0.1, 0.2, -0.2])
LOADING_BOUNDS = ((0.3, 1.8), (-1.0, 1.0), (-0.6, 0.9))
GAMMA_BOUNDS = (0.7, 0.9)
GARCH_OMEGA = (0.01, 0.05)
GARCH_ARCH = (0.01, 0.04)
GARCH_PERSIST = (0.85, 0.95)
LAMBDA_BOUNDS = (0.0, 0.5)
BURN_IN = 100

ERROR_KINDS = ("gaussian", "student_t", "garch")
STRENGTHS = ("strong", "semi_strong", "weak", "none")
PRICING = ("all_strong", "one_strong_rest_semi_strong")
ALPHA_SCHEMES = ("null", "sparse_normal")
MODEL_KINDS = ("tradable", "non_tradable", "latent")

# sub-stream ids
_LOADINGS, _GAMMA, _GAMMA_SET, _ALPHA, _ALPHA_SET = 1, 2, 3, 4, 5
_ZETA, _CHI, _XI, _GARCH, _LAMBDA, _PRICING_SET, _INIT = 6, 7, 8, 9, 10, 11, 12


@dataclass(frozen=True)
class DgpConfig:
    n: int = 100
    t: int = 200
    error_kind: str = "gaussian"
    df: float = 5.5
    phi_g: float = 0.4
    omitted_strength: str = "strong"
    pricing_strength: str = "all_strong"
    alpha_scheme: str = "null"
    alpha_fraction: float = 0.05
    model_kind: str = "tradable"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.t < 1:
            raise InvalidConfig("n and t must be positive")
        for value, allowed, name in (
            (self.error_kind, ERROR_KINDS, "error_kind"),
            (self.omitted_strength, STRENGTHS, "omitted_strength"),
            (self.pricing_strength, PRICING, "pricing_strength"),
            (self.alpha_scheme, ALPHA_SCHEMES, "alpha_scheme"),
            (self.model_kind, MODEL_KINDS, "model_kind"),
        ):
            if value not in allowed:
                raise InvalidConfig(f"{name} must be one of {allowed}, got {value!r}")
        if self.error_kind == "student_t" and not self.df > 4.0:
            raise InvalidConfig(f"student_t errors need df > 4, got {self.df}")
        if self.alpha_scheme == "sparse_normal" and not 0.0 < self.alpha_fraction <= 1.0:
            raise InvalidConfig(f"alpha_fraction must lie in (0, 1], got {self.alpha_fraction}")
        if not abs(self.phi_g) < 1.0:
            raise InvalidConfig(f"phi_g must satisfy |phi_g| < 1, got {self.phi_g}")

    def with_(self, **changes) -> "DgpConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SimulatedPanel:
    returns: ReturnPanel
    factors: FactorPanel
    true_alphas: np.ndarray
    mispriced_indices: np.ndarray
    loadings: np.ndarray
    gamma: np.ndarray
    omitted_factor: np.ndarray = field(repr=False)
    innovations: np.ndarray = field(repr=False)
    risk_premia: Optional[np.ndarray] = None


@dataclass(frozen=True)
class MomentReport:
    factor_mean: np.ndarray
    factor_mean_expected: np.ndarray
    factor_autocorr: np.ndarray
    factor_autocorr_expected: np.ndarray
    omitted_var: float
    omitted_var_expected: float
    innovation_excess_kurtosis: float
    innovation_excess_kurtosis_expected: Optional[float]


def strength_count(n: int, strength: str) -> int:
    """Number of assets loading on the omitted factor."""
    return {"strong": n, "semi_strong": int(math.floor(n ** 0.8)),
            "weak": int(math.floor(n ** 0.4)), "none": 0}[strength]


def mispriced_count(n: int, fraction: float) -> int:
    # tolerance guards products like 0.07 * 100 = 7.000000000000001
    return min(n, int(math.ceil(fraction * n - 1e-9)))


def _ar1(key: StreamKey, intercept: np.ndarray, phi: np.ndarray, t: int) -> np.ndarray:
    """Stationary AR(1) rows ``x_t = c + phi x_{t-1} + e_t`` with N(0,1) shocks."""
    k = phi.shape[0]
    total = BURN_IN + t
    shocks = gaussian(key.child(0), k * total).reshape(k, total)
    mean = intercept / (1.0 - phi)
    x0 = mean + gaussian(key.child(1), k) / np.sqrt(1.0 - phi ** 2)
    out = np.empty((k, total))
    for p in range(k):
        out[p] = lfilter([1.0], [1.0, -phi[p]], intercept[p] + shocks[p], zi=[phi[p] * x0[p]])[0]
    return out[:, BURN_IN:]


def _garch(key: StreamKey, n: int, t: int) -> np.ndarray:
    par = uniform(key.child(0), 3 * n).reshape(3, n)
    omega = GARCH_OMEGA[0] + (GARCH_OMEGA[1] - GARCH_OMEGA[0]) * par[0]
    arch = GARCH_ARCH[0] + (GARCH_ARCH[1] - GARCH_ARCH[0]) * par[1]
    persist = GARCH_PERSIST[0] + (GARCH_PERSIST[1] - GARCH_PERSIST[0]) * par[2]
    total = BURN_IN + t
    z = gaussian(key.child(1), n * (total + 1)).reshape(n, total + 1)
    h2 = omega / (1.0 - arch - persist)
    xi = np.sqrt(h2) * z[:, 0]
    out = np.empty((n, total))
    for s in range(total):
        # lagged squared innovation drives the variance recursion
        h2 = omega + arch * xi * xi + persist * h2
        xi = np.sqrt(h2) * z[:, s + 1]
        out[:, s] = xi
    return out[:, BURN_IN:]


def _innovations(cfg: DgpConfig, key: StreamKey) -> np.ndarray:
    n, t = cfg.n, cfg.t
    if cfg.error_kind == "gaussian":
        return gaussian(key, n * t).reshape(n, t)
    if cfg.error_kind == "student_t":
        return student_t(key, cfg.df, n * t).reshape(n, t)
    return _garch(key, n, t)


def _uniform_matrix(key: StreamKey, n: int, bounds) -> np.ndarray:
    u = uniform(key, len(bounds) * n).reshape(len(bounds), n).T
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return lo + (hi - lo) * u


def generate(cfg: DgpConfig) -> SimulatedPanel:
    """Draw one panel from the configured design."""
    root = StreamKey(cfg.seed)
    n, t = cfg.n, cfg.t

    beta = _uniform_matrix(root.child(_LOADINGS), n, LOADING_BOUNDS)
    if cfg.pricing_strength == "one_strong_rest_semi_strong":
        keep = int(math.floor(n ** 0.8))
        zeroed = choose_subset(root.child(_PRICING_SET), n, n - keep)
        beta[zeroed, 1:] = 0.0

    gamma = np.zeros(n)
    m = strength_count(n, cfg.omitted_strength)
    if m:
        idx = np.arange(n) if m == n else choose_subset(root.child(_GAMMA_SET), n, m)
        g_lo, g_hi = GAMMA_BOUNDS
        gamma[idx] = g_lo + (g_hi - g_lo) * uniform(root.child(_GAMMA), n)[idx]

    alpha = np.zeros(n)
    mispriced = np.zeros(0, dtype=np.int64)
    if cfg.alpha_scheme == "sparse_normal":
        mispriced = choose_subset(root.child(_ALPHA_SET), n, mispriced_count(n, cfg.alpha_fraction))
        draws = gaussian(root.child(_ALPHA), n)[mispriced]
        # an exact zero would break the "nonzero on the mispriced set" contract
        draws[draws == 0.0] = np.finfo(float).eps
        alpha[mispriced] = draws

    g = _ar1(root.child(_CHI), np.zeros(1), np.array([cfg.phi_g]), t)[0]
    xi = _innovations(cfg, root.child(_XI))
    u = gamma[:, None] * g[None, :] + xi

    lam = None
    if cfg.model_kind == "tradable":
        f = _ar1(root.child(_ZETA), FBAR, PHI, t)
        y = alpha[:, None] + beta @ f + u
        factors = FactorPanel(f, ("f1", "f2", "f3"))
    else:
        v = _ar1(root.child(_ZETA), np.zeros(3), PHI, t)
        lo, hi = LAMBDA_BOUNDS
        lam = lo + (hi - lo) * uniform(root.child(_LAMBDA), 3)
        y = alpha[:, None] + (beta @ lam)[:, None] + beta @ v + u
        if cfg.model_kind == "non_tradable":
            factors = FactorPanel(v, ("v1", "v2", "v3"))
        else:
            factors = FactorPanel.empty(t)

    returns = ReturnPanel(y, [f"a{i}" for i in range(n)], [str(s) for s in range(1, t + 1)])
    return SimulatedPanel(returns, factors, alpha, mispriced, beta, gamma, g, xi, lam)


def _excess_kurtosis(x: np.ndarray) -> float:
    x = x - x.mean()
    m2 = np.mean(x * x)
    return float(np.mean(x ** 4) / (m2 * m2) - 3.0)


def _lag1_autocorr(x: np.ndarray) -> np.ndarray:
    xc = x - x.mean(axis=1, keepdims=True)
    return np.sum(xc[:, 1:] * xc[:, :-1], axis=1) / np.sum(xc * xc, axis=1)


def sample_moments_check(panel: SimulatedPanel, cfg: DgpConfig) -> MomentReport:
    """Compare sample moments of the simulated ingredients with their targets.

    The factor mean target is ``fbar / (1 - Phi)`` (``fbar`` is the VAR
    intercept) in the tradable design and zero otherwise.
    """
    if cfg.model_kind == "tradable":
        f = panel.factors.values
        mean_expected = FBAR / (1.0 - PHI)
    else:
        f = panel.factors.values if panel.factors.k else np.zeros((3, 0))
        mean_expected = np.zeros(3)
    if f.shape[1] > 1:
        fmean, fac = f.mean(axis=1), _lag1_autocorr(f)
    else:
        fmean, fac = np.full(3, np.nan), np.full(3, np.nan)
    if cfg.error_kind == "gaussian":
        kurt_expected = 0.0
    elif cfg.error_kind == "student_t":
        kurt_expected = 6.0 / (cfg.df - 4.0)
    else:
        kurt_expected = None
    return MomentReport(
        factor_mean=fmean,
        factor_mean_expected=mean_expected,
        factor_autocorr=fac,
        factor_autocorr_expected=PHI.copy(),
        omitted_var=float(np.var(panel.omitted_factor)),
        omitted_var_expected=1.0 / (1.0 - cfg.phi_g ** 2),
        innovation_excess_kurtosis=_excess_kurtosis(panel.innovations.ravel()),
        innovation_excess_kurtosis_expected=kurt_expected,
    )
