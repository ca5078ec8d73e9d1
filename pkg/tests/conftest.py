import numpy as np
import pytest

from zeroalpha.panel import FactorPanel, ReturnPanel


def brute_force_ols(y, f):
    """alpha, beta by explicit (X'X)^{-1} X'y with an intercept column."""
    t = y.shape[1]
    x = np.column_stack([np.ones(t), f.T])
    coef = np.linalg.inv(x.T @ x) @ x.T @ y.T
    return coef[0], coef[1:].T


def two_pass_oracle(y, f):
    """Fama-MacBeth alphas: time-series betas, then explicit cross-sectional LS."""
    _, beta = brute_force_ols(y, f)
    ybar = y.mean(axis=1)
    z = np.column_stack([np.ones(y.shape[0]), beta])
    coef = np.linalg.inv(z.T @ z) @ z.T @ ybar
    lam = coef[1:]
    return ybar - beta @ lam, beta, lam


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def random_panel(rng, n, t, k, alpha_scale=0.0):
    f = rng.standard_normal((k, t)) + rng.uniform(-0.5, 0.5, (k, 1))
    beta = rng.uniform(-1.0, 2.0, (n, k))
    alpha = alpha_scale * rng.standard_normal(n)
    y = alpha[:, None] + beta @ f + rng.standard_normal((n, t))
    return ReturnPanel(y), FactorPanel(f)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
