"""Acceptance criteria, one test per criterion.

Every criterion prints a ``PASS``/``FAIL`` line with its measured value and
wall time. Run directly (``python tests/test_acceptance.py``) for the
twelve lines alone, or through pytest (``pytest tests/test_acceptance.py -v -s``).
Seeds and replication counts are fixed in advance; nothing here is tuned
to a particular outcome.
"""

import dataclasses
import math
import os
import sys
import time
import warnings

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, os.path.dirname(__file__))
from conftest import brute_force_ols, rel_err, two_pass_oracle  # noqa: E402

from zeroalpha.alpha_test import (TestConfig, compute_psi, critical_value,  # noqa: E402
                                  one_shot_from_psi)
from zeroalpha.derandomize import (REJECT, RETAIN, DerandConfig,  # noqa: E402
                                   derandomized_from_psi, run_derandomized)
from zeroalpha.dgp import DgpConfig, generate  # noqa: E402
from zeroalpha.estimators import (fit_fama_macbeth, fit_ols, fit_pca, pca_parts)  # noqa: E402
from zeroalpha.harness import ExperimentSpec, default_workers, run_experiment  # noqa: E402
from zeroalpha.ingest import run_rolling  # noqa: E402
from zeroalpha.panel import FactorPanel, ReturnPanel  # noqa: E402

TAU = 0.05


def exact_null_rate(n, tau=TAU):
    return 1.0 - stats.norm.cdf(critical_value(n, tau)) ** n


def null_rejection_rate(n, seeds):
    psi = np.zeros(n)
    cfg = TestConfig(tau=TAU)
    hits = sum(one_shot_from_psi(psi, cfg.with_seed(s)).reject for s in range(seeds))
    return hits / seeds


def binomial_se(p, m):
    return math.sqrt(p * (1.0 - p) / m)


# ---------------------------------------------------------------------------

def criterion_1():
    m = 20_000
    rate = null_rejection_rate(500, m)
    p = exact_null_rate(500)
    se = binomial_se(p, m)
    return abs(rate - p) <= 3 * se, f"rate={rate:.5f} exact={p:.5f} 3SE={3 * se:.5f}", 30


def criterion_2():
    m = 20_000
    parts, gaps, ok = [], [], True
    for n in (100, 1000, 10_000):
        rate = null_rejection_rate(n, m)
        p = exact_null_rate(n)
        ok &= abs(rate - p) <= 3 * binomial_se(p, m)
        gaps.append(abs(rate - TAU))
        parts.append(f"N={n}:{rate:.5f}(exact {p:.5f})")
    ok &= gaps[0] > gaps[1] > gaps[2]
    return ok, " ".join(parts), 120


def criterion_3():
    spec = ExperimentSpec(DgpConfig(error_kind="gaussian", phi_g=0.4), grid=[(100, 200)],
                          replications=500, test=TestConfig(nu=5, tau=TAU), seed=3,
                          workers=default_workers())
    rate = run_experiment(spec).cells[0].rejection_rate_one_shot
    return rate <= 0.08, f"size={rate:.4f} (bound 0.08)", 300


def criterion_4():
    spec = ExperimentSpec(DgpConfig(alpha_scheme="sparse_normal", alpha_fraction=0.05),
                          grid=[(200, 200)], replications=300, test=TestConfig(nu=5, tau=TAU),
                          seed=4, workers=default_workers())
    rate = run_experiment(spec).cells[0].rejection_rate_one_shot
    return rate >= 0.95, f"power={rate:.4f} (bound 0.95)", 300


def criterion_5():
    n, b, seeds = 500, 39, 200
    psi = np.zeros(n)
    reps = [derandomized_from_psi(psi, TAU, DerandConfig(TAU, b, "FofB", s)) for s in range(seeds)]
    q = np.array([r.q_value for r in reps])
    target = stats.norm.cdf(critical_value(n, TAU)) ** n
    se = q.std(ddof=1) / math.sqrt(seeds)
    retain = np.mean([r.decision == RETAIN for r in reps])
    ok = abs(q.mean() - target) <= 3 * se and retain >= 0.95
    return ok, f"mean Q={q.mean():.5f} target={target:.5f} 3SE={3 * se:.5f} retain={retain:.3f}", 120


def criterion_6():
    sim = generate(DgpConfig(n=100, t=200, seed=6))
    y = sim.returns.excess_returns.copy()
    y[7] += 25.0
    fit = fit_ols(ReturnPanel(y), sim.factors)
    cfg = TestConfig(tau=TAU)
    psi_max = compute_psi(fit, cfg).max()
    reps = [run_derandomized(fit, cfg, DerandConfig(tau=TAU, master_seed=s)) for s in range(1000)]
    ok = psi_max >= 100 and all(r.q_value == 0.0 and r.decision == REJECT for r in reps)
    return ok, f"max psi={psi_max:.1f}, seeds with Q=0: {sum(r.q_value == 0.0 for r in reps)}/1000", 10


def criterion_7():
    rng = np.random.default_rng(7)
    worst_ols = worst_fm = worst_norm = worst_eig = 0.0
    for _ in range(50):
        n, t, k = int(rng.integers(5, 21)), int(rng.integers(30, 101)), int(rng.integers(1, 4))
        f = rng.standard_normal((k, t)) + rng.uniform(-0.5, 0.5, (k, 1))
        beta = rng.uniform(-1.0, 2.0, (n, k))
        y = rng.normal(0, 0.5, (n, 1)) + beta @ f + rng.standard_normal((n, t))
        ret, fac = ReturnPanel(y), FactorPanel(f)
        a_ref, _ = brute_force_ols(y, f)
        worst_ols = max(worst_ols, rel_err(fit_ols(ret, fac).alphas, a_ref))
        a_fm, _, _ = two_pass_oracle(y, f)
        worst_fm = max(worst_fm, rel_err(fit_fama_macbeth(ret, fac).alphas, a_fm))
        kp = min(3, n - 1)
        pc = fit_pca(ret, kp)
        worst_norm = max(worst_norm, np.max(np.abs(pc.betas.T @ pc.betas / n - np.eye(kp))))
        parts, pairs = pca_parts(ret, kp)
        res = np.linalg.norm(parts.sigma_y @ pairs.vectors - pairs.vectors * pairs.values, axis=0)
        worst_eig = max(worst_eig, float(res.max()))
    ok = worst_ols <= 1e-10 and worst_fm <= 1e-10 and worst_norm <= 1e-8 and worst_eig <= 1e-8
    return ok, (f"OLS rel={worst_ols:.2e} FM rel={worst_fm:.2e} "
                f"PC norm={worst_norm:.2e} eig resid={worst_eig:.2e}"), 60


def criterion_8():
    worst = 0.0
    cfg = TestConfig(tau=TAU)
    for kind in ("tradable", "non_tradable", "latent"):
        sim = generate(DgpConfig(n=60, t=120, model_kind=kind, alpha_scheme="sparse_normal",
                                 omitted_strength="strong" if kind == "tradable" else "none", seed=8))
        fitter = {"tradable": lambda r: fit_ols(r, sim.factors),
                  "non_tradable": lambda r: fit_fama_macbeth(r, sim.factors),
                  "latent": lambda r: fit_pca(r, 3)}[kind]
        base = compute_psi(fitter(sim.returns), cfg)
        for c in (0.01, 100.0):
            psi = compute_psi(fitter(sim.returns.scaled(c)), cfg)
            worst = max(worst, float(np.max(np.abs(psi - base) / np.maximum(1.0, np.abs(base)))))
    return worst <= 1e-12, f"max psi deviation={worst:.2e}", 10


def criterion_9():
    rates = {}
    for kind, bound in (("non_tradable", 0.09), ("latent", 0.10)):
        spec = ExperimentSpec(DgpConfig(model_kind=kind, omitted_strength="none"),
                              grid=[(100, 200)], replications=300,
                              test=TestConfig(nu=5, tau=TAU), seed=9, workers=default_workers())
        rates[kind] = (run_experiment(spec).cells[0].rejection_rate_one_shot, bound)
    ok = all(r <= b for r, b in rates.values())
    return ok, f"FM size={rates['non_tradable'][0]:.4f} (<=0.09) PC size={rates['latent'][0]:.4f} (<=0.10)", 600


def criterion_10():
    spec = ExperimentSpec(DgpConfig(alpha_scheme="sparse_normal"), grid=[(50, 100), (100, 100)],
                          replications=40, derand=DerandConfig(), seed=10, workers=1)
    many = max(2, default_workers())
    a = run_experiment(spec).to_json(include_timing=False)
    b = run_experiment(dataclasses.replace(spec, workers=many)).to_json(include_timing=False)
    return a == b, f"1 worker vs {many} workers: {'identical' if a == b else 'DIFFERENT'} JSON", 120


def criterion_11():
    n, t, window = 100, 200, 60
    # zero alphas everywhere: the supplied factors span the systematic part
    sim = generate(DgpConfig(n=n, t=t, omitted_strength="none", seed=11))
    y = sim.returns.excess_returns.copy()
    y[: n // 10, 60:120] += 2.0  # months 61..120
    dates = tuple(str(j) for j in range(1, t + 1))
    panel = ReturnPanel(y, sim.returns.assets, dates)
    factors = FactorPanel(sim.factors.values, ("MKT", "SMB", "HML"), dates)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        test = TestConfig(nu=4, tau=TAU)
    res = run_rolling(panel, factors, window, test, DerandConfig(tau=TAU))
    ends = np.array([int(e) for e in res.window_ends])
    starts = ends - window + 1
    inside = (starts >= 61) & (ends <= 120)
    outside = (ends <= 60) | (starts >= 121)
    dec = np.array(res.decisions)
    inside_ok = bool(np.all(dec[inside] == REJECT))
    retain_share = float(np.mean(dec[outside] == RETAIN))
    ok = inside.any() and inside_ok and retain_share >= 0.90
    return ok, (f"inside windows={inside.sum()} all rejected={inside_ok}; "
                f"outside windows={outside.sum()} retained={retain_share:.3f}"), 120


def criterion_12():
    spec = ExperimentSpec(DgpConfig(), grid=[(500, 500)], replications=100,
                          test=TestConfig(nu=5, tau=TAU), seed=12, workers=default_workers())
    start = time.perf_counter()
    run_experiment(spec)
    elapsed = time.perf_counter() - start
    return elapsed < 60.0, f"N=T=500 M=100 in {elapsed:.1f}s on {default_workers()} core(s)", 60


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


def evaluate(func):
    start = time.perf_counter()
    ok, detail, budget = func()
    elapsed = time.perf_counter() - start
    ok = bool(ok) and elapsed < budget
    number = func.__name__.split("_")[1]
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} [{elapsed:.1f}s, budget {budget}s]"
    return ok, line


@pytest.mark.slow
@pytest.mark.parametrize("func", CRITERIA, ids=lambda f: f.__name__)
def test_acceptance(func, capsys):
    ok, line = evaluate(func)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(f) for f in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
