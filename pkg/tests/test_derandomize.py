import math

import numpy as np
import pytest
from scipy import stats

from zeroalpha.alpha_test import TestConfig, critical_value, draw_omega
from zeroalpha.derandomize import (FOFB, LIL, REJECT, RETAIN, DerandConfig, auto_b,
                                   derandomized_from_psi, fofb_threshold, lil_threshold,
                                   replication_seed, retain_fraction, run_derandomized)
from zeroalpha.dgp import DgpConfig, generate
from zeroalpha.errors import BTooSmallForLIL, InvalidConfig
from zeroalpha.estimators import fit_ols


def test_retain_fraction_counts():
    assert retain_fraction([1.0, 2.0, 3.0, 5.0], 3.5) == 0.75
    # boundary counts as retained
    assert retain_fraction([3.5], 3.5) == 1.0


def test_auto_b():
    assert auto_b(500) == 39
    assert auto_b(100) == round(math.log(100) ** 2)


def test_thresholds():
    assert fofb_threshold(16, 0.05) == pytest.approx(0.95 - 0.5)
    b = 39
    ref = 0.95 - math.sqrt(0.05 * 0.95) * math.sqrt(2 * math.log(math.log(b)) / b)
    assert lil_threshold(b, 0.05) == pytest.approx(ref, rel=1e-15)
    with pytest.raises(BTooSmallForLIL):
        lil_threshold(15, 0.05)
    with pytest.raises(BTooSmallForLIL):
        derandomized_from_psi(np.zeros(10), 0.05, DerandConfig(b_count=10, threshold=LIL))


def test_thresholds_non_decreasing_in_b():
    bs = np.arange(16, 2000)
    for f in (lil_threshold, fofb_threshold):
        vals = np.array([f(int(b), 0.05) for b in bs])
        assert np.all(vals < 0.95)
    fb = np.array([fofb_threshold(int(b), 0.05) for b in bs])
    assert np.all(np.diff(fb) > 0)


def test_divergent_alternative_gives_zero_q():
    psi = np.zeros(100)
    psi[3] = 1e6
    for seed in range(20):
        rep = derandomized_from_psi(psi, 0.05, DerandConfig(master_seed=seed))
        assert rep.q_value == 0.0 and rep.decision == REJECT and rep.reject


def test_replications_use_derived_seeds():
    psi = np.zeros(60)
    rep = derandomized_from_psi(psi, 0.05, DerandConfig(b_count=5, master_seed=7))
    expected = [draw_omega(replication_seed(7, b), 60).max() for b in range(5)]
    assert rep.per_rep_z.tolist() == expected
    assert rep.q_value in {k / 5 for k in range(6)}
    assert (rep.decision == RETAIN) == (rep.q_value >= rep.threshold_value)


def test_null_mean_q_near_exact():
    n, seeds = 300, 60
    cfg = lambda s: DerandConfig(master_seed=s)
    qs = np.array([derandomized_from_psi(np.zeros(n), 0.05, cfg(s)).q_value for s in range(seeds)])
    target = stats.norm.cdf(critical_value(n, 0.05)) ** n
    se = qs.std(ddof=1) / math.sqrt(seeds)
    assert abs(qs.mean() - target) <= 3 * max(se, 1e-3)


def test_run_derandomized_deterministic_and_tau_checked():
    sim = generate(DgpConfig(n=40, t=100, seed=1))
    fit = fit_ols(sim.returns, sim.factors)
    a = run_derandomized(fit, TestConfig(), DerandConfig(master_seed=3)).to_dict()
    b = run_derandomized(fit, TestConfig(), DerandConfig(master_seed=3)).to_dict()
    assert a == b
    with pytest.raises(InvalidConfig):
        run_derandomized(fit, TestConfig(tau=0.1), DerandConfig(tau=0.05))


def test_config_validation():
    with pytest.raises(InvalidConfig):
        DerandConfig(threshold="other")
    with pytest.raises(InvalidConfig):
        DerandConfig(b_count=-1)
    assert DerandConfig().threshold == FOFB
