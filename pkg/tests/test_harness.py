import dataclasses
import json
import math

import numpy as np
import pytest
from scipy import stats

from zeroalpha.alpha_test import TestConfig, critical_value
from zeroalpha.derandomize import DerandConfig
from zeroalpha.dgp import DgpConfig
from zeroalpha.errors import InvalidConfig, ReplicationError
from zeroalpha.harness import ExperimentSpec, power_curve, replication_seeds, run_experiment
from zeroalpha.panel import ReturnPanel


def plant_alpha(panel):
    """Shift every asset by a huge constant alpha (module level so it pickles)."""
    y = panel.returns.excess_returns + 10.0
    return dataclasses.replace(panel, returns=ReturnPanel(y, panel.returns.assets, panel.returns.dates))


def break_panel(panel):
    y = np.zeros_like(panel.returns.excess_returns)
    return dataclasses.replace(panel, returns=ReturnPanel(y))


def test_forced_alpha_always_rejects():
    spec = ExperimentSpec(DgpConfig(), grid=[(30, 60)], replications=20,
                          derand=DerandConfig(), panel_hook=plant_alpha)
    cell = run_experiment(spec).cells[0]
    assert cell.rejection_rate_one_shot == 1.0 and cell.rejection_rate_derand == 1.0
    assert cell.mc_std_error == 0.0


def test_deterministic_report():
    spec = ExperimentSpec(DgpConfig(), grid=[(20, 40), (30, 40)], replications=15, seed=5,
                          derand=DerandConfig(b_count=8))
    a = run_experiment(spec).to_json(include_timing=False)
    b = run_experiment(spec).to_json(include_timing=False)
    assert a == b
    c = run_experiment(dataclasses.replace(spec, seed=6)).to_json(include_timing=False)
    assert json.loads(c)["cells"][0]["n"] == 20


def test_parallel_matches_serial():
    base = ExperimentSpec(DgpConfig(alpha_scheme="sparse_normal"), grid=[(20, 40), (25, 50)],
                          replications=12, seed=3, derand=DerandConfig(b_count=6))
    serial = run_experiment(base).to_json(include_timing=False)
    parallel = run_experiment(dataclasses.replace(base, workers=3)).to_json(include_timing=False)
    assert serial == parallel


def test_replication_seeds_distinct():
    seeds = {replication_seeds(0, c, r) for c in range(3) for r in range(50)}
    assert len(seeds) == 150


def test_null_cell_rate_in_band():
    m = 200
    spec = ExperimentSpec(DgpConfig(), grid=[(50, 100)], replications=m, seed=11)
    rate = run_experiment(spec).cells[0].rejection_rate_one_shot
    # exact pure-noise rate is an anchor; estimation noise can only add psi
    p = 1 - stats.norm.cdf(critical_value(50, 0.05)) ** 50
    assert rate <= p + 3 * math.sqrt(p * (1 - p) / m) + 0.03


def test_power_curve_monotone_and_zero_is_null():
    spec = ExperimentSpec(DgpConfig(), grid=[(60, 60)], replications=40, seed=2,
                          power_fractions=[0.0, 0.02, 0.05, 0.2])
    cells = power_curve(spec).cells
    rates = [c.rejection_rate_one_shot for c in cells]
    for lo, hi in zip(cells, cells[1:]):
        se = max(lo.mc_std_error, hi.mc_std_error, 1 / 40)
        assert hi.rejection_rate_one_shot >= lo.rejection_rate_one_shot - 2 * se
    assert rates[-1] >= 0.9
    null = run_experiment(ExperimentSpec(DgpConfig(), grid=[(60, 60)], replications=40, seed=2))
    assert null.cells[0].rejections_one_shot == cells[0].rejections_one_shot
    assert cells[0].setting == "null"


def test_csv_layout():
    spec = ExperimentSpec(DgpConfig(), grid=[(20, 40), (30, 40), (20, 60)], replications=5)
    rows = run_experiment(spec).to_csv().splitlines()
    assert rows[0] == "setting,fraction,method,T,N=20,N=30"
    assert rows[1].startswith("null,0.0,one_shot,40,")
    assert rows[2].startswith("null,0.0,one_shot,60,") and rows[2].endswith(",")


def test_failures_carry_seed():
    spec = ExperimentSpec(DgpConfig(), grid=[(10, 30)], replications=2, panel_hook=break_panel)
    with pytest.raises(ReplicationError) as info:
        run_experiment(spec)
    assert info.value.seed == replication_seeds(0, 0, 0)[0]


@pytest.mark.parametrize("kwargs", [dict(grid=[]), dict(replications=0), dict(grid=[(0, 10)])])
def test_spec_validation(kwargs):
    base = dict(dgp=DgpConfig(), grid=[(10, 20)], replications=1)
    base.update(kwargs)
    with pytest.raises(InvalidConfig):
        ExperimentSpec(**base)
