"""Monte Carlo rejection-frequency experiments.

Replication ``m`` of grid cell ``c`` draws everything from seeds derived
from ``(spec.seed, c, m)``, so results do not depend on how replications
are scheduled across worker processes. Power curves reuse the same cell
seeds for every mispricing fraction: the mispriced sets are nested and the
noise is shared, which keeps the curve smooth.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .alpha_test import TestConfig, compute_psi, one_shot_from_psi
from .derandomize import DerandConfig, derandomized_from_psi
from .dgp import DgpConfig, generate
from .errors import InvalidConfig, ReplicationError, ZeroAlphaError
from .estimators import fit_fama_macbeth, fit_ols, fit_pca
from .rng import derive_seed

_DGP_SEED, _TEST_SEED, _DERAND_SEED = 0, 1, 2

ESTIMATOR_FOR_MODEL = {"tradable": "OLS", "non_tradable": "FM", "latent": "PC"}


@dataclass(frozen=True)
class ExperimentSpec:
    dgp: DgpConfig
    grid: Sequence[tuple[int, int]]
    replications: int
    test: TestConfig = field(default_factory=TestConfig)
    derand: Optional[DerandConfig] = None
    power_fractions: Optional[Sequence[float]] = None
    seed: int = 0
    workers: int = 1
    pca_k: int = 3
    # called on every simulated panel before fitting; must be picklable
    panel_hook: Optional[Callable] = None

    def __post_init__(self):
        if self.replications < 1:
            raise InvalidConfig("replications must be >= 1")
        if not self.grid:
            raise InvalidConfig("grid must not be empty")
        for cell in self.grid:
            if len(cell) != 2 or min(cell) < 1:
                raise InvalidConfig(f"bad grid cell {cell!r}")
        if self.workers < 1:
            raise InvalidConfig("workers must be >= 1")


@dataclass(frozen=True)
class CellResult:
    n: int
    t: int
    setting: str
    fraction: float
    estimator: str
    replications: int
    rejections_one_shot: int
    rejection_rate_one_shot: float
    mc_std_error: float
    rejections_derand: Optional[int]
    rejection_rate_derand: Optional[float]
    wall_time: float


@dataclass(frozen=True)
class ExperimentReport:
    cells: list

    def to_dict(self, include_timing: bool = True) -> dict:
        cells = []
        for c in self.cells:
            d = asdict(c)
            if not include_timing:
                d.pop("wall_time")
            cells.append(d)
        return {"cells": cells}

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        """Tables with one block per (setting, method), rows T and columns N."""
        ns = sorted({c.n for c in self.cells})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setting", "fraction", "method", "T"] + [f"N={n}" for n in ns])
        methods = ["one_shot"]
        if any(c.rejection_rate_derand is not None for c in self.cells):
            methods.append("derand")
        keys = sorted({(c.setting, c.fraction) for c in self.cells}, key=lambda k: (k[1], k[0]))
        for setting, frac in keys:
            for method in methods:
                for t in sorted({c.t for c in self.cells}):
                    row = [setting, frac, method, t]
                    for n in ns:
                        hit = [c for c in self.cells if (c.setting, c.fraction, c.n, c.t) == (setting, frac, n, t)]
                        if not hit:
                            row.append("")
                            continue
                        c = hit[0]
                        rate = c.rejection_rate_one_shot if method == "one_shot" else c.rejection_rate_derand
                        row.append("" if rate is None else repr(rate))
                    w.writerow(row)
        return buf.getvalue()


def _fit(panel, dgp: DgpConfig, pca_k: int):
    if dgp.model_kind == "tradable":
        return fit_ols(panel.returns, panel.factors)
    if dgp.model_kind == "non_tradable":
        return fit_fama_macbeth(panel.returns, panel.factors)
    return fit_pca(panel.returns, pca_k)


def replication_seeds(seed: int, cell: int, rep: int) -> tuple[int, int, int]:
    """(dgp, test, derand) seeds of one replication."""
    return (derive_seed(seed, cell, rep, _DGP_SEED),
            derive_seed(seed, cell, rep, _TEST_SEED),
            derive_seed(seed, cell, rep, _DERAND_SEED))


def run_replication(spec: ExperimentSpec, cell: int, dgp: DgpConfig,
                    rep: int) -> tuple[bool, Optional[bool]]:
    dgp_seed, test_seed, derand_seed = replication_seeds(spec.seed, cell, rep)
    try:
        panel = generate(dgp.with_(seed=dgp_seed))
        if spec.panel_hook is not None:
            panel = spec.panel_hook(panel)
        fitted = _fit(panel, dgp, spec.pca_k)
        psi = compute_psi(fitted, spec.test)
        one = one_shot_from_psi(psi, spec.test.with_seed(test_seed), fitted.estimator).reject
        der = None
        if spec.derand is not None:
            cfg = DerandConfig(spec.test.tau, spec.derand.b_count,
                               spec.derand.threshold, derand_seed)
            der = derandomized_from_psi(psi, spec.test.tau, cfg).reject
    except ZeroAlphaError as exc:
        raise ReplicationError(
            f"replication {rep} of cell {cell} failed (dgp seed {dgp_seed}): {exc}",
            dgp_seed, cell, rep) from exc
    return one, der


def _run_block(args):
    spec, cell, dgp, reps = args
    start = time.perf_counter()
    out = [run_replication(spec, cell, dgp, r) for r in reps]
    return cell, dgp.alpha_fraction if dgp.alpha_scheme != "null" else 0.0, list(reps), out, time.perf_counter() - start


def _cell_configs(spec: ExperimentSpec, fractions: Optional[Sequence[float]]):
    """(cell index, fraction, dgp config) triples."""
    out = []
    for ci, (n, t) in enumerate(spec.grid):
        base = spec.dgp.with_(n=n, t=t)
        if fractions is None:
            out.append((ci, base.alpha_fraction if base.alpha_scheme != "null" else 0.0, base))
            continue
        for frac in fractions:
            if frac == 0:
                out.append((ci, 0.0, base.with_(alpha_scheme="null")))
            else:
                out.append((ci, float(frac), base.with_(alpha_scheme="sparse_normal", alpha_fraction=float(frac))))
    return out


def _execute(spec: ExperimentSpec, fractions=None) -> ExperimentReport:
    configs = _cell_configs(spec, fractions)
    m = spec.replications
    n_blocks = max(1, min(m, spec.workers * 4)) if spec.workers > 1 else 1
    bounds = np.linspace(0, m, n_blocks + 1).astype(int)
    tasks = []
    for ci, frac, dgp in configs:
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi > lo:
                tasks.append((spec, ci, dgp, range(int(lo), int(hi))))
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_block, tasks))
    else:
        results = [_run_block(task) for task in tasks]

    # deterministic reduce keyed by (cell, fraction, replication)
    collected: dict = {}
    timing: dict = {}
    for cell, frac, reps, outs, elapsed in results:
        slot = collected.setdefault((cell, frac), {})
        for r, o in zip(reps, outs):
            slot[r] = o
        timing[(cell, frac)] = timing.get((cell, frac), 0.0) + elapsed

    cells = []
    for ci, frac, dgp in configs:
        slot = collected[(ci, frac)]
        outs = [slot[r] for r in range(m)]
        k1 = sum(1 for o in outs if o[0])
        r1 = k1 / m
        kd = None if spec.derand is None else sum(1 for o in outs if o[1])
        cells.append(CellResult(
            n=dgp.n, t=dgp.t,
            setting="null" if dgp.alpha_scheme == "null" else "alternative",
            fraction=frac,
            estimator=ESTIMATOR_FOR_MODEL[dgp.model_kind],
            replications=m,
            rejections_one_shot=k1,
            rejection_rate_one_shot=r1,
            mc_std_error=math.sqrt(r1 * (1.0 - r1) / m),
            rejections_derand=kd,
            rejection_rate_derand=None if kd is None else kd / m,
            wall_time=timing[(ci, frac)],
        ))
    return ExperimentReport(cells)


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Rejection frequencies for every grid cell of the template design."""
    return _execute(spec)


def power_curve(spec: ExperimentSpec) -> ExperimentReport:
    """Rejection frequency as a function of the mispriced fraction."""
    if not spec.power_fractions:
        raise InvalidConfig("power_fractions must be non-empty")
    for frac in spec.power_fractions:
        if not 0.0 <= frac <= 1.0:
            raise InvalidConfig(f"fraction {frac} outside [0, 1]")
    return _execute(spec, list(spec.power_fractions))


def default_workers() -> int:
    return os.cpu_count() or 1
