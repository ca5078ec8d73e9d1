"""Command-line interface.

Subcommands::

    zeroalpha test         one-shot or de-randomized test on a return panel
    zeroalpha simulate     Monte Carlo rejection-frequency tables
    zeroalpha power-curve  rejection frequency vs. mispriced fraction
    zeroalpha rolling      rolling-window Q series on a return panel

Exit codes: 0 success / null retained, 3 null rejected (``test`` only),
1 any error. stdout carries the report path and a one-line summary;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import fields
from pathlib import Path

import numpy as np

from .alpha_test import TestConfig, run_one_shot
from .derandomize import DerandConfig, run_derandomized
from .dgp import DgpConfig
from .errors import ZeroAlphaError
from .estimators import fit
from .harness import ExperimentSpec, default_workers, power_curve, run_experiment
from .ingest import (MODELS, FactorPanel, align_factors, read_factor_csv,
                     read_returns_csv, run_rolling, write_q_series)

log = logging.getLogger("zeroalpha")

EXIT_RETAIN, EXIT_ERROR, EXIT_REJECT = 0, 1, 3

_TEST_KEYS = {"returns", "factors", "estimator", "k", "nu", "tau", "delta", "mode",
              "b_count", "threshold", "seed"}
_ROLLING_KEYS = {"returns", "factors", "model", "window", "nu", "tau", "b_count",
                 "threshold", "seed", "threshold_line"}
_SPEC_KEYS = {"dgp", "grid", "replications", "test", "derand", "power_fractions",
              "seed", "pca_k"}
_DGP_KEYS = {f.name for f in fields(DgpConfig)} - {"n", "t", "seed"}
_TESTCFG_KEYS = {"nu", "tau", "delta"}
_DERAND_KEYS = {"b_count", "threshold"}


class ConfigError(ZeroAlphaError):
    pass


def _strict(doc: dict, allowed: set, where: str) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return doc


def load_config(path, allowed: set) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return _strict(doc, allowed, str(path))


def spec_from_dict(doc: dict, seed=None, workers: int = 1) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from its JSON form (strict keys)."""
    _strict(doc, _SPEC_KEYS, "spec")
    for key in ("dgp", "grid", "replications"):
        if key not in doc:
            raise ConfigError(f"spec: missing required key {key!r}")
    dgp = DgpConfig(**_strict(doc["dgp"], _DGP_KEYS, "spec.dgp"))
    test = TestConfig(**_strict(doc.get("test", {}), _TESTCFG_KEYS, "spec.test"))
    derand = None
    if doc.get("derand") is not None:
        d = _strict(doc["derand"], _DERAND_KEYS, "spec.derand")
        derand = DerandConfig(tau=test.tau, **d)
    grid = [tuple(int(x) for x in cell) for cell in doc["grid"]]
    return ExperimentSpec(
        dgp=dgp, grid=grid, replications=int(doc["replications"]), test=test,
        derand=derand, power_fractions=doc.get("power_fractions"),
        seed=int(doc.get("seed", 0) if seed is None else seed),
        workers=workers, pca_k=int(doc.get("pca_k", 3)))


def _merge(cfg: dict, args: argparse.Namespace, keys: set) -> dict:
    out = dict(cfg)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _emit(out: Path, payload: dict) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def cmd_test(args) -> int:
    cfg = _merge(load_config(args.config, _TEST_KEYS), args, _TEST_KEYS)
    if "returns" not in cfg:
        raise ConfigError("--returns is required")
    estimator = str(cfg.get("estimator", "ols")).upper()
    estimator = {"PCA": "PC"}.get(estimator, estimator)
    panel = read_returns_csv(cfg["returns"])
    if np.isnan(panel.excess_returns).any():
        raise ConfigError("returns contain missing values; the test needs a complete panel")
    if estimator == "PC":
        factors = FactorPanel.empty(panel.t)
    else:
        if "factors" not in cfg:
            raise ConfigError("--factors is required for the ols and fm estimators")
        factors = align_factors(panel, read_factor_csv(cfg["factors"]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        test_cfg = TestConfig(nu=float(cfg.get("nu", 5.0)), tau=float(cfg.get("tau", 0.05)),
                              delta=cfg.get("delta"), seed=int(cfg.get("seed", 0)))
    fitted = fit(panel, factors, estimator, cfg.get("k"))
    mode = cfg.get("mode", "derand")
    if mode == "one-shot":
        outcome = run_one_shot(fitted, test_cfg)
        payload = {"mode": mode, "outcome": outcome.to_dict()}
        reject = outcome.reject
        summary = f"one-shot Z={outcome.z_max:.4f} c={outcome.critical_value:.4f} p={outcome.p_value:.4g}"
    elif mode == "derand":
        dcfg = DerandConfig(tau=test_cfg.tau, b_count=int(cfg.get("b_count", 0)),
                            threshold=cfg.get("threshold", "FofB"), master_seed=test_cfg.seed)
        report = run_derandomized(fitted, test_cfg, dcfg)
        payload = {"mode": mode, "report": report.to_dict()}
        reject = report.reject
        summary = f"derand Q={report.q_value:.4f} threshold={report.threshold_value:.4f} B={report.b_used}"
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    payload.update(estimator=estimator, n=panel.n, t=panel.t, nu=test_cfg.nu, tau=test_cfg.tau)
    out = Path(args.out or "zeroalpha_test.json")
    _emit(out, payload)
    print(out)
    print(f"{'REJECT' if reject else 'RETAIN'} {summary}")
    return EXIT_REJECT if reject else EXIT_RETAIN


def _load_spec(args) -> ExperimentSpec:
    if args.config is None:
        raise ConfigError("--config spec file is required")
    with open(args.config, encoding="utf-8") as fh:
        doc = json.load(fh)
    return spec_from_dict(doc, seed=args.seed, workers=args.threads or default_workers())


def _write_report(report, out: Path, stem: str) -> tuple[Path, Path]:
    out.mkdir(parents=True, exist_ok=True)
    jpath = out / f"{stem}.json"
    cpath = out / f"{stem}.csv"
    jpath.write_text(report.to_json(include_timing=False), encoding="utf-8")
    cpath.write_text(report.to_csv(), encoding="utf-8")
    timing = {f"{c.setting}/{c.fraction}/N={c.n}/T={c.t}": c.wall_time for c in report.cells}
    (out / f"{stem}_timing.json").write_text(json.dumps(timing, indent=2), encoding="utf-8")
    return jpath, cpath


def cmd_simulate(args) -> int:
    spec = _load_spec(args)
    report = run_experiment(spec)
    jpath, _ = _write_report(report, Path(args.out or "zeroalpha_sim"), "experiment")
    print(jpath)
    rates = ", ".join(f"N={c.n},T={c.t}:{c.rejection_rate_one_shot:.3f}" for c in report.cells)
    print(f"one-shot rejection rates {rates}")
    return EXIT_RETAIN


def cmd_power_curve(args) -> int:
    spec = _load_spec(args)
    report = power_curve(spec)
    _, cpath = _write_report(report, Path(args.out or "zeroalpha_power"), "power_curve")
    print(cpath)
    print("power " + ", ".join(f"{c.fraction:g}:{c.rejection_rate_one_shot:.3f}" for c in report.cells))
    return EXIT_RETAIN


def cmd_rolling(args) -> int:
    cfg = _merge(load_config(args.config, _ROLLING_KEYS), args, _ROLLING_KEYS)
    for key in ("returns", "factors"):
        if key not in cfg:
            raise ConfigError(f"--{key} is required")
    model = cfg.get("model", "FF3")
    if isinstance(model, str):
        if model.upper() in MODELS:
            names = MODELS[model.upper()]
        else:
            names = tuple(s.strip() for s in model.split(",") if s.strip())
    else:
        names = tuple(model)
    panel = read_returns_csv(cfg["returns"])
    factors = read_factor_csv(cfg["factors"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        test_cfg = TestConfig(nu=float(cfg.get("nu", 4.0)), tau=float(cfg.get("tau", 0.05)),
                              seed=int(cfg.get("seed", 0)))
    dcfg = DerandConfig(tau=test_cfg.tau, b_count=int(cfg.get("b_count", 0)),
                        threshold=cfg.get("threshold", "FofB"), master_seed=test_cfg.seed)
    result = run_rolling(panel, factors, int(cfg.get("window", 60)), test_cfg, dcfg, names)
    out = Path(args.out or "zeroalpha_rolling.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_q_series(result, out, cfg.get("threshold_line"))
    n_rej = sum(d == "RejectNull" for d in result.decisions)
    print(out)
    print(f"{len(result.decisions)} windows, {n_rej} rejected")
    return EXIT_RETAIN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zeroalpha", description=__doc__.split("\n\n")[0])
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (unknown keys are rejected)")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, help="worker processes (default: all cores)")
        p.add_argument("--out", help="output path")

    p = sub.add_parser("test", help="test a return panel for zero alphas")
    common(p)
    p.add_argument("--returns")
    p.add_argument("--factors")
    p.add_argument("--estimator", choices=["ols", "fm", "pca"])
    p.add_argument("--k", type=int, help="number of latent factors (pca)")
    p.add_argument("--nu", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--mode", choices=["one-shot", "derand"])
    p.add_argument("--b-count", dest="b_count", type=int)
    p.add_argument("--threshold", choices=["LIL", "FofB"])
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="Monte Carlo rejection frequencies")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("power-curve", help="power against the mispriced fraction")
    common(p)
    p.set_defaults(func=cmd_power_curve)

    p = sub.add_parser("rolling", help="rolling-window Q series")
    common(p)
    p.add_argument("--returns")
    p.add_argument("--factors")
    p.add_argument("--model", help="CAPM, FF2..FF6 or a comma-separated factor list")
    p.add_argument("--window", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--b-count", dest="b_count", type=int)
    p.add_argument("--threshold", choices=["LIL", "FofB"])
    p.add_argument("--threshold-line", dest="threshold_line", type=float)
    p.set_defaults(func=cmd_rolling)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ZeroAlphaError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
