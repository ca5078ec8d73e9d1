"""CSV ingestion, return construction and the rolling-window pipeline.

File formats (UTF-8, header row, ``.`` decimal point, empty cell = missing):

* prices (schema A): ``date, rf, <asset>_P, <asset>_DY, ...``
* returns (schema B): ``date, rf, <asset>, ...`` -- total returns; the
  excess return is ``r - rf``
* factors: ``date, MKT, SMB, HML, RMW, CMA, MOM`` (any subset)
* Q series output: ``window_end, q_value, threshold, decision``

Floats are written with ``repr`` so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .alpha_test import TestConfig, compute_psi
from .derandomize import RETAIN, REJECT, DerandConfig, derandomized_from_psi
from .errors import (InvalidPanel, MissingRiskFree, NonPositivePrice,
                     NoSurvivingSecurities, SchemaError, WindowTooShort)
from .estimators import fit_ols
from .panel import FactorPanel, ReturnPanel
from .rng import derive_seed

FACTOR_NAMES = ("MKT", "SMB", "HML", "RMW", "CMA", "MOM")
MODELS = {
    "CAPM": ("MKT",),
    "FF2": ("MKT", "MOM"),
    "FF3": ("MKT", "SMB", "HML"),
    "FF4": ("MKT", "SMB", "HML", "MOM"),
    "FF5": ("MKT", "SMB", "HML", "RMW", "CMA"),
    "FF6": ("MKT", "SMB", "HML", "RMW", "CMA", "MOM"),
}


@dataclass(frozen=True)
class RawSecurityFile:
    """Parsed security file; ``prices``/``dividend_yields`` for schema A,
    ``returns`` for schema B. Matrices are N x T with NaN for missing."""

    schema: str
    dates: tuple
    assets: tuple
    rf: np.ndarray
    prices: Optional[np.ndarray] = None
    dividend_yields: Optional[np.ndarray] = None
    returns: Optional[np.ndarray] = None


@dataclass(frozen=True)
class RollingResult:
    window_ends: tuple
    q_values: np.ndarray
    decisions: tuple
    n_per_window: Optional[np.ndarray]
    thresholds: np.ndarray
    window_starts: Optional[tuple] = None


def _cell(value: str, where: str) -> float:
    value = value.strip()
    if value == "":
        return math.nan
    try:
        return float(value)
    except ValueError:
        raise SchemaError(f"non-numeric value {value!r} at {where}") from None


def _date_key(labels: Sequence[str]):
    try:
        return [float(d) for d in labels]
    except ValueError:
        return list(labels)


def _check_dates(dates: Sequence[str], path) -> None:
    keys = _date_key(dates)
    for a, b in zip(keys, keys[1:]):
        if not a < b:
            raise SchemaError(f"{path}: dates must be strictly increasing ({a!r} then {b!r})")


def _read_table(path) -> tuple[list[str], list[str], np.ndarray]:
    """Header columns after ``date``, date labels, and a T x C float matrix."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0].lower() != "date":
        raise SchemaError(f"{path}: first column must be 'date'")
    cols = header[1:]
    if len(set(cols)) != len(cols):
        raise SchemaError(f"{path}: duplicated column names")
    dates, data = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        dates.append(row[0].strip())
        data.append([_cell(v, f"{path}:{lineno}") for v in row[1:]])
    if not dates:
        raise SchemaError(f"{path}: no data rows")
    _check_dates(dates, path)
    return cols, dates, np.array(data, dtype=np.float64).reshape(len(dates), len(cols))


def read_security_csv(path) -> RawSecurityFile:
    cols, dates, data = _read_table(path)
    if not cols or cols[0].lower() != "rf":
        raise SchemaError(f"{path}: second column must be 'rf'")
    rf = data[:, 0]
    rest = cols[1:]
    if rest and all(c.endswith("_P") or c.endswith("_DY") for c in rest):
        assets = []
        for c in rest:
            if c.endswith("_P"):
                assets.append(c[:-2])
        if len(set(assets)) != len(assets):
            raise SchemaError(f"{path}: duplicated asset identifiers")
        prices = np.empty((len(assets), len(dates)))
        dys = np.empty_like(prices)
        for i, a in enumerate(assets):
            if f"{a}_DY" not in rest:
                raise SchemaError(f"{path}: asset {a} has a price but no dividend-yield column")
            prices[i] = data[:, 1 + rest.index(f"{a}_P")]
            dys[i] = data[:, 1 + rest.index(f"{a}_DY")]
        if len(rest) != 2 * len(assets):
            raise SchemaError(f"{path}: dividend-yield column without matching price column")
        return RawSecurityFile("prices", tuple(dates), tuple(assets), rf, prices=prices,
                               dividend_yields=dys)
    if any(c.endswith("_P") or c.endswith("_DY") for c in rest):
        raise SchemaError(f"{path}: mixes price/yield columns with return columns")
    return RawSecurityFile("returns", tuple(dates), tuple(rest), rf, returns=data[:, 1:].T.copy())


def build_returns(raw: RawSecurityFile) -> ReturnPanel:
    """Excess returns in percent per period; NaN marks missing cells.

    For prices, ``r_t = 100 (P_t - P_{t-1}) / P_{t-1} + DY_t / 12`` and the
    first date is dropped.
    """
    if raw.schema == "prices":
        p = raw.prices
        if np.any(p[~np.isnan(p)] <= 0.0):
            raise NonPositivePrice("prices must be strictly positive")
        if p.shape[1] < 2:
            raise InvalidPanel("need at least two dates to build returns")
        r = 100.0 * (p[:, 1:] - p[:, :-1]) / p[:, :-1] + raw.dividend_yields[:, 1:] / 12.0
        rf = raw.rf[1:]
        dates = raw.dates[1:]
    else:
        r = raw.returns
        rf = raw.rf
        dates = raw.dates
    if np.any(np.isnan(rf)):
        bad = [dates[j] for j in np.flatnonzero(np.isnan(rf))]
        raise MissingRiskFree(f"risk-free rate missing on {bad[:5]}")
    excess = r - rf[None, :]
    keep = ~np.all(np.isnan(excess), axis=1)
    assets = [a for a, k in zip(raw.assets, keep) if k]
    return ReturnPanel(excess[keep], assets, dates, allow_missing=True)


def read_factor_csv(path) -> FactorPanel:
    cols, dates, data = _read_table(path)
    if np.any(np.isnan(data)):
        raise SchemaError(f"{path}: factor file has missing values")
    return FactorPanel(data.T, tuple(cols), tuple(dates))


def align_factors(panel: ReturnPanel, factors: FactorPanel) -> FactorPanel:
    """Factor columns matching the panel's dates, in panel order."""
    if factors.dates is None:
        if factors.t != panel.t:
            raise InvalidPanel("factor panel has no dates and a different length")
        return factors
    pos = {d: j for j, d in enumerate(factors.dates)}
    missing = [d for d in panel.dates if d not in pos]
    if missing:
        raise InvalidPanel(f"factors missing for dates {missing[:5]}")
    return factors.window([pos[d] for d in panel.dates])


def write_returns_csv(panel: ReturnPanel, path, rf: Optional[np.ndarray] = None) -> None:
    """Schema-B file; with ``rf=None`` a zero risk-free column is written."""
    rf = np.zeros(panel.t) if rf is None else np.asarray(rf, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "rf", *panel.assets])
        y = panel.excess_returns
        for j, d in enumerate(panel.dates):
            w.writerow([d, repr(float(rf[j]))] + ["" if np.isnan(v) else repr(float(v + rf[j])) for v in y[:, j]])


def write_factor_csv(factors: FactorPanel, path, dates: Optional[Sequence[str]] = None) -> None:
    dates = dates if dates is not None else (factors.dates or [str(j + 1) for j in range(factors.t)])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *factors.names])
        for j, d in enumerate(dates):
            w.writerow([d] + [repr(float(v)) for v in factors.values[:, j]])


def read_returns_csv(path) -> ReturnPanel:
    return build_returns(read_security_csv(path))


def run_rolling(panel: ReturnPanel, factors: FactorPanel, window: int,
                test: TestConfig, derand: DerandConfig,
                model_spec: Optional[Sequence[str]] = None) -> RollingResult:
    """De-randomized test on every ``window``-period span (stride 1).

    Within a window, assets with any missing return are dropped before the
    OLS fit. Window ``w`` uses master seed ``derive_seed(derand.master_seed, w)``.
    """
    if model_spec is not None:
        factors = factors.subset(list(model_spec))
    factors = align_factors(panel, factors)
    total = panel.t
    if window > total:
        raise WindowTooShort(f"window {window} exceeds the {total} available periods")
    if window < factors.k + 2:
        raise WindowTooShort(f"window {window} too short for {factors.k} factors")
    y_all = panel.excess_returns
    ends, starts, qs, decisions, ns, thresholds = [], [], [], [], [], []
    for w in range(total - window + 1):
        cols = np.arange(w, w + window)
        rows = np.flatnonzero(~np.any(np.isnan(y_all[:, cols]), axis=1))
        if rows.size < 3:
            raise NoSurvivingSecurities(
                f"window ending {panel.dates[cols[-1]]}: {rows.size} complete assets (need 3)")
        sub = panel.select(rows, cols)
        sub = ReturnPanel(sub.excess_returns, sub.assets, sub.dates)
        fitted = fit_ols(sub, factors.window(cols))
        psi = compute_psi(fitted, test)
        cfg = DerandConfig(test.tau, derand.b_count, derand.threshold,
                           derive_seed(derand.master_seed, w))
        rep = derandomized_from_psi(psi, test.tau, cfg)
        starts.append(panel.dates[cols[0]])
        ends.append(panel.dates[cols[-1]])
        qs.append(rep.q_value)
        decisions.append(rep.decision)
        ns.append(rows.size)
        thresholds.append(rep.threshold_value)
    return RollingResult(tuple(ends), np.array(qs), tuple(decisions), np.array(ns),
                         np.array(thresholds), tuple(starts))


def write_q_series(result: RollingResult, path, threshold: Optional[float] = None) -> Path:
    """Plot-ready CSV; with ``threshold`` given, decisions are re-derived from it."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["window_end", "q_value", "threshold", "decision"])
        for j, end in enumerate(result.window_ends):
            thr = float(result.thresholds[j]) if threshold is None else float(threshold)
            q = float(result.q_values[j])
            w.writerow([end, repr(q), repr(thr), RETAIN if q >= thr else REJECT])
    return path


def read_q_series(path) -> RollingResult:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["window_end", "q_value", "threshold", "decision"]:
        raise SchemaError(f"{path}: not a Q-series file")
    body = rows[1:]
    return RollingResult(
        window_ends=tuple(r[0] for r in body),
        q_values=np.array([float(r[1]) for r in body]),
        decisions=tuple(r[3] for r in body),
        n_per_window=None,
        thresholds=np.array([float(r[2]) for r in body]),
    )
