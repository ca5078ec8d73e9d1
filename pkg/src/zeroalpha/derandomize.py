"""De-randomized decision: repeat the randomized test and count retentions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alpha_test import TestConfig, compute_psi, critical_value, draw_omega
from .errors import BTooSmallForLIL, InvalidConfig
from .panel import AlphaFit
from .rng import derive_seed

LIL = "LIL"
FOFB = "FofB"
RETAIN = "RetainNull"
REJECT = "RejectNull"

LIL_MIN_B = 16


@dataclass(frozen=True)
class DerandConfig:
    """``b_count=0`` means B = round(log(N)**2), rounding half up."""

    tau: float = 0.05
    b_count: int = 0
    threshold: str = FOFB
    master_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise InvalidConfig(f"tau must lie in (0, 1), got {self.tau}")
        if self.b_count < 0:
            raise InvalidConfig("b_count must be >= 0")
        if self.threshold not in (LIL, FOFB):
            raise InvalidConfig(f"threshold must be {LIL!r} or {FOFB!r}")

    def resolve_b(self, n: int) -> int:
        return self.b_count if self.b_count > 0 else auto_b(n)


@dataclass(frozen=True)
class DerandReport:
    q_value: float
    threshold_value: float
    decision: str
    per_rep_z: np.ndarray
    b_used: int
    tau: float
    critical_value: float
    threshold: str

    @property
    def reject(self) -> bool:
        return self.decision == REJECT

    def to_dict(self) -> dict:
        return {
            "q_value": self.q_value,
            "threshold_value": self.threshold_value,
            "threshold": self.threshold,
            "decision": self.decision,
            "b_used": self.b_used,
            "tau": self.tau,
            "critical_value": self.critical_value,
            "per_rep_z": self.per_rep_z.tolist(),
        }


def auto_b(n: int) -> int:
    return max(1, int(math.floor(math.log(n) ** 2 + 0.5)))


def lil_threshold(b: int, tau: float) -> float:
    if b < LIL_MIN_B:
        raise BTooSmallForLIL(f"LIL threshold needs B >= {LIL_MIN_B}, got B={b}")
    return (1.0 - tau) - math.sqrt(tau * (1.0 - tau)) * math.sqrt(2.0 * math.log(math.log(b)) / b)


def fofb_threshold(b: int, tau: float) -> float:
    return (1.0 - tau) - b ** -0.25


def threshold_value(kind: str, b: int, tau: float) -> float:
    return lil_threshold(b, tau) if kind == LIL else fofb_threshold(b, tau)


def retain_fraction(z_values, crit: float) -> float:
    """Share of replications whose maximum does not exceed the critical value."""
    z = np.asarray(z_values, dtype=np.float64)
    return int(np.count_nonzero(z <= crit)) / z.shape[0]


def replication_seed(master_seed: int, b: int) -> int:
    return derive_seed(master_seed, b)


def replication_max(psi: np.ndarray, master_seed: int, b: int) -> float:
    return float(np.max(psi + draw_omega(replication_seed(master_seed, b), psi.shape[0])))


def derandomized_from_psi(psi: np.ndarray, tau: float, cfg: DerandConfig) -> DerandReport:
    psi = np.asarray(psi, dtype=np.float64)
    n = psi.shape[0]
    b = cfg.resolve_b(n)
    thr = threshold_value(cfg.threshold, b, tau)
    crit = critical_value(n, tau)
    z = np.array([replication_max(psi, cfg.master_seed, j) for j in range(b)])
    q = retain_fraction(z, crit)
    decision = RETAIN if q >= thr else REJECT
    return DerandReport(q, thr, decision, z, b, tau, crit, cfg.threshold)


def run_derandomized(fit: AlphaFit, test_cfg: TestConfig,
                     cfg: Optional[DerandConfig] = None) -> DerandReport:
    """De-randomized decision for a fitted model.

    psi is computed once; replication ``b`` perturbs it with the normals of
    seed ``derive_seed(cfg.master_seed, b)``. The nominal level comes from
    ``test_cfg.tau`` and must agree with ``cfg.tau``.
    """
    cfg = cfg or DerandConfig(tau=test_cfg.tau)
    if cfg.tau != test_cfg.tau:
        raise InvalidConfig(f"tau mismatch: test {test_cfg.tau} vs derand {cfg.tau}")
    psi = compute_psi(fit, test_cfg)
    return derandomized_from_psi(psi, test_cfg.tau, cfg)
