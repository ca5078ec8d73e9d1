"""Randomized zero-alpha test for linear factor pricing models."""

from .alpha_test import (TestConfig, TestOutcome, compute_psi, critical_value,
                         gumbel_cdf, norming_constants, p_value, run_one_shot)
from .derandomize import DerandConfig, DerandReport, run_derandomized
from .dgp import DgpConfig, SimulatedPanel, generate, sample_moments_check
from .estimators import fit_fama_macbeth, fit_ols, fit_pca
from .harness import ExperimentReport, ExperimentSpec, power_curve, run_experiment
from .ingest import build_returns, read_security_csv, run_rolling, write_q_series
from .panel import AlphaFit, FactorPanel, ReturnPanel, validate_panel

__version__ = "0.1.0"

__all__ = [
    "AlphaFit", "DerandConfig", "DerandReport", "DgpConfig", "ExperimentReport",
    "ExperimentSpec", "FactorPanel", "ReturnPanel", "SimulatedPanel", "TestConfig",
    "TestOutcome", "build_returns", "compute_psi", "critical_value", "fit_fama_macbeth",
    "fit_ols", "fit_pca", "generate", "gumbel_cdf", "norming_constants", "p_value",
    "power_curve", "read_security_csv", "run_derandomized", "run_experiment",
    "run_one_shot", "run_rolling", "sample_moments_check", "validate_panel",
    "write_q_series",
]
