"""Exception hierarchy.

Every error raised on purpose by the package derives from ``ZeroAlphaError``
so callers (and the CLI) can catch one type.
"""

from __future__ import annotations


class ZeroAlphaError(ValueError):
    """Base class for all package errors."""


# linear algebra
class SingularMatrix(ZeroAlphaError):
    pass


class NoConvergence(ZeroAlphaError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class InvalidK(ZeroAlphaError):
    pass


# estimation
class SingularFactorCovariance(ZeroAlphaError):
    pass


class SingularBetaGram(ZeroAlphaError):
    pass


class DegenerateScale(ZeroAlphaError):
    pass


class InvalidPanel(ZeroAlphaError):
    pass


# testing
class DeltaOutOfRange(ZeroAlphaError):
    pass


class NTooSmall(ZeroAlphaError):
    pass


class InvalidTau(ZeroAlphaError):
    pass


class InvalidNu(ZeroAlphaError):
    pass


class BTooSmallForLIL(ZeroAlphaError):
    pass


# random numbers / simulation
class InvalidDf(ZeroAlphaError):
    pass


class InvalidConfig(ZeroAlphaError):
    pass


class ReplicationError(ZeroAlphaError):
    """A Monte Carlo replication failed; carries the seed that reproduces it."""

    def __init__(self, message: str, seed: int, cell: int, replication: int):
        super().__init__(message)
        self.seed = seed
        self.cell = cell
        self.replication = replication


# ingestion
class NonPositivePrice(ZeroAlphaError):
    pass


class MissingRiskFree(ZeroAlphaError):
    pass


class WindowTooShort(ZeroAlphaError):
    pass


class NoSurvivingSecurities(ZeroAlphaError):
    pass


class SchemaError(ZeroAlphaError):
    pass
