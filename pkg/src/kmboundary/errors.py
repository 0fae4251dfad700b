"""Exception types raised across the package."""

from __future__ import annotations


class KMBoundaryError(Exception):
    """Base class for all package errors."""


# lattices
class NotSymmetric(KMBoundaryError):
    pass


class Degenerate(KMBoundaryError):
    pass


class NotEven(KMBoundaryError):
    pass


# monodromy
class NotIsometry(KMBoundaryError):
    pass


class NotQuasiUnipotent(KMBoundaryError):
    pass


class NotNilpotentOrder3(KMBoundaryError):
    pass


class NotWeightFiltration(KMBoundaryError):
    """The closed-form filtration fails the weight-filtration property."""


class InvariantInconsistency(KMBoundaryError):
    pass


class TypeMismatch(KMBoundaryError):
    pass


class NotIsotropic(KMBoundaryError):
    pass


class NotPerp(KMBoundaryError):
    pass


# modular forms
class NotPositiveDefinite(KMBoundaryError):
    pass


class NegativeArgument(KMBoundaryError, ValueError):
    pass


class WrongRank(KMBoundaryError):
    pass


class NotHolomorphicInput(KMBoundaryError):
    pass


class PathTruncationFailure(KMBoundaryError):
    pass


class TruncationBudgetExceeded(KMBoundaryError):
    pass


class RankTooSmall(KMBoundaryError):
    pass


class WeightMismatch(KMBoundaryError):
    pass


class ClassIndexMismatch(KMBoundaryError):
    pass


# orbit models
class NotInW2(KMBoundaryError):
    pass


class CutoffTooSmall(KMBoundaryError):
    pass


class FitUnstable(KMBoundaryError):
    pass


class InvalidOrbitModel(KMBoundaryError):
    pass


# configuration
class ConfigError(KMBoundaryError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
