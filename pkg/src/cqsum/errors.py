"""Exception hierarchy and enumeration budgets."""

from dataclasses import dataclass


class CqsumError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(CqsumError, ValueError):
    """Arguments are inconsistent (dimension or modulus mismatch, bad option)."""


class ValidationError(CqsumError, ValueError):
    """An operator, pmf or channel fails its numerical invariants."""


class DomainError(CqsumError, ArithmeticError):
    """Operation undefined for the given value, e.g. inverting zero in F_q."""


class ResourceError(CqsumError):
    """A configured enumeration or dimension budget would be exceeded."""


@dataclass(frozen=True)
class Budget:
    """Hard limits on exact enumeration.

    dim:   largest Hilbert-space dimension d**n handled densely.
    terms: largest number q**(k+l) of POVM terms in one code.
    enum:  largest number of sequences/candidates enumerated in one call.
    grid:  largest number of grid points in one rate optimisation.
    """

    dim: int = 2**14
    terms: int = 2**16
    enum: int = 2**22
    grid: int = 2**22

    def check(self, kind: str, needed: int) -> None:
        limit = getattr(self, kind)
        if needed > limit:
            raise ResourceError(f"{kind} budget exceeded: need {needed}, limit {limit}")


DEFAULT_BUDGET = Budget()
