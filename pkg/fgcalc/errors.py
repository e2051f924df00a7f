"""
Exception hierarchy and message constants shared across fgcalc.
"""
from typing import Optional, Tuple

# ========= Message Constants =========
DIVISION_BY_ZERO_MSG: str = "Vanishing factor in ({a};q)_{n}: reciprocal product is singular."
VANISHING_PRODUCT_MSG: str = "Factor A_{j} vanishes; the reciprocal product A_{start}...A_{stop} is singular."
MAX_TERMS_MSG: str = "Series did not reach the tail threshold within {max_terms} terms."
OUT_OF_RANGE_MSG: str = "q-binomial index out of range: n={n}, k={k}."
DIVERGENT_MSG: str = "Term ratio stayed above 1 for {run} consecutive terms (last ratio {ratio:.3g})."
POLE_IN_LOWER_MSG: str = "Lower parameter {b} equals q^-{m}; the series has a pole at term {m}."
WINDOW_TOO_SMALL_MSG: str = "Bilateral window {window} too small: tails {left:.3g} / {right:.3g}."
MISSING_PARAMETER_MSG: str = "Pair '{pair}' requires parameter '{name}'."
ZERO_DENOMINATOR_MSG: str = "Zero denominator {what} at indices (i={i}, k={k})."
COINCIDENT_NODES_MSG: str = "Nodes b_{i} and b_{k} coincide ({value})."
POLE_AT_EVAL_MSG: str = "Evaluation point {x} is a pole of the order-{k} basis factor."
ZERO_DIFFERENCE_MSG: str = "Difference of order {k} vanishes; ratio undefined."
DOMAIN_VIOLATION_MSG: str = "Parameter '{name}'={value} violates domain: {reason}."
INSTABILITY_MSG: str = "Routes disagree for {what}: {left} vs {right}."
Q_MODULUS_MSG: str = "Base q must satisfy 0 < |q| < 1, got {q}."


class FGError(Exception):
    """Base class for every error raised by fgcalc."""

    exit_code: int = 1


class UsageError(FGError):
    """Invalid command line or configuration."""

    exit_code = 2


class NumericalInstability(FGError):
    """Two independent computation routes disagree."""

    exit_code = 1


class DomainError(FGError):
    """A numeric input lies outside the domain of the requested operation."""

    exit_code = 3


class DivisionByZero(DomainError):
    pass


class MaxTermsExceeded(DomainError):
    pass


class OutOfRange(DomainError):
    pass


class Divergent(DomainError):
    pass


class PoleInLowerParams(DomainError):
    pass


class WindowTooSmall(DomainError):
    pass


class MissingParameter(DomainError):
    pass


class ZeroDenominator(DomainError):
    """Vanishing f or g factor; `indices` holds the offending (i, k)."""

    def __init__(self, message: str, indices: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.indices = indices


class CoincidentNodes(DomainError):
    pass


class PoleAtEvalPoint(DomainError):
    pass


class ZeroDifference(DomainError):
    pass


class DomainViolation(DomainError):
    pass
