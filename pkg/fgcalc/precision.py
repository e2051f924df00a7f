"""
Working-precision management for cancellation-heavy weighted sums.
"""
from __future__ import annotations

from typing import Callable, Iterable, Tuple, TypeVar

from loguru import logger
from mpmath import mp

T = TypeVar("T")

# ========= Precision Constants =========
BASE_DIGITS: int = 15
GUARD_DIGITS: int = 10
NOISE_BUMP_DIGITS: int = 30
MAX_DIGITS: int = 6000
MAX_PASSES: int = 5


def cancellation_digits(value, magnitude) -> float:
    """Decimal digits lost when terms of total size `magnitude` sum to `value`."""
    if magnitude == 0:
        return 0.0
    if value == 0:
        return float("inf")
    return max(0.0, float(mp.log10(magnitude / abs(value))))


def magnitude_digits(magnitude) -> int:
    """Digits needed above unity to represent `magnitude` without overflow of meaning."""
    if magnitude == 0:
        return 0
    return max(0, int(mp.ceil(mp.log10(abs(magnitude)))))


def working_digits(extra: float = 0.0) -> int:
    return max(mp.dps, BASE_DIGITS) + GUARD_DIGITS + max(0, int(extra))


def adaptive(
    compute: Callable[[], T],
    measure: Callable[[T], Iterable[Tuple[object, object]]],
    start_digits: int,
    label: str = "sum",
) -> Tuple[T, int]:
    """Run `compute` at rising precision until every measured value is resolved.

    Args:
        compute: Evaluates the sums; called inside ``mp.workdps``.
        measure: Yields ``(value, magnitude)`` pairs from the result, magnitude being
            the sum of absolute values of the terms.
        start_digits: First working precision to try.
        label: Name used in debug logs.

    Returns:
        The last result and the precision it was computed at. A value that sits on
        the rounding floor in two consecutive passes is accepted as an exact zero.
    """
    digits = min(max(start_digits, BASE_DIGITS), MAX_DIGITS)
    floor_seen: set[int] = set()
    for attempt in range(MAX_PASSES):
        with mp.workdps(digits):
            result = compute()
        used = digits
        needed = digits
        bump = False
        current_floor: set[int] = set()
        for index, (value, magnitude) in enumerate(measure(result)):
            lost = cancellation_digits(value, magnitude)
            if lost <= digits - BASE_DIGITS - 2:
                continue
            if lost > digits - 3:
                current_floor.add(index)
                if index not in floor_seen:
                    bump = True
                continue
            needed = max(needed, int(lost) + BASE_DIGITS + GUARD_DIGITS)
        if bump:
            needed = max(needed, digits + NOISE_BUMP_DIGITS)
        floor_seen = current_floor
        if needed <= digits:
            return result, digits
        if needed > MAX_DIGITS:
            logger.warning(f"{label}: precision cap {MAX_DIGITS} reached, keeping {digits} digits")
            return result, digits
        logger.debug(f"{label}: pass {attempt + 1} at {digits} digits, retrying at {needed}")
        digits = needed
    return result, used
