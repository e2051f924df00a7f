"""
Foundational q-arithmetic: q-shifted factorials, q-binomials, the theta function
and basic/bilateral hypergeometric series with explicit truncation control.

Every value is an mpmath number at the active working precision.
"""
from __future__ import annotations

import os
from typing import Any, Callable, Optional, Sequence, Union

import mpmath
from loguru import logger
from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field, field_validator

from fgcalc.errors import (
    DIVERGENT_MSG,
    DIVISION_BY_ZERO_MSG,
    MAX_TERMS_MSG,
    OUT_OF_RANGE_MSG,
    POLE_IN_LOWER_MSG,
    Q_MODULUS_MSG,
    VANISHING_PRODUCT_MSG,
    WINDOW_TOO_SMALL_MSG,
    Divergent,
    DivisionByZero,
    DomainError,
    MaxTermsExceeded,
    OutOfRange,
    PoleInLowerParams,
    UsageError,
    WindowTooSmall,
)
from fgcalc.precision import BASE_DIGITS

# ========= Truncation Defaults =========
DEFAULT_TRUNCATION_EPS: float = 1e-14
DEFAULT_MAX_TERMS: int = 10_000
MAX_TERMS_ENV: str = "FG_MAX_TERMS"
TRUNCATION_EPS_ENV: str = "FG_TRUNCATION_EPS"
DIVERGENCE_RUN: int = 25
DIVERGENCE_WARMUP: int = 50
TERMINATION_TOL: float = 1e-10
BILATERAL_START_WINDOW: int = 10
BILATERAL_MAX_WINDOW: int = 400

Number = Union[int, float, complex, mpmath.mpf, mpmath.mpc]


def _max_terms_from_env() -> int:
    raw = os.getenv(MAX_TERMS_ENV)
    if not raw:
        return DEFAULT_MAX_TERMS
    try:
        value = int(raw)
    except ValueError as e:
        raise UsageError(f"{MAX_TERMS_ENV} must be a positive integer, got {raw!r}") from e
    if value < 1:
        raise UsageError(f"{MAX_TERMS_ENV} must be a positive integer, got {raw!r}")
    return value


def _eps_from_env() -> float:
    raw = os.getenv(TRUNCATION_EPS_ENV)
    if not raw:
        return DEFAULT_TRUNCATION_EPS
    try:
        value = float(raw)
    except ValueError as e:
        raise UsageError(f"{TRUNCATION_EPS_ENV} must be a positive float, got {raw!r}") from e
    if value <= 0:
        raise UsageError(f"{TRUNCATION_EPS_ENV} must be a positive float, got {raw!r}")
    return value


# ========= Domain Types =========
class QBase(BaseModel):
    """A base q with 0 < |q| < 1 plus the truncation policy for infinite objects."""

    model_config = ConfigDict(frozen=True)

    q: complex = Field(..., description="Base of every q-shifted factorial, 0 < |q| < 1")
    truncation_eps: float = Field(
        default_factory=_eps_from_env,
        gt=0,
        description="Tail-termination threshold, relative to double precision",
    )
    max_terms: int = Field(
        default_factory=_max_terms_from_env,
        ge=1,
        description="Hard cap on the number of terms or factors",
    )

    @field_validator("q", mode="before")
    @classmethod
    def _coerce_q(cls, v: Any) -> Any:
        if isinstance(v, (mpmath.mpf, mpmath.mpc)):
            return complex(v)
        return v

    @field_validator("q")
    @classmethod
    def _check_modulus(cls, v: complex) -> complex:
        if not 0 < abs(v) < 1:
            raise ValueError(Q_MODULUS_MSG.format(q=v))
        return v

    @property
    def value(self) -> mpmath.mpc:
        return mp.mpmathify(self.q)

    @property
    def eps(self):
        """Truncation threshold tightened by the digits above double precision."""
        extra = max(mp.dps - BASE_DIGITS, 0)
        return mp.mpf(self.truncation_eps) * mp.mpf(10) ** (-extra)

    @classmethod
    def of(cls, base: Union["QBase", Number]) -> "QBase":
        if isinstance(base, QBase):
            return base
        return cls(q=base)


class SeriesValue(BaseModel):
    """A truncated series or product together with its numeric provenance."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: Any = Field(..., description="Sum or product at working precision")
    terms_used: int = Field(..., ge=0, description="Number of terms or factors taken")
    tail_bound: float = Field(..., ge=0, description="Estimated relative size of the omitted tail")
    converged: bool = Field(..., description="Whether the tail bound met the threshold")

    @field_validator("value", mode="before")
    @classmethod
    def _to_mp(cls, v: Any) -> Any:
        return mp.mpmathify(v)

    def to_json_dict(self) -> dict:
        return {
            "re": float(mp.re(self.value)),
            "im": float(mp.im(self.value)),
            "terms_used": self.terms_used,
            "tail_bound": self.tail_bound,
            "converged": self.converged,
        }


def _qv(base: Union[QBase, Number]):
    if isinstance(base, QBase):
        return base.value
    return mp.mpmathify(base)


# ========= q-shifted factorials =========
def qpoch(a: Number, base: Union[QBase, Number], n: int):
    """(a;q)_n for any integer n, the negative case via the finite reciprocal product.

    Args:
        a: Parameter of the factorial.
        base: A QBase or a raw base value; finite products accept any nonzero base.
        n: Length of the product, negative values allowed.

    Returns:
        The product as an mpmath number.
    """
    q = _qv(base)
    a = mp.mpmathify(a)
    result = mp.mpf(1)
    if n >= 0:
        term = a
        for _ in range(n):
            result *= 1 - term
            term *= q
        return result
    try:
        return product_over_z(lambda j: 1 - a * q**j, 0, n - 1, atol=16 * mp.eps)
    except DivisionByZero:
        raise DivisionByZero(DIVISION_BY_ZERO_MSG.format(a=a, n=n)) from None


def qpoch_inf(a: Number, base: Union[QBase, Number]) -> SeriesValue:
    """(a;q)_inf truncated once the remaining factors are below the threshold."""
    base = QBase.of(base)
    q = base.value
    a = mp.mpmathify(a)
    eps = base.eps
    ratio = abs(q)
    result = mp.mpf(1)
    term = a
    for k in range(base.max_terms):
        size = abs(term)
        if size < eps:
            tail = size / (1 - ratio)
            if tail < eps:
                return SeriesValue(
                    value=result,
                    terms_used=k,
                    tail_bound=float(tail * mp.exp(tail)),
                    converged=True,
                )
        result *= 1 - term
        term *= q
    raise MaxTermsExceeded(MAX_TERMS_MSG.format(max_terms=base.max_terms))


def pochs(params: Sequence[Number], base: Union[QBase, Number], n: Optional[int] = None):
    """(a_1,...,a_r;q)_n; n=None gives the infinite product."""
    result = mp.mpf(1)
    for a in params:
        result *= qpoch_inf(a, base).value if n is None else qpoch(a, base, n)
    return result


def qbinom(n: int, k: int, q_value: Number, zero_outside: bool = False):
    """Gaussian binomial [n choose k]_q by its product form."""
    if n < 0 or k < 0 or k > n:
        if zero_outside:
            return mp.mpf(0)
        raise OutOfRange(OUT_OF_RANGE_MSG.format(n=n, k=k))
    q = mp.mpmathify(q_value)
    k = min(k, n - k)
    result = mp.mpf(1)
    for i in range(1, k + 1):
        result *= (1 - q ** (n - k + i)) / (1 - q**i)
    return result


def theta(x: Number, base: Union[QBase, Number]):
    """theta(x) = (x;q)_inf (q/x;q)_inf."""
    x = mp.mpmathify(x)
    if x == 0:
        raise DomainError("theta is undefined at x = 0")
    base = QBase.of(base)
    return qpoch_inf(x, base).value * qpoch_inf(base.value / x, base).value


def triple_product_series(x: Number, base: Union[QBase, Number]) -> SeriesValue:
    """Sum over k in Z of (-1)^k q^C(k,2) x^k, the series side of the triple product."""
    base = QBase.of(base)
    q = base.value
    x = mp.mpmathify(x)
    if x == 0:
        raise DomainError("triple product series is undefined at x = 0")
    total = mp.mpf(1)
    right = mp.mpf(1)
    left = mp.mpf(1)
    quiet = 0
    for k in range(1, base.max_terms):
        # t_k = t_{k-1} * (-x q^{k-1}),  t_{-k} = t_{-k+1} * (-q^k / x)
        right *= -x * q ** (k - 1)
        left *= -(q**k) / x
        total += right + left
        scale = max(abs(total), mp.mpf(1))
        if abs(right) + abs(left) < base.eps * scale:
            quiet += 1
            if quiet >= 3:
                return SeriesValue(
                    value=total,
                    terms_used=2 * k + 1,
                    tail_bound=float((abs(right) + abs(left)) / scale),
                    converged=True,
                )
        else:
            quiet = 0
    raise MaxTermsExceeded(MAX_TERMS_MSG.format(max_terms=base.max_terms))


# ========= Series helpers =========
def _negative_power_index(a, q) -> Optional[int]:
    """Return N >= 0 with a = q^-N, or None."""
    if a == 0:
        return None
    n_est = float(-mp.log(abs(a)) / mp.log(abs(q)))
    n = int(round(n_est))
    if n < 0:
        return None
    if abs(a * q**n - 1) <= TERMINATION_TOL:
        return n
    return None


def _terminating_index(upper: Sequence, q) -> Optional[int]:
    indices = [n for n in (_negative_power_index(a, q) for a in upper) if n is not None]
    return min(indices) if indices else None


def _sum_terms(
    step: Callable[[int], Any],
    base: QBase,
    stop_at: Optional[int],
    weight: Optional[Callable[[int], Any]] = None,
) -> SeriesValue:
    """Accumulate sum_n w_n u_n with u_0 = 1 and u_{n+1} = u_n * step(n)."""
    eps = base.eps
    total = mp.mpf(0)
    term = mp.mpf(1)
    growing = 0
    for n in range(base.max_terms):
        total += term if weight is None else term * weight(n)
        if stop_at is not None and n == stop_at:
            return SeriesValue(value=total, terms_used=n + 1, tail_bound=0.0, converged=True)
        ratio = step(n)
        term = term * ratio
        size = abs(term)
        if size == 0:
            return SeriesValue(value=total, terms_used=n + 1, tail_bound=0.0, converged=True)
        rho = abs(ratio)
        if rho > 1:
            growing += 1
            if stop_at is None and n >= DIVERGENCE_WARMUP and growing >= DIVERGENCE_RUN:
                raise Divergent(DIVERGENT_MSG.format(run=growing, ratio=float(rho)))
            continue
        growing = 0
        if stop_at is None:
            scale = abs(total) if total != 0 else mp.mpf(1)
            tail = size / (1 - rho) if rho < 1 else mp.inf
            if weight is not None:
                tail *= abs(weight(n + 1))
            if size < eps * scale and tail < eps * scale:
                return SeriesValue(
                    value=total,
                    terms_used=n + 1,
                    tail_bound=float(tail / scale),
                    converged=True,
                )
    raise MaxTermsExceeded(MAX_TERMS_MSG.format(max_terms=base.max_terms))


def phi(
    upper: Sequence[Number],
    lower: Sequence[Number],
    base: Union[QBase, Number],
    z: Number,
) -> SeriesValue:
    """Basic hypergeometric series r-phi-s(upper; lower; q, z).

    Terminates exactly when an upper parameter equals q^-N; otherwise sums until the
    increment and its geometric tail fall below the base's threshold.
    """
    base = QBase.of(base)
    q = base.value
    upper = [mp.mpmathify(a) for a in upper]
    lower = [mp.mpmathify(b) for b in lower]
    z = mp.mpmathify(z)
    stop_at = _terminating_index(upper, q)
    for b in lower:
        m = _negative_power_index(b, q)
        if m is not None and (stop_at is None or stop_at > m):
            raise PoleInLowerParams(POLE_IN_LOWER_MSG.format(b=b, m=m))
    power = 1 + len(lower) - len(upper)

    def step(n: int):
        qn = q**n
        ratio = z / (1 - qn * q)
        for a in upper:
            ratio *= 1 - a * qn
        for b in lower:
            ratio /= 1 - b * qn
        if power:
            ratio *= (-qn) ** power
        return ratio

    return _sum_terms(step, base, stop_at)


def vwp_phi(
    a: Number,
    extras: Sequence[Number],
    base: Union[QBase, Number],
    z: Number,
) -> SeriesValue:
    """Very-well-poised series sum (1-aq^2n)/(1-a) (a, extras)_n / (q, aq/extras)_n z^n.

    The (1-aq^2n)/(1-a) prefactor replaces the q*sqrt(a), -q*sqrt(a) parameter pair.
    """
    base = QBase.of(base)
    q = base.value
    a = mp.mpmathify(a)
    extras = [mp.mpmathify(e) for e in extras]
    z = mp.mpmathify(z)
    if abs(1 - a) <= 16 * mp.eps:
        raise DomainError("very-well-poised series needs a != 1")
    stop_at = _terminating_index([a, *extras], q)
    for e in extras:
        m = _negative_power_index(a * q / e, q)
        if m is not None and (stop_at is None or stop_at > m):
            raise PoleInLowerParams(POLE_IN_LOWER_MSG.format(b=a * q / e, m=m))

    def step(n: int):
        qn = q**n
        ratio = z * (1 - a * qn) / (1 - qn * q)
        for e in extras:
            ratio *= (1 - e * qn) / (1 - a * qn * q / e)
        return ratio

    def weight(n: int):
        return (1 - a * q ** (2 * n)) / (1 - a)

    return _sum_terms(step, base, stop_at, weight)


def psi_bilateral(
    upper: Sequence[Number],
    lower: Sequence[Number],
    base: Union[QBase, Number],
    z: Number,
    window: int,
    strict: bool = False,
) -> SeriesValue:
    """Bilateral series r-psi-s summed over n in [-window, window].

    Negative-index terms stop at an exact zero once a lower parameter hits q^(N+1),
    matching 1/(q^(N+1);q)_n = 0 for n < -N-1.

    Args:
        window: Number of terms taken on each side of n = 0.
        strict: Raise WindowTooSmall (or Divergent) instead of returning an
            unconverged value.
    """
    base = QBase.of(base)
    q = base.value
    upper = [mp.mpmathify(a) for a in upper]
    lower = [mp.mpmathify(b) for b in lower]
    z = mp.mpmathify(z)
    power = len(lower) - len(upper)

    def forward(n: int):
        qn = q**n
        ratio = z
        for a in upper:
            ratio *= 1 - a * qn
        for b in lower:
            ratio /= 1 - b * qn
        if power:
            ratio *= (-qn) ** power
        return ratio

    for b in lower:
        m = _negative_power_index(b, q)
        if m is not None and m <= window + 1:
            raise PoleInLowerParams(POLE_IN_LOWER_MSG.format(b=b, m=m))

    total = mp.mpf(1)
    term = mp.mpf(1)
    for n in range(window):
        term *= forward(n)
        total += term
    right_next = abs(term * forward(window))
    right_rho = abs(forward(window + 1)) if window >= 0 else mp.inf

    term = mp.mpf(1)
    left_next = mp.mpf(0)
    left_rho = mp.mpf(0)
    for n in range(0, -window - 1, -1):
        # t_{n-1} = t_n / forward(n-1)
        qn = q ** (n - 1)
        if any(abs(1 - b * qn) <= 16 * mp.eps for b in lower):
            left_next = mp.mpf(0)
            break
        if any(abs(1 - a * qn) <= 16 * mp.eps for a in upper):
            raise DivisionByZero(DIVISION_BY_ZERO_MSG.format(a=qn, n=n - 1))
        step = product_over_z(forward, n, n - 2)
        if n == -window:
            left_next = abs(term * step)
            beyond = forward(n - 2)
            left_rho = abs(1 / beyond) if beyond != 0 else mp.mpf(0)
            break
        term *= step
        total += term

    scale = abs(total) if total != 0 else mp.mpf(1)
    tails = []
    for size, rho in ((right_next, right_rho), (left_next, left_rho)):
        if size == 0:
            tails.append(mp.mpf(0))
        elif rho < 1:
            tails.append(size / (1 - rho) / scale)
        else:
            tails.append(mp.inf)
    tail = max(tails)
    converged = bool(tail <= base.eps)
    if strict and not converged:
        if tail == mp.inf:
            raise Divergent(DIVERGENT_MSG.format(run=window, ratio=float(max(right_rho, left_rho))))
        raise WindowTooSmall(
            WINDOW_TOO_SMALL_MSG.format(window=window, left=float(tails[1]), right=float(tails[0]))
        )
    return SeriesValue(
        value=total,
        terms_used=2 * window + 1,
        tail_bound=float(min(tail, mp.mpf(1e300))),
        converged=converged,
    )


def psi_bilateral_adaptive(
    upper: Sequence[Number],
    lower: Sequence[Number],
    base: Union[QBase, Number],
    z: Number,
    max_window: int = BILATERAL_MAX_WINDOW,
) -> SeriesValue:
    """Grow the bilateral window until both tails meet the threshold."""
    window = BILATERAL_START_WINDOW
    while True:
        result = psi_bilateral(upper, lower, base, z, window)
        if result.converged:
            return result
        if window >= max_window:
            return psi_bilateral(upper, lower, base, z, window, strict=True)
        logger.debug(f"bilateral window {window} not converged, doubling")
        window = min(2 * window, max_window)


def product_over_z(factor: Callable[[int], Number], k: int, m: int, atol: float = 0.0):
    """A_k...A_m extended to m < k by the reciprocal convention.

    A reciprocal factor with modulus at most `atol` counts as zero.
    """
    if m >= k:
        result = mp.mpf(1)
        for j in range(k, m + 1):
            result *= factor(j)
        return result
    if m == k - 1:
        return mp.mpf(1)
    denominator = mp.mpf(1)
    for j in range(m + 1, k):
        value = mp.mpmathify(factor(j))
        if abs(value) <= atol:
            raise DivisionByZero(VANISHING_PRODUCT_MSG.format(j=j, start=m + 1, stop=k - 1))
        denominator *= value
    return 1 / denominator


def explicit_series(term: Callable[[int], Number], base: Union[QBase, Number], quiet_terms: int = 3) -> SeriesValue:
    """Sum term(0) + term(1) + ... until `quiet_terms` consecutive terms sit below the threshold."""
    base = QBase.of(base)
    eps = base.eps
    total = mp.mpf(0)
    quiet = 0
    growing = 0
    previous = None
    for n in range(base.max_terms):
        value = mp.mpmathify(term(n))
        total += value
        size = abs(value)
        if total == 0:
            # an all-zero prefix only ends the sum after the warmup
            if size == 0 and n >= DIVERGENCE_WARMUP:
                return SeriesValue(value=total, terms_used=n + 1, tail_bound=0.0, converged=True)
            continue
        scale = abs(total)
        if size <= eps * scale:
            quiet += 1
            if quiet >= quiet_terms:
                return SeriesValue(value=total, terms_used=n + 1, tail_bound=float(size / scale), converged=True)
        else:
            quiet = 0
        if previous is not None and previous != 0 and size > previous:
            growing += 1
            if n >= DIVERGENCE_WARMUP and growing >= DIVERGENCE_RUN:
                raise Divergent(DIVERGENT_MSG.format(run=growing, ratio=float(size / previous)))
        else:
            growing = 0
        previous = size
    raise MaxTermsExceeded(MAX_TERMS_MSG.format(max_terms=base.max_terms))
