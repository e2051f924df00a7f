"""
(f,g)-series of a target function: coefficients, partial sums, the interpolation
invariant, lambda ratios and the convergence diagnostic, plus the Gessel-Stanton,
Liu and Carlitz coefficient formulas and the K_{n,k} machinery.
"""
from __future__ import annotations

import threading
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

from loguru import logger
from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr

from fgcalc.errors import (
    INSTABILITY_MSG,
    POLE_AT_EVAL_MSG,
    ZERO_DIFFERENCE_MSG,
    DomainError,
    NumericalInstability,
    PoleAtEvalPoint,
    UsageError,
    ZeroDifference,
)
from fgcalc.fgdiff import DifferenceTable, call, difference_table, qdiff_n_mp, resolve_sum
from fgcalc.fginv import differences_from_values, gessel_stanton_system
from fgcalc.nodes import NodeSystem
from fgcalc.precision import cancellation_digits, working_digits
from fgcalc.qcore import Number, QBase, SeriesValue, explicit_series, qbinom, qpoch, qpoch_inf

# ========= Expansion Constants =========
DEFAULT_MAX_ORDER: int = 40
RATIO_MARGIN: float = 0.02
RATIO_WINDOW: int = 10
ROUNDOFF_FLOOR: float = 1e-16
RECONSTRUCTION_TOLERANCE: float = 1e-8
RECOVERY_TOLERANCE: float = 1e-10
CARLITZ_EPSILON: float = 1e-7
CARLITZ_ROUTE_TOLERANCE: float = 1e-8
CARLITZ_ABSOLUTE_FLOOR: float = 1e-12
KNK_TOLERANCE: float = 1e-11
KNK_GENERATING_TOLERANCE: float = 1e-9
KNN_LIMIT_TOLERANCE: float = 1e-5
QUIET_TERMS: int = 10

Function = Callable[[Any], Any]
Coefficients = Callable[[int], Number]


class ExpansionSpec(BaseModel):
    """A target function, its node system and the orders to expand to.

    The difference table is built once, on first use, and shared by every
    operation on the spec.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    F: Callable[[Any], Any] = Field(..., description="mpmath-generic target function")
    sys: NodeSystem = Field(..., description="Nodes, parameters and pair")
    max_order: int = Field(DEFAULT_MAX_ORDER, ge=0, description="Largest coefficient order")
    eval_points: List[complex] = Field(default_factory=list, description="Where partial sums are tabulated")

    _cache: Dict[str, DifferenceTable] = PrivateAttr(default_factory=dict)
    _lock: threading.Lock = PrivateAttr(default_factory=threading.Lock)

    def table(self) -> DifferenceTable:
        with self._lock:
            if "table" not in self._cache:
                self._cache["table"] = difference_table(self.F, self.sys, self.max_order)
            return self._cache["table"]


class ExpansionRow(BaseModel):
    n: int = Field(..., description="Order")
    coefficient: complex = Field(..., description="G(n)")
    lambda_ratio: Optional[complex] = Field(None, description="lambda_n, None when undefined")
    probe_error: float = Field(..., description="|S_n(probe) - F(probe)|")
    interpolation_residual: float = Field(..., description="|F(b_n) - S_n(b_n)|")


class IsmailReport(BaseModel):
    type: Literal["ismail"] = "ismail"
    probe: complex = Field(..., description="Evaluation point near the accumulation point")
    order: int = Field(..., description="Number of terms summed minus one")
    rate: Optional[float] = Field(None, description="Empirical ratio a = max of the last term ratios")
    verdict: Literal["converged", "diverged", "inconclusive"] = Field(..., description="Ratio-test outcome")
    partial_sum: complex = Field(..., description="S_N(probe)")
    target: complex = Field(..., description="F(probe)")
    reconstruction_error: float = Field(..., description="|S_N(probe) - F(probe)|")
    agrees: bool = Field(..., description="reconstruction_error within tolerance")
    accumulation_point: Optional[complex] = Field(None, description="Estimated lim b_n, None if the nodes escape")
    diagnosis: str = Field(..., description="Human-readable explanation")

    @property
    def passed(self) -> bool:
        return self.verdict == "converged" and self.agrees

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"[{verdict}] expansion at {self.probe}: {self.verdict}, "
            f"error {self.reconstruction_error:.3e}. {self.diagnosis}"
        )


class ExpansionReport(BaseModel):
    type: Literal["expansion"] = "expansion"
    coeffs: List[complex] = Field(..., description="G(0..max_order)")
    partial_sums: List[List[complex]] = Field(..., description="S_n(x) per eval point (rows) and order (columns)")
    interpolation_residuals: List[float] = Field(..., description="|F(b_n) - S_n(b_n)|")
    lambda_ratios: List[Optional[complex]] = Field(..., description="lambda_k, None where undefined")
    ratio_test_bound: Optional[float] = Field(None, description="Empirical rate at the probe")
    verdict: Literal["converged", "diverged", "inconclusive"] = Field(..., description="Ratio-test outcome")
    truncated_at: Optional[int] = Field(None, description="First order whose tail sits below the roundoff floor")
    rows: List[ExpansionRow] = Field(..., description="Per-order table for CSV output")
    diagnostic: IsmailReport = Field(..., description="Convergence diagnostic at the probe")

    @property
    def passed(self) -> bool:
        return self.diagnostic.passed

    def format_message(self) -> str:
        return self.diagnostic.format_message()


class CheckReport(BaseModel):
    type: Literal["check"] = "check"
    name: str = Field(..., description="Which relation was checked")
    max_deviation: float = Field(..., description="Largest (relative) deviation found")
    tolerance: float = Field(..., description="Pass threshold")
    passed: bool = Field(..., description="max_deviation <= tolerance")
    deviations: List[float] = Field(default_factory=list, description="Deviation per index")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.name}: max deviation {self.max_deviation:.3e}"


def _check(name: str, deviations: List[float], tolerance: float) -> CheckReport:
    worst = max(deviations, default=0.0)
    report = CheckReport(
        name=name,
        max_deviation=worst,
        tolerance=tolerance,
        passed=worst <= tolerance,
        deviations=deviations,
    )
    logger.info(report.format_message())
    return report


# ========= (f,g)-series =========
def expansion_coeffs(spec: ExpansionSpec) -> List[complex]:
    """G(n) = D^(n)[b_0..b_n]{F} for n = 0..max_order."""
    table = spec.table()
    return [complex(table.coefficient(n)) for n in range(spec.max_order + 1)]


def _basis_terms(spec: ExpansionSpec, x, n: int) -> List[Any]:
    """f(x_k,b_k) prod_{i<k} g(b_i,x) / prod_{i=1..k} f(x_i,x) for k = 0..n."""
    sys, pair = spec.sys, spec.sys.pair
    terms = []
    running = mp.mpf(1)
    for k in range(n + 1):
        if k > 0:
            denominator = pair.f(sys.param(k), x)
            if denominator == 0 or abs(denominator) <= 8 * mp.eps:
                raise PoleAtEvalPoint(POLE_AT_EVAL_MSG.format(x=complex(x), k=k))
            running *= pair.g(sys.node(k - 1), x) / denominator
        terms.append(pair.f(sys.param(k), sys.node(k)) * running)
    return terms


def _series_terms(spec: ExpansionSpec, x, n: int) -> List[Any]:
    table = spec.table()
    return [table.coefficient(k) * basis for k, basis in enumerate(_basis_terms(spec, x, n))]


def _running_sums(terms: List[Any]) -> List[Any]:
    sums, total = [], mp.mpf(0)
    for term in terms:
        total += term
        sums.append(total)
    return sums


def _check_order(spec: ExpansionSpec, n: int) -> None:
    if not 0 <= n <= spec.max_order:
        raise UsageError(f"order {n} outside 0..{spec.max_order}")


def partial_sum(spec: ExpansionSpec, n: int, x: Number) -> complex:
    """S_n(x) = sum_{k<=n} G(k) f(x_k,b_k) prod_{i<k} g(b_i,x) / prod_{i=1..k} f(x_i,x)."""
    _check_order(spec, n)
    with mp.workdps(spec.table().precision):
        return complex(mp.fsum(_series_terms(spec, mp.mpmathify(x), n)))


def interpolation_check(spec: ExpansionSpec) -> List[float]:
    """|F(b_n) - S_n(b_n)| for n = 0..max_order; exact up to roundoff whether or not the series converges."""
    residuals = []
    with mp.workdps(spec.table().precision):
        for n in range(spec.max_order + 1):
            b_n = spec.sys.node(n)
            residuals.append(float(abs(call(spec.F, b_n) - mp.fsum(_series_terms(spec, b_n, n)))))
    return residuals


def _is_zero(value, magnitude, digits: int) -> bool:
    return value == 0 or cancellation_digits(value, magnitude) > digits - 5


def lambda_ratios(spec: ExpansionSpec, strict: bool = False) -> List[Optional[complex]]:
    """lambda_k = D^(k)[b_1..b_{k+1}]{F} / D^(k)[b_0..b_k]{F} for k = 0..max_order-1.

    A vanishing unshifted difference is flagged and its ratio reported as None,
    or raised as ZeroDifference when `strict`.
    """
    table = spec.table()
    ratios: List[Optional[complex]] = []
    with mp.workdps(table.precision):
        for k in range(spec.max_order):
            base, magnitude = table.values[k][0], table.magnitudes[k][0]
            if _is_zero(base, magnitude, table.precision):
                if strict:
                    raise ZeroDifference(ZERO_DIFFERENCE_MSG.format(k=k))
                logger.warning(ZERO_DIFFERENCE_MSG.format(k=k))
                ratios.append(None)
                continue
            ratios.append(complex(table.values[k][1] / base))
    return ratios


def _accumulation_point(sys: NodeSystem, n: int) -> Optional[complex]:
    """Aitken estimate of lim b_i from the last three nodes; None when they do not contract."""
    if n < 2:
        return None
    b0, b1, b2 = sys.node(n - 2), sys.node(n - 1), sys.node(n)
    previous, last = b1 - b0, b2 - b1
    if previous == 0:
        return complex(b2)
    rho = last / previous
    if abs(rho) >= 1 - RATIO_MARGIN:
        return None
    return complex(b2 + last * rho / (1 - rho))


def _verdict(terms: List[Any], total) -> Tuple[str, Optional[float]]:
    tail = terms[-RATIO_WINDOW:]
    scale = abs(total)
    if all(t == 0 for t in tail) or (scale != 0 and all(abs(t) <= ROUNDOFF_FLOOR * scale for t in tail)):
        return "converged", 0.0
    ratios = [abs(terms[k + 1] / terms[k]) for k in range(len(terms) - 1) if terms[k] != 0]
    recent = ratios[-RATIO_WINDOW:]
    if len(recent) < RATIO_WINDOW:
        return "inconclusive", float(max(recent)) if recent else None
    rate = float(max(recent))
    if rate < 1 - RATIO_MARGIN:
        return "converged", rate
    if min(recent) > 1 + RATIO_MARGIN:
        return "diverged", rate
    return "inconclusive", rate


def _diagnosis(verdict: str, agrees: bool, accumulation: Optional[complex]) -> str:
    if verdict == "converged" and agrees:
        return "The series converges to F at the probe."
    if verdict == "converged":
        if accumulation is None:
            return (
                "The series converges but not to F: the nodes have no finite accumulation point, "
                "so agreement at the nodes does not determine F."
            )
        return f"The series converges but not to F near the accumulation point {accumulation:.6g}."
    if verdict == "diverged":
        return "The expansion terms grow at the probe."
    return "The ratio test is inconclusive at this order."


def ismail_diagnostic(
    spec: ExpansionSpec, probe: Number, tolerance: float = RECONSTRUCTION_TOLERANCE
) -> IsmailReport:
    """Empirical ratio test on the expansion terms at `probe` plus the reconstruction error.

    Convergence of the series is not enough: the diagnostic also reports whether
    the limit equals F there, and why not when the nodes escape to infinity.
    """
    n = spec.max_order
    with mp.workdps(spec.table().precision):
        x = mp.mpmathify(probe)
        terms = _series_terms(spec, x, n)
        total = mp.fsum(terms)
        target = call(spec.F, x)
        error = abs(total - target)
        verdict, rate = _verdict(terms, total)
        agrees = bool(error <= tolerance * max(1, abs(target)))
        accumulation = _accumulation_point(spec.sys, n)
    report = IsmailReport(
        probe=complex(x),
        order=n,
        rate=rate,
        verdict=verdict,
        partial_sum=complex(total),
        target=complex(target),
        reconstruction_error=float(error),
        agrees=agrees,
        accumulation_point=accumulation,
        diagnosis=_diagnosis(verdict, agrees, accumulation),
    )
    if report.passed:
        logger.info(report.format_message())
    else:
        logger.warning(report.format_message())
    return report


def expand(spec: ExpansionSpec, probe: Number) -> ExpansionReport:
    """Coefficients, partial sums, residuals, lambda ratios and the diagnostic in one report."""
    table = spec.table()
    coeffs = expansion_coeffs(spec)
    residuals = interpolation_check(spec)
    ratios = lambda_ratios(spec)
    diagnostic = ismail_diagnostic(spec, probe)
    with mp.workdps(table.precision):
        x = mp.mpmathify(probe)
        target = call(spec.F, x)
        terms = _series_terms(spec, x, spec.max_order)
        sums = _running_sums(terms)
        truncated_at = None
        for k in range(len(terms)):
            if all(abs(t) <= ROUNDOFF_FLOOR * abs(sums[-1]) for t in terms[k:]) and sums[-1] != 0:
                truncated_at = k
                break
        grid = [
            [complex(s) for s in _running_sums(_series_terms(spec, mp.mpmathify(p), spec.max_order))]
            for p in spec.eval_points
        ]
        rows = [
            ExpansionRow(
                n=k,
                coefficient=coeffs[k],
                lambda_ratio=ratios[k] if k < len(ratios) else None,
                probe_error=float(abs(sums[k] - target)),
                interpolation_residual=residuals[k],
            )
            for k in range(spec.max_order + 1)
        ]
    return ExpansionReport(
        coeffs=coeffs,
        partial_sums=grid,
        interpolation_residuals=residuals,
        lambda_ratios=ratios,
        ratio_test_bound=diagnostic.rate,
        verdict=diagnostic.verdict,
        truncated_at=truncated_at,
        rows=rows,
        diagnostic=diagnostic,
    )


def coefficient_recovery(spec: ExpansionSpec, tolerance: float = RECOVERY_TOLERANCE) -> CheckReport:
    """Recompute G(n) from the partial-sum values S_N(b_m) and compare with the table."""
    table = spec.table()
    n = spec.max_order
    deviations = []
    with mp.workdps(table.precision):
        values = [mp.fsum(_series_terms(spec, spec.sys.node(m), n)) for m in range(n + 1)]
        recovered, magnitudes = differences_from_values(spec.sys, values, n)
        for k in range(n + 1):
            scale = max(magnitudes[k], table.magnitudes[k][0])
            gap = abs(recovered[k] - table.coefficient(k))
            deviations.append(float(gap / scale) if scale != 0 else float(gap))
    return _check("coefficient recovery", deviations, tolerance)


# ========= Coefficient formulas =========
def _q_sum(F: Function, q, n: int, point: Callable[[int], Any], weight: Callable[[int], Any], prefactor):
    """prefactor * sum_k (-1)^k q^(C(k+1,2)-nk) [n,k]_q weight(k) F(point(k)), with magnitude and scale."""
    terms, values = [], []
    for k in range(n + 1):
        value = call(F, point(k))
        values.append(abs(value))
        terms.append((-1) ** k * q ** (k * (k + 1) // 2 - n * k) * qbinom(n, k, q) * weight(k) * value)
    return prefactor * mp.fsum(terms), abs(prefactor) * mp.fsum(abs(t) for t in terms), abs(prefactor) * max(values)


def _gs_sum(F: Function, A, p, q, n: int):
    return _q_sum(
        F,
        q,
        n,
        point=lambda k: q**k,
        weight=lambda k: qpoch(A * p * q**k, p, n - 1),
        prefactor=(-1) ** n,
    )


def gs_coeff(F: Function, A: Number, p: Number, q_value: Number, n: int) -> complex:
    """sum_k (-1)^(n-k) q^(C(k+1,2)-nk) [n,k]_q (Apq^k;p)_{n-1} F(q^k), equal to (q;q)_n G(n)."""
    value, _, _ = resolve_sum(
        lambda: _gs_sum(F, *(mp.mpmathify(v) for v in (A, p, q_value)), n), f"Gessel-Stanton G({n})"
    )
    return complex(value)


def _liu_sum(F: Function, a, q, n: int):
    return _q_sum(
        F,
        q,
        n,
        point=lambda k: a * q ** (k + 1),
        weight=lambda k: qpoch(a * q ** (k + 1), q, n - 1),
        prefactor=1 / (a * q) ** n,
    )


def _liu_mp(F: Function, a: Number, q_value: Number, n: int):
    if a == 0:
        raise DomainError("Liu's coefficient needs a != 0; use carlitz_coeff for a = 0")
    value, _, _ = resolve_sum(
        lambda: _liu_sum(F, mp.mpmathify(a), mp.mpmathify(q_value), n), f"Liu G({n})"
    )
    return value


def liu_coeff(F: Function, a: Number, q_value: Number, n: int) -> complex:
    """(aq)^-n sum_k (-1)^k q^(C(k+1,2)-nk) [n,k]_q (aq^(k+1);q)_{n-1} F(aq^(k+1))."""
    return complex(_liu_mp(F, a, q_value, n))


def _pochhammer_coefficients(q, m: int, count: int) -> List[Any]:
    """Power-series coefficients of (y;q)_m up to y^(count-1); m = -1 gives 1/(1-y/q)."""
    if m < 0:
        return [q ** (-j) for j in range(count)]
    return [
        (-1) ** j * q ** (j * (j - 1) // 2) * qbinom(m, j, q) if j <= m else mp.mpf(0)
        for j in range(count)
    ]


def carlitz_coeff(F: Function, q_value: Number, n: int) -> complex:
    """[D_q^n {F(x)(x;q)_{n-1}}] at x = 0.

    Computed twice: as the a -> 0 limit of Liu's coefficient by Richardson
    extrapolation, and as (q;q)_n times the n-th Taylor coefficient of
    F(x)(x;q)_{n-1}. Disagreement raises NumericalInstability.
    """
    if n < 0:
        raise UsageError(f"order must be nonnegative, got {n}")
    q = mp.mpmathify(q_value)
    with mp.workdps(working_digits()):
        near = _liu_mp(F, CARLITZ_EPSILON / 2, q, n)
        far = _liu_mp(F, CARLITZ_EPSILON, q, n)
        limit = 2 * near - far
        taylor = mp.taylor(lambda y: call(F, y), 0, n)
        poch = _pochhammer_coefficients(q, n - 1, n + 1)
        series = qpoch(q, q, n) * mp.fsum(poch[j] * taylor[n - j] for j in range(n + 1))
        gap = abs(limit - series)
        if gap > CARLITZ_ROUTE_TOLERANCE * max(abs(limit), abs(series)) + CARLITZ_ABSOLUTE_FLOOR:
            raise NumericalInstability(
                INSTABILITY_MSG.format(what=f"Carlitz coefficient {n}", left=complex(limit), right=complex(series))
            )
        return complex(series)


def gs_reconstruct(F: Function, A: Number, p: Number, q_value: Number, x: Number, N: int) -> complex:
    """sum_{k<=N} G_3(k) (1-Ap^kq^k) prod_{i<k}(q^i - x) / ((q;q)_k (Apx;p)_k)."""
    A_mp, p_mp, q, x = (mp.mpmathify(v) for v in (A, p, q_value, x))
    total = mp.mpf(0)
    for k in range(N + 1):
        coefficient = mp.mpmathify(gs_coeff(F, A, p, q_value, k))
        with mp.workdps(working_digits()):
            basis = mp.mpf(1)
            for i in range(k):
                basis *= q**i - x
            weight = (1 - A_mp * (p_mp * q) ** k) / (qpoch(q, q, k) * qpoch(A_mp * p_mp * x, p_mp, k))
            total += coefficient * weight * basis
    return complex(total)


def liu_reconstruct(F: Function, a: Number, q_value: Number, x: Number, N: int) -> complex:
    """sum_{k<=N} G_4(k) (1-aq^2k) (aq/x;q)_k x^k / ((q;q)_k (x;q)_k)."""
    a_mp, q, x = (mp.mpmathify(v) for v in (a, q_value, x))
    if x == 0:
        raise DomainError("Liu's expansion is written in aq/x and needs x != 0")
    total = mp.mpf(0)
    for k in range(N + 1):
        coefficient = _liu_mp(F, a, q_value, k)
        with mp.workdps(working_digits()):
            total += (
                coefficient
                * (1 - a_mp * q ** (2 * k))
                * qpoch(a_mp * q / x, q, k)
                * x**k
                / (qpoch(q, q, k) * qpoch(x, q, k))
            )
    return complex(total)


def carlitz_reconstruct(F: Function, q_value: Number, x: Number, N: int) -> complex:
    """sum_{k<=N} C(k) x^k / ((q;q)_k (x;q)_k)."""
    q, x = mp.mpmathify(q_value), mp.mpmathify(x)
    total = mp.mpf(0)
    for k in range(N + 1):
        coefficient = mp.mpmathify(carlitz_coeff(F, q_value, k))
        with mp.workdps(working_digits()):
            total += coefficient * x**k / (qpoch(q, q, k) * qpoch(x, q, k))
    return complex(total)


def coefficient_routes_check(
    F: Function, A: Number, p: Number, q_value: Number, n_max: int, tolerance: float = 1e-9
) -> CheckReport:
    """gs_coeff(n) against (q;q)_n G(n) from the (1-xy, x-y) difference table, n <= n_max."""
    table = difference_table(F, gessel_stanton_system(A, p, q_value), n_max)
    deviations = []
    with mp.workdps(table.precision):
        q = mp.mpmathify(q_value)
        for n in range(n_max + 1):
            operator = qpoch(q, q, n) * table.coefficient(n)
            formula = mp.mpmathify(gs_coeff(F, A, p, q_value, n))
            scale = qpoch(q, q, n) * table.magnitudes[n][0]
            deviations.append(float(abs(operator - formula) / scale) if scale != 0 else 0.0)
    return _check("Gessel-Stanton coefficient vs operator", deviations, tolerance)


# ========= K_{n,k} =========
def K_nk(a_coeffs: Coefficients, q_value: Number, n: int, k: int, x: Number) -> SeriesValue:
    """sum_r a_{r+k} [r+n, r]_q x^r with tail control."""
    base = QBase.of(q_value)
    q, x = base.value, mp.mpmathify(x)
    return explicit_series(
        lambda r: mp.mpmathify(a_coeffs(r + k)) * qbinom(r + n, r, q) * x**r,
        base,
        quiet_terms=QUIET_TERMS,
    )


def _knk(a_coeffs: Coefficients, q, n: int, k: int, x):
    return K_nk(a_coeffs, q, n, k, x).value


def _relative(left, right) -> float:
    scale = max(abs(left), abs(right))
    return float(abs(left - right) / scale) if scale != 0 else 0.0


def knk_recursion_check(
    a_coeffs: Coefficients, q_value: Number, n: int, k: int, x: Number, tolerance: float = KNK_TOLERANCE
) -> CheckReport:
    """K_{n,k}(x) = (q;q)_{n-m}/(q;q)_n sum_i (-1)^i q^((n-m+1)i + C(i,2)) [m,i]_q K_{n-m,k}(q^i x), m = 1..n."""
    q, x = mp.mpmathify(q_value), mp.mpmathify(x)
    deviations = []
    with mp.workdps(working_digits()):
        left = _knk(a_coeffs, q, n, k, x)
        for m in range(1, n + 1):
            right = qpoch(q, q, n - m) / qpoch(q, q, n) * mp.fsum(
                (-1) ** i
                * q ** ((n - m + 1) * i + i * (i - 1) // 2)
                * qbinom(m, i, q)
                * _knk(a_coeffs, q, n - m, k, q**i * x)
                for i in range(m + 1)
            )
            deviations.append(_relative(left, right))
    return _check(f"K_{{{n},{k}}} iterated recursion", deviations, tolerance)


def knk_second_recursion_check(
    a_coeffs: Coefficients, q_value: Number, n: int, k: int, x: Number, tolerance: float = KNK_TOLERANCE
) -> CheckReport:
    """K_{n,k}(x) - K_{n,k}(qx) = x K_{n,k+1}(x) - x q^(n+1) K_{n,k+1}(qx)."""
    q, x = mp.mpmathify(q_value), mp.mpmathify(x)
    with mp.workdps(working_digits()):
        left = _knk(a_coeffs, q, n, k, x) - _knk(a_coeffs, q, n, k, q * x)
        right = x * _knk(a_coeffs, q, n, k + 1, x) - x * q ** (n + 1) * _knk(a_coeffs, q, n, k + 1, q * x)
        deviation = _relative(left, right)
    return _check(f"K_{{{n},{k}}} first-order recursion", [deviation], tolerance)


def power_series(a_coeffs: Coefficients, t: Number, terms: int):
    """sum_{r<terms} a_r t^r."""
    t = mp.mpmathify(t)
    return mp.fsum(mp.mpmathify(a_coeffs(r)) * t**r for r in range(terms))


def knk_generating_function_check(
    a_coeffs: Coefficients,
    q_value: Number,
    n: int,
    x: Number,
    t: Number,
    truncation: int = 60,
    tolerance: float = KNK_GENERATING_TOLERANCE,
) -> CheckReport:
    """sum_k K_{n,k}(x) t^k over all integers k against F(t) / (x/t;q)_{n+1}.

    Coefficients with negative index are zero, so K_{n,-j}(x) = x^j sum_s a_s [s+j+n, s+j]_q x^s.
    Needs |x| < |t| < radius of F; both sides are truncated at `truncation` terms.
    """
    q, x, t = (mp.mpmathify(v) for v in (q_value, x, t))
    if abs(x) >= abs(t):
        raise DomainError("the generating function needs |x| < |t|")
    with mp.workdps(working_digits()):
        forward = mp.fsum(_knk(a_coeffs, q, n, k, x) * t**k for k in range(truncation))
        backward = mp.fsum(
            (x / t) ** j
            * mp.fsum(mp.mpmathify(a_coeffs(s)) * qbinom(s + j + n, s + j, q) * x**s for s in range(truncation))
            for j in range(1, truncation)
        )
        left = forward + backward
        right = power_series(a_coeffs, t, truncation) / qpoch(x / t, q, n + 1)
        deviation = _relative(left, right)
    return _check(f"K_{{{n},k}} generating function", [deviation], tolerance)


def qdiff_knn_check(
    F: Function, a_coeffs: Coefficients, q_value: Number, x: Number, n_max: int, tolerance: float = 1e-10
) -> CheckReport:
    """D_q^n F(x) = (q;q)_n K_{n,n}(x) for n = 1..n_max."""
    q, x = mp.mpmathify(q_value), mp.mpmathify(x)
    deviations = []
    with mp.workdps(working_digits()):
        for n in range(1, n_max + 1):
            left = qdiff_n_mp(F, q, x, n)
            right = qpoch(q, q, n) * _knk(a_coeffs, q, n, n, x)
            deviations.append(_relative(left, right))
    return _check("q-derivative vs K_{n,n}", deviations, tolerance)


class KnnLimitRow(BaseModel):
    n: int = Field(..., description="Order")
    ratio: complex = Field(..., description="K_{n,n}(x) / a_n")
    deviation: float = Field(..., description="|ratio - limit|")


class KnnLimitReport(BaseModel):
    type: Literal["knn_limit"] = "knn_limit"
    limit: complex = Field(..., description="1 / (x c0; q)_inf")
    rows: List[KnnLimitRow] = Field(..., description="One row per n")
    final_deviation: float = Field(..., description="Deviation at n_max")
    tolerance: float = Field(..., description="Pass threshold for the final deviation")
    passed: bool = Field(..., description="final_deviation <= tolerance")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] K_nn/a_n -> {self.limit:.10g}: final deviation {self.final_deviation:.3e}"


def knn_limit_check(
    a_coeffs: Coefficients,
    c0: Number,
    q_value: Number,
    x: Number,
    n_max: int,
    tolerance: float = KNN_LIMIT_TOLERANCE,
) -> KnnLimitReport:
    """Tabulate K_{n,n}(x)/a_n against 1/(x c0;q)_inf for n = 0..n_max."""
    q, x = mp.mpmathify(q_value), mp.mpmathify(x)
    limit = 1 / qpoch_inf(x * mp.mpmathify(c0), QBase.of(q_value)).value
    rows = []
    for n in range(n_max + 1):
        a_n = mp.mpmathify(a_coeffs(n))
        if a_n == 0:
            raise DomainError(f"coefficient a_{n} vanishes; the ratio is undefined")
        ratio = _knk(a_coeffs, q, n, n, x) / a_n
        rows.append(KnnLimitRow(n=n, ratio=complex(ratio), deviation=float(abs(ratio - limit))))
    final = rows[-1].deviation
    report = KnnLimitReport(
        limit=complex(limit), rows=rows, final_deviation=final, tolerance=tolerance, passed=final <= tolerance
    )
    logger.info(report.format_message())
    return report
