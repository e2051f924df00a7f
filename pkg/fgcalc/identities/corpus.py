"""
The identity corpus: descriptors loaded from cases.json, two-sided verification at
stable precision, the (f,g)-expansion cross-check, seeded sweeps and the runner.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple, Union

import numpy as np
from loguru import logger
from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field

from fgcalc.errors import DOMAIN_VIOLATION_MSG, DomainError, DomainViolation, UsageError
from fgcalc.fgdiff import call
from fgcalc.fgexpand import ExpansionSpec, partial_sum
from fgcalc.fgkernel import one_diff_pair
from fgcalc.fginv import RoundTripReport, differences_from_values, sum_system_round_trip
from fgcalc.identities import finite, summation, transformation
from fgcalc.identities.expansions import INTERPRETATIONS, interpret
from fgcalc.nodes import ConstantSequence, GeometricSequence, NodeSystem
from fgcalc.precision import MAX_PASSES, NOISE_BUMP_DIGITS, working_digits
from fgcalc.qcore import SeriesValue, qpoch

# ========= Corpus Constants =========
CASES_FILE: Path = Path(__file__).with_name("cases.json")
TERMINATING_TOLERANCE: float = 1e-10
NONTERMINATING_TOLERANCE: float = 1e-8
STABILITY_FRACTION: float = 1e-2
COEFFICIENT_ORDERS: int = 8
COEFFICIENT_TOLERANCE: float = 1e-9
PROBE_TOLERANCE: float = 1e-7
MAX_RESAMPLES: int = 200
UNKNOWN_CASE_MSG: str = "Unknown case '{case}'. Valid cases: {valid}."
UNKNOWN_PARAMETER_MSG: str = "Case '{case}' has no parameter '{name}'. Parameters: {valid}."
REGION_VIOLATION_MSG: str = "Case '{case}' is outside its convergence region: {reason}."

EVALUATORS: Dict[str, summation.Evaluator] = {
    **summation.EVALUATORS,
    **transformation.EVALUATORS,
    **finite.EVALUATORS,
}
REGIONS: Dict[str, summation.Region] = {
    **summation.REGIONS,
    **transformation.REGIONS,
    **finite.REGIONS,
}


# ========= Descriptors =========
class ParameterDomain(BaseModel):
    """Strict modulus bounds for complex parameters, inclusive bounds for integers."""

    model_config = ConfigDict(frozen=True)

    min_modulus: Optional[float] = Field(None, description="|v| must exceed this")
    max_modulus: Optional[float] = Field(None, description="|v| must stay below this")
    minimum: Optional[int] = Field(None, description="Smallest allowed integer value")
    maximum: Optional[int] = Field(None, description="Largest allowed integer value")
    exclude: List[float] = Field(default_factory=list, description="Isolated forbidden values")

    def violation(self, value: Any) -> Optional[str]:
        size = abs(value)
        if self.min_modulus is not None and not size > self.min_modulus:
            return f"|value| must exceed {self.min_modulus}"
        if self.max_modulus is not None and not size < self.max_modulus:
            return f"|value| must stay below {self.max_modulus}"
        if self.minimum is not None and value < self.minimum:
            return f"must be at least {self.minimum}"
        if self.maximum is not None and value > self.maximum:
            return f"must be at most {self.maximum}"
        for point in self.exclude:
            if abs(value - point) <= 1e-12:
                return f"must differ from {point}"
        return None


class FGReading(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair: str = Field(..., description="Pair name")
    nodes: str = Field(..., description="Node sequence b_n")
    params: str = Field(..., description="Parameter sequence x_n")
    probe: Optional[float] = Field(None, description="Where the expansion is compared with F")
    order: Optional[int] = Field(None, description="Largest coefficient order")


class IdentityCase(BaseModel):
    """A named two-sided identity with its domain, defaults and citation."""

    model_config = ConfigDict(frozen=True)

    id: str = Field(..., description="Stable case identifier")
    title: str = Field(..., description="Short human-readable name")
    anchor: str = Field(..., description="Citation for the identity")
    kind: Literal["summation", "transformation", "finite"] = Field(..., description="Family")
    terminating: bool = Field(..., description="Whether both sides are finite")
    status: Literal["active", "stub"] = Field("active", description="Stubs are listed but not evaluated")
    defaults: Dict[str, Union[int, float]] = Field(default_factory=dict, description="Default parameters")
    integers: List[str] = Field(default_factory=list, description="Integer-valued parameters")
    domain: Dict[str, ParameterDomain] = Field(default_factory=dict, description="Per-parameter constraints")
    sample: Dict[str, Tuple[float, float]] = Field(default_factory=dict, description="Sweep ranges")
    tolerance: Optional[float] = Field(None, description="Override of the family tolerance")
    note: Optional[str] = Field(None, description="Why a stub is not evaluated")
    fg: Optional[FGReading] = Field(None, description="(f,g)-expansion reading of the identity")

    @property
    def default_tolerance(self) -> float:
        if self.tolerance is not None:
            return self.tolerance
        return TERMINATING_TOLERANCE if self.terminating else NONTERMINATING_TOLERANCE

    @property
    def interpretable(self) -> bool:
        return self.status == "active" and self.id in INTERPRETATIONS


class CaseReport(BaseModel):
    type: Literal["case"] = "case"
    id: str = Field(..., description="Case identifier")
    anchor: str = Field(..., description="Citation for the identity")
    status: Literal["active", "stub"] = Field(..., description="Stubs are skipped")
    params: Dict[str, complex] = Field(default_factory=dict, description="Parameters verified at")
    lhs: Optional[complex] = Field(None, description="Left-hand side")
    rhs: Optional[complex] = Field(None, description="Right-hand side")
    relative_error: Optional[float] = Field(None, description="|lhs - rhs| / max(|lhs|, |rhs|)")
    terms_used: int = Field(0, description="Series terms taken over both sides")
    digits: int = Field(0, description="Working digits of the accepted pass")
    tolerance: float = Field(..., description="Pass threshold")
    passed: bool = Field(..., description="relative_error <= tolerance; stubs count as passed")
    error: Optional[str] = Field(None, description="Domain error raised during evaluation")

    def format_message(self) -> str:
        if self.status == "stub":
            return f"[STUB] {self.id} ({self.anchor})"
        verdict = "PASS" if self.passed else "FAIL"
        if self.error:
            return f"[{verdict}] {self.id}: {self.error}"
        return f"[{verdict}] {self.id}: relative error {self.relative_error:.3e} at {self.digits} digits"


class InterpretationReport(BaseModel):
    type: Literal["interpretation"] = "interpretation"
    id: str = Field(..., description="Case identifier")
    pair: str = Field(..., description="Pair label")
    nodes: str = Field(..., description="Node sequence b_n")
    params: str = Field(..., description="Parameter sequence x_n")
    order: int = Field(..., description="Expansion order")
    coefficients_checked: int = Field(..., description="Orders compared with the closed form")
    coefficient_deviation: float = Field(..., description="max |G(k) - E(k)| / max(|E(k)|, magnitude)")
    probe: complex = Field(..., description="Evaluation point")
    probe_error: float = Field(..., description="|S_N(probe) - F(probe)| / max(1, |F(probe)|)")
    passed: bool = Field(..., description="Both deviations within tolerance")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"[{verdict}] {self.id} as ({self.pair})-expansion: coefficients {self.coefficient_deviation:.3e}, "
            f"probe {self.probe_error:.3e}"
        )


class SweepReport(BaseModel):
    type: Literal["sweep"] = "sweep"
    id: str = Field(..., description="Case identifier")
    trials: int = Field(..., description="Parameter tuples verified")
    seed: int = Field(..., description="Generator seed")
    worst_relative_error: float = Field(..., description="Largest relative error seen")
    worst_params: Dict[str, complex] = Field(default_factory=dict, description="Where it was seen")
    failures: int = Field(..., description="Trials that failed or raised")
    passed: bool = Field(..., description="No failures")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] sweep {self.id}: {self.trials} trials, worst {self.worst_relative_error:.3e}"


class CoVerificationReport(BaseModel):
    """Finite q-binomial and q-binomial theorem checked as one chain through the sum system."""

    type: Literal["co_verification"] = "co_verification"
    name: str = Field(..., description="Chain verified")
    cases_passed: bool = Field(..., description="Both ends of the chain pass")
    round_trip: RoundTripReport = Field(..., description="Y -> X -> Y on the one-diff system")
    power_term_error: float = Field(..., description="max |(-1)^n (q)_n Y_n - z^n| / |z^n|")
    passed: bool = Field(..., description="All three hold")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.name}: power term error {self.power_term_error:.3e}"


class CaseOutcome(BaseModel):
    case: CaseReport = Field(..., description="Verification at the given parameters")
    interpretation: Optional[InterpretationReport] = Field(None, description="(f,g)-expansion cross-check")
    sweep: Optional[SweepReport] = Field(None, description="Seeded sweep, when requested")
    passed: bool = Field(..., description="Every report present passed")


class CorpusReport(BaseModel):
    type: Literal["corpus"] = "corpus"
    seed: int = Field(..., description="Sweep seed")
    trials: int = Field(..., description="Sweep trials per case")
    outcomes: List[CaseOutcome] = Field(..., description="One entry per case, in corpus order")
    co_verification: Optional[CoVerificationReport] = Field(None, description="q-binomial chain")
    passed: bool = Field(..., description="Every active case and check passed")

    def format_message(self) -> str:
        active = [o for o in self.outcomes if o.case.status == "active"]
        failed = [o.case.id for o in active if not o.passed]
        verdict = "PASS" if self.passed else "FAIL"
        summary = f"[{verdict}] corpus: {len(active) - len(failed)}/{len(active)} cases passed"
        return summary + (f" (failed: {', '.join(failed)})" if failed else "")


# ========= Loading =========
@lru_cache(maxsize=None)
def _load(path: str) -> Tuple[IdentityCase, ...]:
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    return tuple(IdentityCase(**entry) for entry in raw["cases"])


def corpus(path: Optional[Path] = None) -> List[IdentityCase]:
    """Every bundled case, active ones and stubs, in file order."""
    return list(_load(str(path or CASES_FILE)))


def get_case(case_id: str) -> IdentityCase:
    for case in corpus():
        if case.id == case_id:
            return case
    raise UsageError(UNKNOWN_CASE_MSG.format(case=case_id, valid=", ".join(c.id for c in corpus())))


# ========= Parameters =========
def bind(
    case: IdentityCase, overrides: Optional[Mapping[str, complex]] = None
) -> Dict[str, Union[int, float, complex]]:
    """Defaults with `overrides` applied; integer parameters must stay integral."""
    values: Dict[str, Union[int, float, complex]] = dict(case.defaults)
    for name, value in (overrides or {}).items():
        if name not in values:
            raise UsageError(UNKNOWN_PARAMETER_MSG.format(case=case.id, name=name, valid=", ".join(values)))
        value = complex(value)
        if name in case.integers:
            if value.imag != 0 or value.real != int(value.real):
                raise DomainViolation(DOMAIN_VIOLATION_MSG.format(name=name, value=value, reason="must be an integer"))
            values[name] = int(value.real)
        else:
            values[name] = value.real if value.imag == 0 else value
    return values


def _mp_params(case: IdentityCase, values: Mapping[str, Any]) -> Dict[str, Any]:
    return {name: int(v) if name in case.integers else mp.mpmathify(v) for name, v in values.items()}


def region_violation(case: IdentityCase, values: Mapping[str, Any]) -> Optional[str]:
    for name, rule in case.domain.items():
        if name in values:
            reason = rule.violation(values[name])
            if reason:
                return DOMAIN_VIOLATION_MSG.format(name=name, value=values[name], reason=reason)
    region = REGIONS.get(case.id)
    reason = region(_mp_params(case, values)) if region else None
    if reason:
        return REGION_VIOLATION_MSG.format(case=case.id, reason=reason)
    return None


def check_domain(case: IdentityCase, values: Mapping[str, Any]) -> None:
    message = region_violation(case, values)
    if message:
        raise DomainViolation(message)


# ========= Verification =========
def _unpack(side: Any) -> Tuple[Any, int]:
    if isinstance(side, SeriesValue):
        return side.value, side.terms_used
    return mp.mpmathify(side), 0


def _relative_error(left, right) -> float:
    scale = max(abs(left), abs(right))
    if scale == 0:
        return 0.0
    return float(abs(left - right) / scale)


def _evaluate(case: IdentityCase, values: Mapping[str, Any], tolerance: float):
    """Evaluate both sides at rising precision until two passes agree on each side."""
    evaluator = EVALUATORS[case.id]
    digits = working_digits()
    previous = None
    for attempt in range(MAX_PASSES):
        with mp.workdps(digits):
            lhs, rhs = evaluator(_mp_params(case, values))
            lhs, lhs_terms = _unpack(lhs)
            rhs, rhs_terms = _unpack(rhs)
        current = (lhs, rhs, lhs_terms + rhs_terms, digits)
        if previous is not None:
            drift = max(_relative_error(previous[0], lhs), _relative_error(previous[1], rhs))
            if drift <= tolerance * STABILITY_FRACTION:
                return current
            logger.debug(f"{case.id}: sides moved by {drift:.3e} between passes, retrying")
        previous = current
        digits += NOISE_BUMP_DIGITS
    logger.warning(f"{case.id}: sides not stable after {MAX_PASSES} passes")
    return previous


def verify(
    case: IdentityCase,
    params: Optional[Mapping[str, complex]] = None,
    tolerance: Optional[float] = None,
) -> CaseReport:
    """Evaluate both sides of `case` and compare them.

    Raises DomainViolation for parameters outside the case's domain; series errors
    met during evaluation are reported in the result instead.
    """
    tolerance = case.default_tolerance if tolerance is None else tolerance
    if case.status == "stub":
        return CaseReport(id=case.id, anchor=case.anchor, status="stub", tolerance=tolerance, passed=True)
    values = bind(case, params)
    check_domain(case, values)
    reported = {name: complex(v) for name, v in values.items()}
    try:
        lhs, rhs, terms, digits = _evaluate(case, values, tolerance)
    except (DomainError, ZeroDivisionError) as e:
        report = CaseReport(
            id=case.id,
            anchor=case.anchor,
            status="active",
            params=reported,
            tolerance=tolerance,
            passed=False,
            error=f"{type(e).__name__}: {e}",
        )
        logger.warning(report.format_message())
        return report
    error = _relative_error(lhs, rhs)
    report = CaseReport(
        id=case.id,
        anchor=case.anchor,
        status="active",
        params=reported,
        lhs=complex(lhs),
        rhs=complex(rhs),
        relative_error=error,
        terms_used=terms,
        digits=digits,
        tolerance=tolerance,
        passed=error <= tolerance,
    )
    logger.info(report.format_message())
    return report


def verify_fg_interpretation(
    case: IdentityCase, params: Optional[Mapping[str, complex]] = None
) -> InterpretationReport:
    """Expand the identity's F with fgexpand and compare with its closed-form coefficients."""
    if not case.interpretable or case.fg is None:
        raise UsageError(f"case '{case.id}' has no (f,g) interpretation")
    values = bind(case, params)
    reading = interpret(case.id, values)
    order = case.fg.order or COEFFICIENT_ORDERS
    probe = case.fg.probe if case.fg.probe is not None else 0.1
    spec = ExpansionSpec(F=reading.F, sys=reading.sys, max_order=order)
    table = spec.table()
    checked = min(COEFFICIENT_ORDERS, order)
    deviations = []
    with mp.workdps(table.precision):
        for k in range(checked + 1):
            expected = reading.expected(k)
            scale = max(abs(expected), table.magnitudes[k][0])
            gap = abs(table.coefficient(k) - expected)
            deviations.append(float(gap / scale) if scale != 0 else float(gap))
        target = call(reading.F, mp.mpmathify(probe))
    approximation = partial_sum(spec, order, probe)
    probe_error = abs(approximation - complex(target)) / max(1.0, abs(complex(target)))
    worst = max(deviations)
    report = InterpretationReport(
        id=case.id,
        pair=reading.sys.pair.label(),
        nodes=case.fg.nodes,
        params=case.fg.params,
        order=order,
        coefficients_checked=checked + 1,
        coefficient_deviation=worst,
        probe=probe,
        probe_error=probe_error,
        passed=worst <= COEFFICIENT_TOLERANCE and probe_error <= PROBE_TOLERANCE,
    )
    logger.info(report.format_message())
    return report


# ========= Sweeps =========
def _draw(case: IdentityCase, rng: np.random.Generator) -> Dict[str, Union[int, float]]:
    values: Dict[str, Union[int, float]] = dict(case.defaults)
    for name, (low, high) in case.sample.items():
        if name in case.integers:
            values[name] = int(rng.integers(int(low), int(high) + 1))
        else:
            values[name] = float(rng.uniform(low, high))
    return values


def sample_params(case: IdentityCase, rng: np.random.Generator) -> Dict[str, Union[int, float]]:
    """Draw from the case's sample ranges until the tuple lies in the domain."""
    for _ in range(MAX_RESAMPLES):
        values = _draw(case, rng)
        if region_violation(case, values) is None:
            return values
    raise DomainViolation(f"no valid parameters for '{case.id}' after {MAX_RESAMPLES} draws")


def sweep(case: IdentityCase, seed: int, trials: int) -> SweepReport:
    """Verify `trials` seeded parameter tuples and keep the worst relative error."""
    if trials < 1:
        raise UsageError(f"trials must be positive, got {trials}")
    rng = np.random.default_rng(seed)
    worst, worst_params, failures = 0.0, {}, 0
    for _ in range(trials):
        report = verify(case, sample_params(case, rng))
        if not report.passed:
            failures += 1
        error = report.relative_error if report.relative_error is not None else float("inf")
        if error >= worst:
            worst, worst_params = error, report.params
    report = SweepReport(
        id=case.id,
        trials=trials,
        seed=seed,
        worst_relative_error=worst,
        worst_params=worst_params,
        failures=failures,
        passed=failures == 0,
    )
    logger.info(report.format_message())
    return report


# ========= Co-verification =========
def q_binomial_chain(n: int = 12, z: float = 0.3, q: float = 0.5) -> CoVerificationReport:
    """Finite q-binomial -> sum system -> z^n, alongside both q-binomial cases."""
    cases_passed = verify(get_case("q-binomial")).passed and verify(get_case("q-binomial-finite")).passed
    system = NodeSystem(b=GeometricSequence(start=1.0, ratio=q), x=ConstantSequence(value=0), pair=one_diff_pair())
    with mp.workdps(working_digits()):
        Y = [complex((-z) ** k / qpoch(q, q, k)) for k in range(n + 1)]
    round_trip = sum_system_round_trip(system, Y, n)
    errors = []
    with mp.workdps(working_digits(n * n * float(-mp.log10(q)))):
        X = [qpoch(z, q, k) for k in range(n + 1)]
        recovered, _ = differences_from_values(system, X, n)
        for k in range(n + 1):
            power = mp.mpf(z) ** k
            errors.append(float(abs((-1) ** k * qpoch(q, q, k) * recovered[k] - power) / power))
    power_term_error = max(errors)
    report = CoVerificationReport(
        name="finite q-binomial <-> q-binomial theorem",
        cases_passed=cases_passed,
        round_trip=round_trip,
        power_term_error=power_term_error,
        passed=cases_passed and round_trip.passed and power_term_error <= TERMINATING_TOLERANCE,
    )
    logger.info(report.format_message())
    return report


# ========= Runner =========
def run_case(
    case_id: str,
    trials: int = 0,
    seed: int = 0,
    overrides: Optional[Mapping[str, complex]] = None,
) -> CaseOutcome:
    case = get_case(case_id)
    report = verify(case, overrides)
    interpretation = sweep_report = None
    if case.status == "active":
        if case.interpretable and not overrides:
            interpretation = verify_fg_interpretation(case)
        if trials > 0 and case.sample:
            sweep_report = sweep(case, seed, trials)
    checks = [r.passed for r in (report, interpretation, sweep_report) if r is not None]
    return CaseOutcome(case=report, interpretation=interpretation, sweep=sweep_report, passed=all(checks))


def _run_case_args(args: Tuple[str, int, int, Optional[Dict[str, complex]]]) -> CaseOutcome:
    return run_case(*args)


def run_corpus(
    case_ids: Optional[List[str]] = None,
    sweep: int = 0,
    seed: int = 0,
    workers: int = 1,
    overrides: Optional[Mapping[str, complex]] = None,
) -> CorpusReport:
    """Verify the selected cases (all by default), in corpus order.

    With `workers > 1` cases fan out to a process pool; results keep corpus order.
    """
    ids = [case.id for case in corpus()] if not case_ids else [get_case(i).id for i in case_ids]
    if overrides and not case_ids:
        raise UsageError("parameter overrides need an explicit --case")
    jobs = [(case_id, sweep, seed, dict(overrides) if overrides else None) for case_id in ids]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_case_args, jobs))
    else:
        outcomes = [_run_case_args(job) for job in jobs]
    chain = q_binomial_chain() if not case_ids else None
    passed = all(o.passed for o in outcomes) and (chain is None or chain.passed)
    report = CorpusReport(seed=seed, trials=sweep, outcomes=outcomes, co_verification=chain, passed=passed)
    if report.passed:
        logger.info(report.format_message())
    else:
        logger.warning(report.format_message())
    return report
