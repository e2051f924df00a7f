"""
(f,g) kernel pairs: evaluation, the three-term membership identity
f(x,a)g(b,c) + f(x,b)g(c,a) + f(x,c)g(a,b) = 0, and the built-in pairs.
"""
from __future__ import annotations

from typing import Any, Callable, Dict, List, Literal, Mapping, Optional, Tuple

import numpy as np
from loguru import logger
from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field

from fgcalc.errors import MISSING_PARAMETER_MSG, DomainError, MissingParameter, UsageError
from fgcalc.grammar import parse_assignments, split_spec
from fgcalc.qcore import Number, QBase, theta

# ========= Pair Constants =========
PAIR_NAMES: Tuple[str, ...] = ("one-diff", "diff-diff", "onexy-diff", "bibasic", "theta")
CONTROL_PAIR: str = "broken"
KERNEL_TOLERANCE: float = 1e-12
THETA_KERNEL_TOLERANCE: float = 1e-8
ANTISYMMETRY_TOLERANCE: float = 1e-12
SAMPLE_MIN_MODULUS: float = 0.5
SAMPLE_MAX_MODULUS: float = 2.0
UNKNOWN_PAIR_MSG: str = "Unknown pair '{name}'. Valid pairs: {valid}."


class FGPair(BaseModel):
    """An evaluable pair (f, g) with its bound parameters."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str = Field(..., description="Registry name of the pair")
    params: Dict[str, complex] = Field(default_factory=dict, description="Bound parameters")
    f: Callable[[Any, Any], Any] = Field(..., description="f(x, y)")
    g: Callable[[Any, Any], Any] = Field(..., description="g(x, y), antisymmetric")

    def label(self) -> str:
        if not self.params:
            return self.name
        assigned = ",".join(f"{key}={value}" for key, value in self.params.items())
        return f"{self.name}:{assigned}"


# ========= Pair constructors =========
def one_diff_pair() -> FGPair:
    return FGPair(name="one-diff", f=lambda x, y: mp.mpf(1), g=lambda x, y: x - y)


def diff_diff_pair() -> FGPair:
    return FGPair(name="diff-diff", f=lambda x, y: x - y, g=lambda x, y: x - y)


def onexy_diff_pair() -> FGPair:
    return FGPair(name="onexy-diff", f=lambda x, y: 1 - x * y, g=lambda x, y: x - y)


def bibasic_pair(a: Number, b: Number) -> FGPair:
    """((1-axy)(1-bx/y), (x-y)(1-b/(axy)))."""
    if a == 0:
        raise DomainError("bibasic pair requires a != 0")
    a_mp, b_mp = mp.mpmathify(a), mp.mpmathify(b)

    def f(x, y):
        if y == 0:
            raise DomainError("bibasic f has a pole at y = 0")
        return (1 - a_mp * x * y) * (1 - b_mp * x / y)

    def g(x, y):
        if x * y == 0:
            raise DomainError("bibasic g has a pole at xy = 0")
        return (x - y) * (1 - b_mp / (a_mp * x * y))

    return FGPair(name="bibasic", params={"a": complex(a), "b": complex(b)}, f=f, g=g)


def theta_pair(q: Number) -> FGPair:
    """f = g = y theta(xy) theta(x/y)."""
    base = QBase.of(q)

    def h(x, y):
        if y == 0:
            raise DomainError("theta pair has a pole at y = 0")
        return y * theta(x * y, base) * theta(x / y, base)

    return FGPair(name="theta", params={"q": complex(base.q)}, f=h, g=h)


def broken_pair() -> FGPair:
    """f = 1 + xy^2, g = x - y: fails the three-term identity."""
    return FGPair(name=CONTROL_PAIR, f=lambda x, y: 1 + x * y * y, g=lambda x, y: x - y)


def _require(params: Mapping[str, Number], pair: str, name: str) -> Number:
    if name not in params or params[name] is None:
        raise MissingParameter(MISSING_PARAMETER_MSG.format(pair=pair, name=name))
    return params[name]


def make_pair(name: str, params: Optional[Mapping[str, Number]] = None) -> FGPair:
    params = params or {}
    if name == "one-diff":
        return one_diff_pair()
    if name == "diff-diff":
        return diff_diff_pair()
    if name == "onexy-diff":
        return onexy_diff_pair()
    if name == "bibasic":
        return bibasic_pair(_require(params, name, "a"), _require(params, name, "b"))
    if name == "theta":
        return theta_pair(_require(params, name, "q"))
    if name == CONTROL_PAIR:
        return broken_pair()
    raise UsageError(UNKNOWN_PAIR_MSG.format(name=name, valid=", ".join(PAIR_NAMES + (CONTROL_PAIR,))))


def pair_by_name(spec: str) -> FGPair:
    """Build a pair from `name[:key=value,...]`, e.g. `bibasic:a=0.2,b=0.1`."""
    name, rest = split_spec(spec)
    return make_pair(name, parse_assignments(rest))


def builtin_pairs(params: Mapping[str, Number]) -> List[FGPair]:
    """The five built-in pairs; `params` must supply a, b (bibasic) and q (theta)."""
    return [make_pair(name, params) for name in PAIR_NAMES]


# ========= Kernel identity =========
def kernel_terms(pair: FGPair, x: Number, a: Number, b: Number, c: Number):
    """Return the three products of the identity at (x; a, b, c)."""
    x, a, b, c = (mp.mpmathify(v) for v in (x, a, b, c))
    return (
        pair.f(x, a) * pair.g(b, c),
        pair.f(x, b) * pair.g(c, a),
        pair.f(x, c) * pair.g(a, b),
    )


def kernel_residual(pair: FGPair, x: Number, a: Number, b: Number, c: Number):
    return sum(kernel_terms(pair, x, a, b, c))


def sample_points(
    rng: np.random.Generator,
    count: int,
    low: float = SAMPLE_MIN_MODULUS,
    high: float = SAMPLE_MAX_MODULUS,
) -> np.ndarray:
    """Complex points with modulus uniform in [low, high] and uniform phase."""
    radius = rng.uniform(low, high, size=count)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return radius * np.exp(1j * phase)


class KernelReport(BaseModel):
    type: Literal["kernel"] = "kernel"
    pair: str = Field(..., description="Pair label")
    samples: int = Field(..., description="Number of sampled quadruples")
    max_residual: float = Field(..., description="Largest |residual| / (1 + largest product)")
    worst_point: List[complex] = Field(..., description="(x, a, b, c) attaining the maximum")
    tolerance: float = Field(..., description="Pass threshold")
    passed: bool = Field(..., description="max_residual <= tolerance")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] kernel {self.pair}: max residual {self.max_residual:.3e} over {self.samples} samples"


class AntisymmetryReport(BaseModel):
    type: Literal["antisymmetry"] = "antisymmetry"
    pair: str = Field(..., description="Pair label")
    samples: int = Field(..., description="Number of sampled pairs")
    max_residual: float = Field(..., description="Largest |g(x,y)+g(y,x)| / (1 + |g(x,y)|)")
    tolerance: float = Field(..., description="Pass threshold")
    passed: bool = Field(..., description="max_residual <= tolerance")
    informational: bool = Field(..., description="True when the kernel residual, not this report, decides membership")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        note = " (informational)" if self.informational else ""
        return f"[{verdict}] antisymmetry {self.pair}: max residual {self.max_residual:.3e}{note}"


def default_kernel_tolerance(pair: FGPair) -> float:
    return THETA_KERNEL_TOLERANCE if pair.name == "theta" else KERNEL_TOLERANCE


def check_kernel(
    pair: FGPair,
    samples: int = 1000,
    seed: int = 0,
    tolerance: Optional[float] = None,
    low: float = SAMPLE_MIN_MODULUS,
    high: float = SAMPLE_MAX_MODULUS,
) -> KernelReport:
    """Evaluate the three-term identity at seeded random quadruples."""
    tolerance = default_kernel_tolerance(pair) if tolerance is None else tolerance
    rng = np.random.default_rng(seed)
    points = sample_points(rng, 4 * samples, low, high).reshape(samples, 4)
    worst = 0.0
    worst_point = [complex(v) for v in points[0]]
    for quad in points:
        terms = kernel_terms(pair, *quad)
        scale = max(abs(t) for t in terms)
        relative = float(abs(sum(terms)) / (1 + scale))
        if relative > worst:
            worst = relative
            worst_point = [complex(v) for v in quad]
    report = KernelReport(
        pair=pair.label(),
        samples=samples,
        max_residual=worst,
        worst_point=worst_point,
        tolerance=tolerance,
        passed=worst <= tolerance,
    )
    logger.info(report.format_message())
    return report


def check_antisymmetry(
    pair: FGPair,
    samples: int = 100,
    seed: int = 0,
    tolerance: float = ANTISYMMETRY_TOLERANCE,
) -> AntisymmetryReport:
    if samples < 1:
        raise UsageError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    points = sample_points(rng, 2 * samples).reshape(samples, 2)
    worst = 0.0
    for x, y in points:
        x, y = mp.mpmathify(x), mp.mpmathify(y)
        forward = pair.g(x, y)
        worst = max(worst, float(abs(forward + pair.g(y, x)) / (1 + abs(forward))))
    report = AntisymmetryReport(
        pair=pair.label(),
        samples=samples,
        max_residual=worst,
        tolerance=tolerance,
        passed=worst <= tolerance,
        informational=pair.name == "theta",
    )
    logger.info(report.format_message())
    return report
