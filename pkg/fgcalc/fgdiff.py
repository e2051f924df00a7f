"""
The n-th order (f,g)-difference operator: direct sum, recursion and Leibniz
evaluation, plus the classical divided-difference and q-derivative specializations.
"""
from __future__ import annotations

from typing import Any, Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field

from fgcalc.errors import (
    COINCIDENT_NODES_MSG,
    INSTABILITY_MSG,
    ZERO_DENOMINATOR_MSG,
    CoincidentNodes,
    DomainError,
    NumericalInstability,
    UsageError,
    ZeroDenominator,
)
from fgcalc.fgkernel import FGPair, one_diff_pair
from fgcalc.nodes import AffineSequence, ConstantSequence, GeometricSequence, NodeSystem
from fgcalc.precision import adaptive, cancellation_digits, working_digits
from fgcalc.qcore import Number, qbinom

ESTIMATE_DIGITS: int = 20
CONDITION_CAP: float = 1e300
SHIFT_TOLERANCE: float = 1e-10

Function = Callable[[Any], Any]


class DifferenceResult(BaseModel):
    type: Literal["difference"] = "difference"
    value: complex = Field(..., description="Value of the difference")
    order: int = Field(..., ge=0, description="Order n")
    method: Literal["direct", "recursive", "leibniz"] = Field(..., description="Evaluation route")
    condition_estimate: float = Field(..., ge=1, description="sum |terms| / |sum|")
    magnitude: float = Field(..., ge=0, description="sum |terms|")
    precision: int = Field(..., description="Working digits used")

    def format_message(self) -> str:
        return (
            f"D^({self.order}) [{self.method}] = {self.value:.12g} "
            f"(condition {self.condition_estimate:.3g}, {self.precision} digits)"
        )


def _finite(value) -> float:
    return float(min(value, mp.mpf(CONDITION_CAP)))


def _result(value, magnitude, order: int, method: str, digits: int) -> DifferenceResult:
    if value == 0:
        condition = 1.0 if magnitude == 0 else CONDITION_CAP
    else:
        condition = max(1.0, _finite(magnitude / abs(value)))
    return DifferenceResult(
        value=complex(value),
        order=order,
        method=method,
        condition_estimate=condition,
        magnitude=_finite(magnitude),
        precision=digits,
    )


def call(F: Function, x):
    return mp.mpmathify(F(x))


def _nonzero(value, what: str, i: int, k: int):
    if value == 0 or abs(value) <= 8 * mp.eps:
        raise ZeroDenominator(ZERO_DENOMINATOR_MSG.format(what=what, i=i, k=k), (i, k))
    return value


def difference_weights(pair: FGPair, nodes: Sequence, params: Sequence) -> List[Any]:
    """Weights w_k with D^(n){F} = sum_k w_k F(b_k); params[0] plays x_0."""
    n = len(nodes) - 1
    if n == 0:
        return [1 / _nonzero(pair.f(params[0], nodes[0]), "f(x_0,b_0)", 0, 0)]
    weights = []
    for k, b_k in enumerate(nodes):
        numerator = mp.mpf(1)
        for i in range(1, n):
            numerator *= pair.f(params[i], b_k)
        denominator = mp.mpf(1)
        for i, b_i in enumerate(nodes):
            if i != k:
                denominator *= _nonzero(pair.g(b_i, b_k), "g(b_i,b_k)", i, k)
        weights.append(numerator / denominator)
    return weights


def _direct(F: Function, pair: FGPair, nodes: Sequence, params: Sequence):
    terms = [w * call(F, b) for w, b in zip(difference_weights(pair, nodes, params), nodes)]
    scale = max((abs(call(F, b)) for b in nodes), default=mp.mpf(0))
    return mp.fsum(terms), mp.fsum(abs(t) for t in terms), scale


def resolve_sum(compute: Callable[[], Tuple[Any, Any, Any]], label: str):
    """Evaluate a cancelling weighted sum at enough digits to resolve its value.

    `compute` returns (value, magnitude, scale) where scale is the size of the
    summed function values; the first cheap pass sizes the working precision.
    """
    with mp.workdps(ESTIMATE_DIGITS):
        _, magnitude, scale = compute()
    extra = cancellation_digits(scale, magnitude) if scale != 0 else 0.0
    result, digits = adaptive(compute, lambda r: [(r[0], r[1])], working_digits(extra), label)
    return result[0], result[1], digits


def _check_order(n: int) -> None:
    if n < 0:
        raise UsageError(f"order must be nonnegative, got {n}")


def fg_difference(F: Function, sys: NodeSystem, n: int, start: int = 0, shift: int = 0) -> DifferenceResult:
    """Direct evaluation of D^(n)[b_start..b_{start+n}; x_{shift+1}..]{F}.

    Args:
        F: mpmath-generic target function.
        sys: Node system supplying nodes, parameters and the pair.
        n: Order of the difference.
        start: Index of the first node in the window.
        shift: Index of the parameter that plays x_0 for the window.

    Returns:
        DifferenceResult with method "direct".
    """
    _check_order(n)

    def compute():
        nodes, params = sys.window(start, n, shift)
        return _direct(F, sys.pair, nodes, params)

    value, magnitude, digits = resolve_sum(compute, f"direct D^({n})")
    return _result(value, magnitude, n, "direct", digits)


def _recursive_table(F: Function, pair: FGPair, nodes: Sequence, params: Sequence):
    """Triangle of windowed differences: table[m][j] = D^(m)[b_j..b_{j+m}]."""
    f0 = params[0]
    values = [[call(F, b) / _nonzero(pair.f(f0, b), "f(x_0,b_j)", 0, j) for j, b in enumerate(nodes)]]
    magnitudes = [[abs(v) for v in values[0]]]
    order = len(nodes) - 1
    for m in range(order):
        x_m = params[m]
        row, mags = [], []
        for j in range(order - m):
            left, right = nodes[j], nodes[j + m + 1]
            w_left = pair.f(x_m, left) / _nonzero(pair.g(right, left), "g(b_i,b_k)", j + m + 1, j)
            w_right = pair.f(x_m, right) / _nonzero(pair.g(left, right), "g(b_i,b_k)", j, j + m + 1)
            row.append(w_left * values[m][j] + w_right * values[m][j + 1])
            mags.append(abs(w_left) * magnitudes[m][j] + abs(w_right) * magnitudes[m][j + 1])
        values.append(row)
        magnitudes.append(mags)
    return values, magnitudes


class DifferenceTable(BaseModel):
    """All windowed differences D^(m)[b_j..b_{j+m}] with j + m <= order."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    order: int = Field(..., description="Largest order in the table")
    values: List[List[Any]] = Field(..., description="values[m][j] at working precision")
    magnitudes: List[List[Any]] = Field(..., description="Propagated sum of absolute terms")
    precision: int = Field(..., description="Working digits used")

    def coefficient(self, m: int):
        return self.values[m][0]


def difference_table(F: Function, sys: NodeSystem, order: int, measured_rows: int = 2) -> DifferenceTable:
    """Build the recursion triangle, resolving the first `measured_rows` windows of each order."""
    _check_order(order)

    def compute():
        nodes, params = sys.window(0, order, 0)
        return _recursive_table(F, sys.pair, nodes, params)

    def measure(result):
        values, magnitudes = result
        for m in range(order + 1):
            for j in range(min(measured_rows, order - m + 1)):
                yield values[m][j], magnitudes[m][j]

    with mp.workdps(ESTIMATE_DIGITS):
        nodes, params = sys.window(0, order, 0)
        _, top_magnitude, scale = _direct(F, sys.pair, nodes, params)
    extra = cancellation_digits(scale, top_magnitude) if scale != 0 else 0.0
    (values, magnitudes), digits = adaptive(compute, measure, working_digits(extra), f"table to order {order}")
    logger.debug(f"difference table to order {order} resolved at {digits} digits")
    return DifferenceTable(order=order, values=values, magnitudes=magnitudes, precision=digits)


def fg_difference_recursive(F: Function, sys: NodeSystem, n: int, start: int = 0) -> DifferenceResult:
    """D^(n) built from two order-(n-1) differences on shifted windows, memoized as a triangle."""
    _check_order(n)

    def compute():
        nodes, params = sys.window(start, n, 0)
        values, magnitudes = _recursive_table(F, sys.pair, nodes, params)
        scale = max(abs(call(F, b)) for b in nodes)
        return values[n][0], magnitudes[n][0], scale

    value, magnitude, digits = resolve_sum(compute, f"recursive D^({n})")
    return _result(value, magnitude, n, "recursive", digits)


def fg_leibniz(F: Function, H: Function, sys: NodeSystem, n: int) -> DifferenceResult:
    """sum_k f(x_k,b_k) D^(k)[b_0..b_k]{H} D^(n-k)[b_k..b_n]{F}, equal to D^(n){FH}."""
    _check_order(n)
    pair = sys.pair

    def compute():
        total, magnitude = mp.mpf(0), mp.mpf(0)
        scale = mp.mpf(0)
        for k in range(n + 1):
            h_nodes, h_params = sys.window(0, k, 0)
            f_nodes, f_params = sys.window(k, n - k, k)
            h_value, h_mag, h_scale = _direct(H, pair, h_nodes, h_params)
            f_value, f_mag, f_scale = _direct(F, pair, f_nodes, f_params)
            weight = pair.f(sys.param(k), sys.node(k))
            total += weight * h_value * f_value
            magnitude += abs(weight) * h_mag * f_mag
            scale = max(scale, h_scale * f_scale)
        return total, magnitude, scale

    value, magnitude, digits = resolve_sum(compute, f"leibniz D^({n})")
    return _result(value, magnitude, n, "leibniz", digits)


def basis_function(sys: NodeSystem, m: int) -> Function:
    """prod_{i<m} g(b_i, x) / prod_{i=1..m} f(x_i, x)."""
    pair = sys.pair

    def basis(x):
        value = mp.mpf(1)
        for i in range(m):
            value *= pair.g(sys.node(i), x)
        for i in range(1, m + 1):
            value /= pair.f(sys.param(i), x)
        return value

    return basis


# ========= Classical specializations =========
def divided_difference(F: Function, nodes: Sequence[Number]) -> complex:
    """Classical divided difference F[x_1..x_{n+1}] from the Newton table."""
    points = np.asarray([complex(v) for v in nodes], dtype=np.complex128)
    n = len(points)
    for i in range(n):
        for k in range(i):
            if abs(points[i] - points[k]) <= 1e-12 * max(1.0, abs(points[i])):
                raise CoincidentNodes(COINCIDENT_NODES_MSG.format(i=k, k=i, value=points[i]))
    coef = np.zeros((n, n), dtype=np.complex128)
    coef[:, 0] = [complex(F(p)) for p in points]
    for j in range(1, n):
        for i in range(n - j):
            coef[i][j] = (coef[i + 1][j - 1] - coef[i][j - 1]) / (points[i + j] - points[i])
    return complex(coef[0][n - 1])


class BackwardDifferenceRow(BaseModel):
    h: float = Field(..., description="Step")
    approximation: complex = Field(..., description="(-1)^n D^(n)[x, x+h, ..., x+nh]{F}")
    error: float = Field(..., description="|approximation - F^(n)(x)/n!|")


class BackwardDifferenceReport(BaseModel):
    type: Literal["backward_difference"] = "backward_difference"
    order: int = Field(..., description="Order n")
    target: complex = Field(..., description="F^(n)(x)/n!")
    rows: List[BackwardDifferenceRow] = Field(..., description="One row per step")
    observed_order: Optional[float] = Field(None, description="Empirical convergence order in h")

    def format_message(self) -> str:
        rate = "n/a" if self.observed_order is None else f"{self.observed_order:.2f}"
        return f"backward difference n={self.order}: target {self.target:.10g}, observed order {rate}"


def backward_difference_limit(
    F: Function,
    x: Number,
    n: int,
    h_sequence: Sequence[float],
    derivative: Optional[Number] = None,
) -> BackwardDifferenceReport:
    """Tabulate the equally spaced difference against F^(n)(x)/n! as h shrinks."""
    target = mp.mpmathify(derivative) if derivative is not None else mp.diff(F, mp.mpmathify(x), n)
    target = target / mp.factorial(n)
    rows = []
    for h in h_sequence:
        sys = NodeSystem(
            b=AffineSequence(start=complex(x), step=complex(h)),
            x=ConstantSequence(value=0),
            pair=one_diff_pair(),
        )
        value = (-1) ** n * fg_difference(F, sys, n).value
        rows.append(BackwardDifferenceRow(h=h, approximation=value, error=float(abs(value - complex(target)))))
    observed = None
    if len(rows) >= 2:
        a, b = rows[-2], rows[-1]
        if a.error > 0 and b.error > 0 and a.h != b.h:
            observed = float(mp.log(a.error / b.error) / mp.log(a.h / b.h))
    report = BackwardDifferenceReport(order=n, target=complex(target), rows=rows, observed_order=observed)
    logger.info(report.format_message())
    return report


# ========= q-derivative =========
def _require_nonzero_point(x) -> None:
    if x == 0:
        raise DomainError("the q-derivative needs x != 0")


def qdiff(F: Function, q_value: Number, x: Number) -> complex:
    """(F(x) - F(qx)) / x."""
    x = mp.mpmathify(x)
    _require_nonzero_point(x)
    q = mp.mpmathify(q_value)
    with mp.workdps(working_digits()):
        value = (call(F, x) - call(F, q * x)) / x
    return complex(value)


def _ryde(F: Function, q, x, n: int):
    terms = [
        (-1) ** k * q ** (k * (k + 1) // 2 - n * k) * qbinom(n, k, q) * call(F, x * q**k)
        for k in range(n + 1)
    ]
    scale = max(abs(call(F, x * q**k)) for k in range(n + 1))
    return mp.fsum(terms) / x**n, mp.fsum(abs(t) for t in terms) / abs(x) ** n, scale


def qdiff_n_mp(F: Function, q_value: Number, x: Number, n: int):
    """Explicit n-th q-derivative at working precision (mpmath value)."""
    x = mp.mpmathify(x)
    _require_nonzero_point(x)
    if n < 0:
        raise UsageError(f"order must be nonnegative, got {n}")
    if n == 0:
        return call(F, x)
    value, _, _ = resolve_sum(lambda: _ryde(F, mp.mpmathify(q_value), mp.mpmathify(x), n), f"D_q^{n}")
    return value


def qdiff_n(F: Function, q_value: Number, x: Number, n: int) -> complex:
    """x^-n sum_k (-1)^k q^(C(k+1,2)-nk) [n,k]_q F(xq^k)."""
    return complex(qdiff_n_mp(F, q_value, x, n))


def qdiff_iterated(F: Function, q_value: Number, x: Number, n: int) -> complex:
    """n-fold application of qdiff, memoized over the points x q^j."""
    x = mp.mpmathify(x)
    _require_nonzero_point(x)
    q = mp.mpmathify(q_value)
    extra = (n * (n - 1) / 2) * float(-mp.log10(abs(q))) + n * max(0.0, float(-mp.log10(abs(x)))) + n
    with mp.workdps(working_digits(extra)):
        level = [call(F, x * q**j) for j in range(n + 1)]
        for k in range(1, n + 1):
            level = [(level[j] - level[j + 1]) / (x * q**j) for j in range(n + 1 - k)]
        return complex(level[0])


def qdiff_shifted(F: Function, q_value: Number, x: Number, n: int, m: int) -> complex:
    """D^(n) on the window [xq^m..xq^(n+m)], checked against (-1)^n q^-nm / (q;q)_n D_q^n{F(tq^m)}."""
    x = mp.mpmathify(x)
    _require_nonzero_point(x)
    q = mp.mpmathify(q_value)
    sys = NodeSystem(
        b=_geometric(x * q**m, q),
        x=ConstantSequence(value=0),
        pair=one_diff_pair(),
    )
    left = fg_difference(F, sys, n)
    shifted = qdiff_n_mp(lambda t: F(t * q**m), q, x, n)
    with mp.workdps(working_digits()):
        right = (-1) ** n * q ** (-n * m) / _qfact(q, n) * shifted
    tolerance = SHIFT_TOLERANCE * max(left.magnitude, abs(complex(right)), 1e-300)
    if abs(left.value - complex(right)) > tolerance:
        raise NumericalInstability(INSTABILITY_MSG.format(what="shifted window", left=left.value, right=complex(right)))
    return left.value


def qdiff_leibniz(F: Function, H: Function, q_value: Number, x: Number, n: int) -> complex:
    """sum_k q^((k-n)k) [n,k]_q D_q^k{F}(x) D_q^(n-k){H(q^k t)}(x)."""
    x = mp.mpmathify(x)
    _require_nonzero_point(x)
    q = mp.mpmathify(q_value)
    total = mp.mpf(0)
    with mp.workdps(working_digits()):
        for k in range(n + 1):
            left = qdiff_n_mp(F, q, x, k)
            right = qdiff_n_mp(lambda t, k=k: H(t * q**k), q, x, n - k)
            total += q ** ((k - n) * k) * qbinom(n, k, q) * left * right
    return complex(total)


def _qfact(q, n: int):
    value = mp.mpf(1)
    for i in range(1, n + 1):
        value *= 1 - q**i
    return value


def _geometric(start, ratio):
    return GeometricSequence(start=complex(start), ratio=complex(ratio))
