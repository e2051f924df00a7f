"""
The (f,g)-inversion matrix pair at finite size, the equivalent sum systems, and the
Gessel-Stanton matrix pair with its bridge to the (1-xy, x-y) inversion.
"""
from __future__ import annotations

from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field

from fgcalc.errors import ZERO_DENOMINATOR_MSG, UsageError, ZeroDenominator
from fgcalc.fgdiff import call, difference_table, difference_weights
from fgcalc.fgkernel import onexy_diff_pair
from fgcalc.nodes import GeometricSequence, NodeSystem
from fgcalc.precision import magnitude_digits, working_digits
from fgcalc.qcore import Number, qpoch

ESTIMATE_DIGITS: int = 20
INVERSION_TOLERANCE: float = 1e-9
BRIDGE_TOLERANCE: float = 1e-9
ROUND_TRIP_TOLERANCE: float = 1e-10
SCALE_FLOOR = mp.mpf("1e-300")


class TriangularPair(BaseModel):
    """Lower-triangular B and its inverse, stored as object arrays of mpmath entries."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    size: int = Field(..., ge=1, description="Matrix dimension N+1")
    B: np.ndarray = Field(..., description="B[n][k], zero above the diagonal")
    Binv: np.ndarray = Field(..., description="Inverse entries, zero above the diagonal")
    sys: Optional[NodeSystem] = Field(None, description="Node system for the (f,g) convention")
    convention: Literal["fg-inversion", "gessel-stanton"] = Field(..., description="Entry formulas used")
    params: Dict[str, complex] = Field(default_factory=dict, description="Closed-form parameters")
    precision: int = Field(..., description="Working digits the entries were built at")


class InversionReport(BaseModel):
    type: Literal["inversion"] = "inversion"
    label: str = Field(..., description="Pair or convention")
    size: int = Field(..., description="Matrix dimension")
    max_deviation: float = Field(..., description="max |Binv B - I| and |B Binv - I| over the triangle")
    left_deviation: float = Field(..., description="max |Binv B - I|")
    right_deviation: float = Field(..., description="max |B Binv - I|")
    worst_index: Tuple[int, int] = Field(..., description="(n, k) attaining the maximum")
    tolerance: float = Field(..., description="Pass threshold")
    passed: bool = Field(..., description="max_deviation <= tolerance")
    precision: int = Field(..., description="Working digits used")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"[{verdict}] inversion {self.label} size {self.size}: max deviation "
            f"{self.max_deviation:.3e} at {self.worst_index}"
        )


class BridgeReport(BaseModel):
    type: Literal["bridge"] = "bridge"
    name: str = Field(..., description="Which relation was checked")
    max_deviation: float = Field(..., description="Largest relative deviation")
    worst_index: Tuple[int, int] = Field(..., description="Entry attaining the maximum")
    tolerance: float = Field(..., description="Pass threshold")
    passed: bool = Field(..., description="max_deviation <= tolerance")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.name}: max relative deviation {self.max_deviation:.3e} at {self.worst_index}"


class RoundTripReport(BaseModel):
    type: Literal["round_trip"] = "round_trip"
    order: int = Field(..., description="Largest index n")
    max_error: float = Field(..., description="max |Y'_n - Y_n|")
    condition: float = Field(..., ge=1, description="Largest sum |terms| / |sum| over both directions")
    passed: bool = Field(..., description="max_error <= tolerance * condition")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] sum-system round trip to n={self.order}: error {self.max_error:.3e}"


# ========= (f,g)-inversion =========
def _nonzero(value, what: str, i: int, k: int):
    if value == 0 or abs(value) <= 8 * mp.eps:
        raise ZeroDenominator(ZERO_DENOMINATOR_MSG.format(what=what, i=i, k=k), (i, k))
    return value


def _fg_matrices(sys: NodeSystem, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """Entries by running products down each column of B and along each row of Binv."""
    pair = sys.pair
    b = sys.nodes(size - 1)
    x = [sys.param(i) for i in range(size)]
    diagonal_f = [_nonzero(pair.f(x[n], b[n]), "f(x_n,b_n)", n, n) for n in range(size)]
    B = np.full((size, size), mp.mpf(0), dtype=object)
    Binv = np.full((size, size), mp.mpf(0), dtype=object)
    for k in range(size):
        B[k][k] = mp.mpf(1)
        for n in range(k, size - 1):
            B[n + 1][k] = B[n][k] * pair.f(x[n], b[k]) / _nonzero(pair.g(b[n + 1], b[k]), "g(b_i,b_k)", n + 1, k)
    for n in range(size):
        running = mp.mpf(1)
        Binv[n][n] = mp.mpf(1)
        for k in range(n, 0, -1):
            running *= pair.f(x[k], b[n]) / _nonzero(pair.g(b[k - 1], b[n]), "g(b_i,b_n)", k - 1, n)
            Binv[n][k - 1] = diagonal_f[k - 1] / diagonal_f[n] * running
    return B, Binv


def _amplification(B: np.ndarray, Binv: np.ndarray) -> float:
    """Digits cancelled by the triangle products Binv B and B Binv."""
    left = np.abs(Binv) @ np.abs(B)
    right = np.abs(B) @ np.abs(Binv)
    return float(magnitude_digits(max(max(left.flat), max(right.flat))))


def _build(make: Callable[[], Tuple[np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, np.ndarray, int]:
    with mp.workdps(ESTIMATE_DIGITS):
        B, Binv = make()
        extra = _amplification(B, Binv)
    digits = working_digits(extra)
    with mp.workdps(digits):
        B, Binv = make()
    return B, Binv, digits


def build_pair(sys: NodeSystem, size: int) -> TriangularPair:
    """Populate B and Binv from the closed forms of the (f,g)-inversion.

    Args:
        sys: Node system; x_0 enters B through f(x_0, b_0).
        size: Matrix dimension N+1.

    Returns:
        TriangularPair at a precision that resolves the triangle products.
    """
    if size < 1:
        raise UsageError(f"size must be at least 1, got {size}")
    B, Binv, digits = _build(lambda: _fg_matrices(sys, size))
    logger.debug(f"built {sys.pair.label()} inversion of size {size} at {digits} digits")
    return TriangularPair(size=size, B=B, Binv=Binv, sys=sys, convention="fg-inversion", precision=digits)


def _deviation(product: np.ndarray) -> Tuple[Any, Tuple[int, int]]:
    worst, where = mp.mpf(0), (0, 0)
    size = product.shape[0]
    for n in range(size):
        for k in range(n + 1):
            gap = abs(product[n][k] - (1 if n == k else 0))
            if gap > worst:
                worst, where = gap, (n, k)
    return worst, where


def verify_pair(tp: TriangularPair, tolerance: float = INVERSION_TOLERANCE) -> InversionReport:
    """Compose both products over the triangle and report the worst Kronecker deviation."""
    with mp.workdps(tp.precision):
        left, left_at = _deviation(tp.Binv @ tp.B)
        right, right_at = _deviation(tp.B @ tp.Binv)
    worst, where = (left, left_at) if left >= right else (right, right_at)
    label = tp.sys.pair.label() if tp.sys is not None else tp.convention
    report = InversionReport(
        label=label,
        size=tp.size,
        max_deviation=float(worst),
        left_deviation=float(left),
        right_deviation=float(right),
        worst_index=where,
        tolerance=tolerance,
        passed=bool(worst <= tolerance),
        precision=tp.precision,
    )
    logger.info(report.format_message())
    return report


# ========= Sum systems =========
def _check_length(values: Sequence, n: int) -> None:
    if n < 0:
        raise UsageError(f"order must be nonnegative, got {n}")
    if len(values) < n + 1:
        raise UsageError(f"need {n + 1} values, got {len(values)}")


def values_from_differences(sys: NodeSystem, Y: Sequence, n: int):
    """X_m = sum_k Y_k f(x_k,b_k) prod_{i<k} g(b_i,b_m) / prod_{i=1..k} f(x_i,b_m)."""
    pair = sys.pair
    b = sys.nodes(n)
    X, magnitudes = [], []
    for m in range(n + 1):
        total, size, basis = mp.mpf(0), mp.mpf(0), mp.mpf(1)
        for k in range(m + 1):
            if k > 0:
                basis *= pair.g(b[k - 1], b[m]) / _nonzero(pair.f(sys.param(k), b[m]), "f(x_i,b_n)", k, m)
            term = mp.mpmathify(Y[k]) * pair.f(sys.param(k), b[k]) * basis
            total += term
            size += abs(term)
        X.append(total)
        magnitudes.append(size)
    return X, magnitudes


def differences_from_values(sys: NodeSystem, X: Sequence, n: int):
    """Y_m = sum_k X_k prod_{i=1..m-1} f(x_i,b_k) / prod_{i!=k} g(b_i,b_k)."""
    Y, magnitudes = [], []
    for m in range(n + 1):
        nodes, params = sys.window(0, m, 0)
        terms = [w * mp.mpmathify(X[k]) for k, w in enumerate(difference_weights(sys.pair, nodes, params))]
        Y.append(mp.fsum(terms))
        magnitudes.append(mp.fsum(abs(t) for t in terms))
    return Y, magnitudes


def _system_digits(sys: NodeSystem, values: Sequence, n: int) -> int:
    with mp.workdps(ESTIMATE_DIGITS):
        forward, forward_mag = values_from_differences(sys, values, n)
        _, backward_mag = differences_from_values(sys, forward, n)
    scale = max(max(abs(mp.mpmathify(v)) for v in values[: n + 1]), SCALE_FLOOR)
    peak = max(max(forward_mag), max(backward_mag))
    return working_digits(magnitude_digits(peak / scale))


def invert_sum_system(sys: NodeSystem, Y: Sequence[Number], n: int) -> List[complex]:
    """Given Y_0..Y_n return X_0..X_n of the equivalent linear system."""
    _check_length(Y, n)
    with mp.workdps(_system_digits(sys, Y, n)):
        X, _ = values_from_differences(sys, Y, n)
        return [complex(v) for v in X]


def recover_sum_system(sys: NodeSystem, X: Sequence[Number], n: int) -> List[complex]:
    """Given X_0..X_n return Y_0..Y_n, the n-th differences of any F with F(b_k) = X_k."""
    _check_length(X, n)
    with mp.workdps(ESTIMATE_DIGITS):
        _, magnitudes = differences_from_values(sys, X, n)
    scale = max(max(abs(mp.mpmathify(v)) for v in X[: n + 1]), SCALE_FLOOR)
    with mp.workdps(working_digits(magnitude_digits(max(magnitudes) / scale))):
        Y, _ = differences_from_values(sys, X, n)
        return [complex(v) for v in Y]


def sum_system_round_trip(
    sys: NodeSystem, Y: Sequence[Number], n: int, tolerance: float = ROUND_TRIP_TOLERANCE
) -> RoundTripReport:
    """Apply both directions in one precision context and compare with the input."""
    _check_length(Y, n)
    with mp.workdps(_system_digits(sys, Y, n)):
        X, forward_mag = values_from_differences(sys, Y, n)
        back, backward_mag = differences_from_values(sys, X, n)
        error = max(abs(back[m] - mp.mpmathify(Y[m])) for m in range(n + 1))
        condition = mp.mpf(1)
        for value, size in zip(X + back, forward_mag + backward_mag):
            if value != 0:
                condition = max(condition, size / abs(value))
    condition = float(min(condition, mp.mpf(1e300)))
    report = RoundTripReport(
        order=n,
        max_error=float(error),
        condition=condition,
        passed=bool(error <= tolerance * condition),
    )
    logger.info(report.format_message())
    return report


# ========= Gessel-Stanton pair =========
def gessel_stanton_system(A: Number, p: Number, q_value: Number) -> NodeSystem:
    """(1-xy, x-y) with b_i = q^i and x_i = A p^i."""
    return NodeSystem(
        b=GeometricSequence(start=1.0, ratio=complex(q_value)),
        x=GeometricSequence(start=complex(A), ratio=complex(p)),
        pair=onexy_diff_pair(),
    )


def _gs_matrices(A, p, q, size: int) -> Tuple[np.ndarray, np.ndarray]:
    A, p, q = (mp.mpmathify(v) for v in (A, p, q))
    B = np.full((size, size), mp.mpf(0), dtype=object)
    Binv = np.full((size, size), mp.mpf(0), dtype=object)
    for n in range(size):
        for k in range(n + 1):
            d = n - k
            q_fact = _nonzero(qpoch(q, q, d), "(q;q)_(n-k)", n, k)
            B[n][k] = qpoch(A * p**k * q**k, p, d) / q_fact * q ** (-n * k)
            Binv[n][k] = (
                (-1) ** d
                * q ** (d * (d + 1) // 2 + n * k)
                * (1 - A * p**k * q**k)
                * qpoch(A * q**n * p ** (n - 1), 1 / p, d - 1)
                / q_fact
            )
    return B, Binv


def gessel_stanton_pair(A: Number, p: Number, q_value: Number, size: int) -> TriangularPair:
    """B_{n,k} = (Ap^kq^k;p)_{n-k} / (q;q)_{n-k} q^-nk and its closed-form inverse."""
    if size < 1:
        raise UsageError(f"size must be at least 1, got {size}")
    if not (0 < abs(complex(p)) < 1 and 0 < abs(complex(q_value)) < 1):
        raise UsageError("Gessel-Stanton pair needs 0 < |p|, |q| < 1")
    B, Binv, digits = _build(lambda: _gs_matrices(A, p, q_value, size))
    return TriangularPair(
        size=size,
        B=B,
        Binv=Binv,
        convention="gessel-stanton",
        params={"A": complex(A), "p": complex(p), "q": complex(q_value)},
        precision=digits,
    )


def _relative_gap(left, right):
    scale = max(abs(left), abs(right))
    return abs(left - right) / scale if scale != 0 else mp.mpf(0)


def rescaling_bridge(gs: TriangularPair, tp: TriangularPair, tolerance: float = BRIDGE_TOLERANCE) -> BridgeReport:
    """GS_B = diag((-1)^n) B diag((-1)^k q^-k^2), GS_Binv = diag((-1)^n q^n^2) Binv diag((-1)^k)."""
    if gs.convention != "gessel-stanton" or tp.convention != "fg-inversion":
        raise UsageError("rescaling bridge needs a Gessel-Stanton pair and an (f,g)-inversion pair")
    size = min(gs.size, tp.size)
    q = mp.mpmathify(gs.params["q"])
    worst, where = mp.mpf(0), (0, 0)
    with mp.workdps(max(gs.precision, tp.precision)):
        for n in range(size):
            for k in range(n + 1):
                sign = (-1) ** (n - k)
                gaps = (
                    _relative_gap(gs.B[n][k], sign * q ** (-k * k) * tp.B[n][k]),
                    _relative_gap(gs.Binv[n][k], sign * q ** (n * n) * tp.Binv[n][k]),
                )
                if max(gaps) > worst:
                    worst, where = max(gaps), (n, k)
    report = BridgeReport(
        name="diagonal rescaling",
        max_deviation=float(worst),
        worst_index=where,
        tolerance=tolerance,
        passed=bool(worst <= tolerance),
    )
    logger.info(report.format_message())
    return report


def gessel_stanton_bridge(
    F: Callable[[Any], Any],
    A: Number,
    p: Number,
    q_value: Number,
    size: int,
    tolerance: float = BRIDGE_TOLERANCE,
) -> BridgeReport:
    """Check f = B a and a = Binv f with f_n = (-1)^n G(n) and
    a_n = (-1)^n q^C(n+1,2) (Apq^n;p)_{n-1} / (q;q)_n F(q^n)."""
    gs = gessel_stanton_pair(A, p, q_value, size)
    table = difference_table(F, gessel_stanton_system(A, p, q_value), size - 1)
    worst, where = mp.mpf(0), (0, 0)
    with mp.workdps(max(gs.precision, table.precision)):
        A_mp, p_mp, q = (mp.mpmathify(v) for v in (A, p, q_value))
        f_vec = [(-1) ** n * table.coefficient(n) for n in range(size)]
        a_vec = [
            (-1) ** n
            * q ** (n * (n + 1) // 2)
            * qpoch(A_mp * p_mp * q**n, p_mp, n - 1)
            / qpoch(q, q, n)
            * call(F, q**n)
            for n in range(size)
        ]
        for n in range(size):
            for direction, (target, matrix, source) in enumerate(((f_vec, gs.B, a_vec), (a_vec, gs.Binv, f_vec))):
                terms = [matrix[n][k] * source[k] for k in range(n + 1)]
                magnitude = mp.fsum(abs(t) for t in terms)
                gap = abs(mp.fsum(terms) - target[n])
                relative = gap / magnitude if magnitude != 0 else gap
                if relative > worst:
                    worst, where = relative, (n, direction)
    report = BridgeReport(
        name="Gessel-Stanton coefficient bridge",
        max_deviation=float(worst),
        worst_index=where,
        tolerance=tolerance,
        passed=bool(worst <= tolerance),
    )
    logger.info(report.format_message())
    return report
