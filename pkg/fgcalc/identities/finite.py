"""
Terminating identities: finite sums, the finite forms of the (f,g)-expansions and
the bibasic family around Gasper's indefinite sum.
"""
from typing import Any, Callable, Dict, Mapping, Optional

from mpmath import mp

from fgcalc.fgdiff import qdiff_n_mp
from fgcalc.fginv import values_from_differences
from fgcalc.fgkernel import one_diff_pair
from fgcalc.functions import carlitz_lebesgue_F
from fgcalc.identities.summation import Evaluator, Region, Sides
from fgcalc.nodes import ConstantSequence, GeometricSequence, NodeSystem
from fgcalc.qcore import QBase, phi, pochs, qbinom, qpoch, vwp_phi


def _c2(k: int) -> int:
    return k * (k - 1) // 2


def _q_difference(n: int, q, value: Callable[[int], Any]):
    """sum_k (-1)^k q^(C(k+1,2)-nk) [n,k] value(k): the q-difference kernel at b_k = q^k."""
    return mp.fsum((-1) ** k * q ** (_c2(k + 1) - n * k) * qbinom(n, k, q) * value(k) for k in range(n + 1))


# ========= q-binomial family =========
def q_binomial_finite(p: Mapping[str, Any]) -> Sides:
    """sum_k [n,k] (-1)^k q^C(k,2) x^k = (x;q)_n."""
    n, x, q = p["n"], p["x"], p["q"]
    lhs = mp.fsum(qbinom(n, k, q) * (-1) ** k * q ** _c2(k) * x**k for k in range(n + 1))
    return lhs, qpoch(x, q, n)


def q_binomial_newton(p: Mapping[str, Any]) -> Sides:
    """Values X_n rebuilt from the differences Y_k = (-z)^k / (q)_k on b_k = q^k equal (z)_n."""
    n, z, q = p["n"], p["z"], p["q"]
    system = NodeSystem(
        b=GeometricSequence(start=1.0, ratio=complex(q)),
        x=ConstantSequence(value=0),
        pair=one_diff_pair(),
    )
    Y = [(-z) ** k / qpoch(q, q, k) for k in range(n + 1)]
    X, _ = values_from_differences(system, Y, n)
    return X[n], qpoch(z, q, n)


# ========= q-Gauss family =========
def q_gauss_finite(p: Mapping[str, Any]) -> Sides:
    n, a, c, q = p["n"], p["a"], p["c"], p["q"]
    lhs = _q_difference(n, q, lambda k: qpoch(c / a, q, k) / qpoch(c, q, k))
    return lhs, qpoch(a, q, n) * (c / a) ** n / qpoch(c, q, n)


def q_gauss_finite_limit(p: Mapping[str, Any]) -> Sides:
    n, c, q = p["n"], p["c"], p["q"]
    lhs = _q_difference(n, q, lambda k: 1 / qpoch(c, q, k))
    return lhs, (-c) ** n * q ** _c2(n) / qpoch(c, q, n)


def q_pfaff_saalschutz(p: Mapping[str, Any]) -> Sides:
    n, a, b, c, q = p["n"], p["a"], p["b"], p["c"], p["q"]
    lhs = phi([q ** (-n), a * q**n, a * q / (b * c)], [a * q / b, a * q / c], QBase.of(q), q)
    rhs = (a * q / (b * c)) ** n * pochs([b, c], q, n) / pochs([a * q / b, a * q / c], q, n)
    return lhs, rhs


# ========= Very-well-poised =========
def rogers_6phi5_terminating(p: Mapping[str, Any]) -> Sides:
    n, a, b, c, q = p["n"], p["a"], p["b"], p["c"], p["q"]
    lhs = vwp_phi(a, [b, c, q ** (-n)], QBase.of(q), a * q ** (n + 1) / (b * c))
    return lhs, pochs([a * q, a * q / (b * c)], q, n) / pochs([a * q / b, a * q / c], q, n)


def watson_terminating(p: Mapping[str, Any]) -> Sides:
    n, a, b, c, d, e, q = p["n"], p["a"], p["b"], p["c"], p["d"], p["e"], p["q"]
    base = QBase.of(q)
    lhs = vwp_phi(a, [b, c, d, e, q ** (-n)], base, a**2 * q ** (n + 2) / (b * c * d * e))
    prefactor = pochs([a * q, a * q / (d * e)], q, n) / pochs([a * q / d, a * q / e], q, n)
    balanced = phi([a * q / (b * c), d, e, q ** (-n)], [a * q / b, a * q / c, d * e * q ** (-n) / a], base, q)
    return lhs, prefactor * balanced.value


# ========= Finite forms of the expansions =========
def heine_finite(p: Mapping[str, Any]) -> Sides:
    n, m, c, q = p["n"], p["m"], p["c"], p["q"]
    return _q_difference(n, q, lambda k: qpoch(c * q**m, q, k)), c**n * q ** (m * n)


def jackson_finite(p: Mapping[str, Any]) -> Sides:
    n, m, b, q = p["n"], p["m"], p["b"], p["q"]
    lhs = mp.fsum(
        (-1) ** (n - k) * qbinom(n, k, q) * q ** _c2(k) / qpoch(b * q ** (n - k), q, m + 1) for k in range(n + 1)
    )
    rhs = qbinom(m + n, m, q) * b**n * q ** _c2(n) * qpoch(q, q, n) / qpoch(b, q, m + n + 1)
    return lhs, rhs


def carlitz_lebesgue_finite(p: Mapping[str, Any]) -> Sides:
    n, b, x, q = p["n"], p["b"], p["x"], p["q"]
    F = carlitz_lebesgue_F(complex(b), complex(x), complex(q))
    lhs = _q_difference(n, q, lambda k: qpoch(b * q**k, q, n - 1) * F(b * q**k))
    return lhs, (b * x) ** n / (1 - b * q ** (2 * n - 1))


def geometric_finite(p: Mapping[str, Any]) -> Sides:
    n, c, q = p["n"], p["c"], p["q"]
    lhs = _q_difference(n, q, lambda k: 1 / (1 - c * q**k)) / qpoch(q, q, n)
    return lhs, c**n / qpoch(c, q, n + 1)


def geometric_qdiff(p: Mapping[str, Any]) -> Sides:
    n, c, q = p["n"], p["c"], p["q"]
    lhs = qdiff_n_mp(lambda x: 1 / (1 - c * x), q, 1, n)
    return lhs, c**n * qpoch(q, q, n) / qpoch(c, q, n + 1)


# ========= Bibasic family =========
def gasper_bibasic(p: Mapping[str, Any]) -> Sides:
    """Gasper's indefinite bibasic sum, k = 0..m."""
    m, a, b, P, q, x = p["m"], p["a"], p["b"], p["p"], p["q"], p["x"]

    def term(k: int):
        weight = (1 - a * P**k * q**k) * (1 - b * P**k * q ** (-k)) / ((1 - a) * (1 - b))
        numerator = pochs([a, b], P, k) * pochs([x, a / (b * x)], q, k)
        return weight * numerator / (pochs([q, a * q / b], q, k) * pochs([a * P / x, b * P * x], P, k)) * q**k

    lhs = mp.fsum(term(k) for k in range(m + 1))
    rhs = pochs([a * P, b * P], P, m) * pochs([x * q, a * q / (b * x)], q, m)
    rhs /= pochs([q, a * q / b], q, m) * pochs([a * P / x, b * P * x], P, m)
    return lhs, rhs


def gasper_difference(p: Mapping[str, Any]) -> Sides:
    """Order-n bibasic differences of Gasper's sum for n > m, summed over k = m+1..n."""
    n, m, a, b, P, q = p["n"], p["m"], p["a"], p["b"], p["p"], p["q"]
    length = n - m - 1

    def term(k: int):
        sign_power = (-1) ** (k - m - 1) * q ** (_c2(k) + _c2(m + 1) - m * k)
        binomials = qbinom(n, k, q) * qbinom(k - 1, m, q)
        poised = (1 - a * q ** (2 * k) / b) / (1 - a * q**k / b)
        ratio = pochs([a * P ** (m + 1) * q**k, b * P ** (m + 1) * q ** (-k)], P, length)
        return sign_power * binomials * poised * ratio / qpoch(a * q ** (m + k + 1) / b, q, n - m)

    lhs = mp.fsum(term(k) for k in range(m + 1, n + 1))
    rhs = pochs([a * P ** (m + 1), b * P ** (m + 1)], P, length) / qpoch(a * q ** (m + 1) / b, q, n - m)
    return lhs, rhs


def gasper_new(p: Mapping[str, Any]) -> Sides:
    N, m, a, b, P, q = p["N"], p["m"], p["a"], p["b"], p["p"], p["q"]
    s = m + 1

    def term(K: int):
        head = (-1) ** K * q ** _c2(K + 1) * qbinom(N, K, q) * (1 - q**s) / (1 - q ** (s + K))
        poised = (1 - a * q ** (2 * K + 2 * s) / b) / (1 - a * q ** (K + s) / b)
        ratio = pochs([a * (P * q) ** s * q**K, b * (P / q) ** s * q ** (-K)], P, N)
        return head * poised * ratio / qpoch(a * q ** (2 * s + K) / b, q, N + 1)

    lhs = qbinom(N + s, s, q) * mp.fsum(term(K) for K in range(N + 1))
    rhs = pochs([a * P**s, b * P**s], P, N) / qpoch(a * q**s / b, q, N + 1)
    return lhs, rhs


def gasper_new_limit(p: Mapping[str, Any]) -> Sides:
    """The b -> 0 limit of gasper_new."""
    N, m, a, P, q = p["N"], p["m"], p["a"], p["p"], p["q"]
    s = m + 1
    lhs = _q_difference(N, q, lambda K: (1 - q**s) / (1 - q ** (s + K)) * qpoch(a * (P * q) ** s * q**K, P, N))
    lhs *= qbinom(N + s, s, q) * q ** (-N * s)
    return lhs, qpoch(a * P**s, P, N)


def gasper_new_qdiff(p: Mapping[str, Any]) -> Sides:
    N, m, a, P, q = p["N"], p["m"], p["a"], p["p"], p["q"]
    s = m + 1

    def F(x):
        return qpoch(a * (P * q) ** s * x, P, N) / (1 - x * q**s)

    rhs = q ** (N * s) * qpoch(a * P**s, P, N) / ((1 - q**s) * qbinom(N + s, s, q))
    return qdiff_n_mp(F, q, 1, N), rhs


# ========= Regions =========
def _above_m(p: Mapping[str, Any]) -> Optional[str]:
    if p["n"] <= p["m"]:
        return "needs n > m"
    return None


EVALUATORS: Dict[str, Evaluator] = {
    "q-binomial-finite": q_binomial_finite,
    "q-binomial-newton": q_binomial_newton,
    "q-gauss-finite": q_gauss_finite,
    "q-gauss-finite-limit": q_gauss_finite_limit,
    "q-pfaff-saalschutz": q_pfaff_saalschutz,
    "rogers-6phi5-terminating": rogers_6phi5_terminating,
    "watson-terminating": watson_terminating,
    "heine-finite": heine_finite,
    "jackson-finite": jackson_finite,
    "carlitz-lebesgue-finite": carlitz_lebesgue_finite,
    "geometric-finite": geometric_finite,
    "geometric-qdiff": geometric_qdiff,
    "gasper-bibasic": gasper_bibasic,
    "gasper-difference": gasper_difference,
    "gasper-new": gasper_new,
    "gasper-new-limit": gasper_new_limit,
    "gasper-new-qdiff": gasper_new_qdiff,
}

REGIONS: Dict[str, Region] = {"gasper-difference": _above_m}
