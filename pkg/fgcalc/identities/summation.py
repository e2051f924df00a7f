"""
Nonterminating summation formulas: both sides as functions of a parameter dict.
"""
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from mpmath import mp

from fgcalc.identities.expansions import geometric
from fgcalc.qcore import QBase, explicit_series, phi, pochs, psi_bilateral_adaptive, vwp_phi

Sides = Tuple[Any, Any]
Evaluator = Callable[[Mapping[str, Any]], Sides]
Region = Callable[[Mapping[str, Any]], Optional[str]]


def q_binomial(p: Mapping[str, Any]) -> Sides:
    """sum (a)_n/(q)_n z^n = (az)_inf/(z)_inf."""
    base = QBase.of(p["q"])
    return phi([p["a"]], [], base, p["z"]), pochs([p["a"] * p["z"]], base) / pochs([p["z"]], base)


def q_gauss(p: Mapping[str, Any]) -> Sides:
    a, b, c = p["a"], p["b"], p["c"]
    base = QBase.of(p["q"])
    lhs = phi([a, b], [c], base, c / (a * b))
    rhs = pochs([c / a, c / b], base) / pochs([c, c / (a * b)], base)
    return lhs, rhs


def ramanujan_1psi1(p: Mapping[str, Any]) -> Sides:
    a, b, x, q = p["a"], p["b"], p["x"], p["q"]
    base = QBase.of(q)
    lhs = psi_bilateral_adaptive([a], [b], base, x)
    rhs = pochs([q, b / a, a * x, q / (a * x)], base) / pochs([b, q / a, x, b / (a * x)], base)
    return lhs, rhs


def rogers_6phi5(p: Mapping[str, Any]) -> Sides:
    a, b, c, d, q = p["a"], p["b"], p["c"], p["d"], p["q"]
    base = QBase.of(q)
    lhs = vwp_phi(a, [b, c, d], base, a * q / (b * c * d))
    numerator = pochs([a * q, a * q / (c * d), a * q / (b * d), a * q / (b * c)], base)
    rhs = numerator / pochs([a * q / b, a * q / c, a * q / d, a * q / (b * c * d)], base)
    return lhs, rhs


def geometric_expansion(p: Mapping[str, Any]) -> Sides:
    """1/(1-cx) against its series in prod_{i<k}(q^i - x) / (Apx;p)_k."""
    c, q, P, A, x = p["c"], p["q"], p["p"], p["A"], p["x"]
    _, _, G = geometric(p)
    basis = [mp.mpf(1)]

    def term(k: int):
        while len(basis) <= k:
            i = len(basis) - 1
            basis.append(basis[-1] * (q**i - x) / (1 - A * x * P ** (i + 1)))
        return G(k) * (1 - A * (P * q) ** k) * basis[k]

    return 1 / (1 - c * x), explicit_series(term, QBase.of(q))


def geometric_refined(p: Mapping[str, Any]) -> Sides:
    """(1-c)/(1-cx) = sum (1/x)_k (cx)^k / (cq)_k."""
    c, q, x = p["c"], p["q"], p["x"]
    return (1 - c) / (1 - c * x), phi([1 / x, q], [c * q], QBase.of(q), c * x)


# ========= Convergence regions =========
def _q_gauss_region(p: Mapping[str, Any]) -> Optional[str]:
    if abs(p["c"] / (p["a"] * p["b"])) >= 1:
        return "needs |c/(ab)| < 1"
    return None


def _annulus_region(p: Mapping[str, Any]) -> Optional[str]:
    if not abs(p["b"] / p["a"]) < abs(p["x"]) < 1:
        return "needs |b/a| < |x| < 1"
    return None


def _rogers_region(p: Mapping[str, Any]) -> Optional[str]:
    if abs(p["a"] * p["q"] / (p["b"] * p["c"] * p["d"])) >= 1:
        return "needs |aq/(bcd)| < 1"
    return None


def _refined_region(p: Mapping[str, Any]) -> Optional[str]:
    if abs(p["c"] * p["x"]) >= 1:
        return "needs |cx| < 1"
    return None


EVALUATORS: Dict[str, Evaluator] = {
    "q-binomial": q_binomial,
    "q-gauss": q_gauss,
    "ramanujan-1psi1": ramanujan_1psi1,
    "rogers-6phi5": rogers_6phi5,
    "geometric-expansion": geometric_expansion,
    "geometric-refined": geometric_refined,
}

REGIONS: Dict[str, Region] = {
    "q-gauss": _q_gauss_region,
    "ramanujan-1psi1": _annulus_region,
    "rogers-6phi5": _rogers_region,
    "geometric-refined": _refined_region,
}
