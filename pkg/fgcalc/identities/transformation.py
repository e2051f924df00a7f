"""
Transformation formulas between two series representations.
"""
from typing import Any, Dict, Mapping

from fgcalc.identities.summation import Evaluator, Region, Sides
from fgcalc.qcore import QBase, explicit_series, phi, pochs, qpoch, vwp_phi


def rogers_fine(p: Mapping[str, Any]) -> Sides:
    """sum (a)_n/(b)_n z^n = sum (a, azq/b)_k (1-azq^2k) q^(k^2-k) (bz)^k / ((b)_k (z)_{k+1})."""
    a, b, z, q = p["a"], p["b"], p["z"], p["q"]
    base = QBase.of(q)

    def term(k: int):
        numerator = (1 - a * z * q ** (2 * k)) * q ** (k * (k - 1)) * qpoch(a, q, k) * qpoch(a * z * q / b, q, k)
        return numerator * (b * z) ** k / (qpoch(z, q, k + 1) * qpoch(b, q, k))

    return phi([a, q], [b], base, z), explicit_series(term, base)


def carlitz_lebesgue(p: Mapping[str, Any]) -> Sides:
    """1phi1(x; bx; q, a) = (a, x)_inf / (bx)_inf 2phi1(b, 0; a; q, x)."""
    a, b, x = p["a"], p["b"], p["x"]
    base = QBase.of(p["q"])
    lhs = phi([x], [b * x], base, a)
    rhs = pochs([a, x], base) / pochs([b * x], base) * phi([b, 0], [a], base, x).value
    return lhs, rhs


def watson(p: Mapping[str, Any]) -> Sides:
    """Terminating 8phi7 with f = q^-N against the balanced 4phi3."""
    a, b, c, d, e, q = p["a"], p["b"], p["c"], p["d"], p["e"], p["q"]
    f = q ** (-p["N"])
    base = QBase.of(q)
    lhs = vwp_phi(a, [b, c, d, e, f], base, a**2 * q**2 / (b * c * d * e * f))
    prefactor = pochs([a * q, a * q / (e * f), a * q / (d * f), a * q / (d * e)], base)
    prefactor /= pochs([a * q / d, a * q / e, a * q / f, a * q / (d * e * f)], base)
    balanced = phi([a * q / (b * c), d, e, f], [d * e * f / a, a * q / b, a * q / c], base, q)
    return lhs, prefactor * balanced.value


def heine(p: Mapping[str, Any]) -> Sides:
    """2phi1(a, b; c; q, z) = (b, az)_inf / (c, z)_inf 2phi1(c/b, z; az; q, b)."""
    a, b, c, z = p["a"], p["b"], p["c"], p["z"]
    base = QBase.of(p["q"])
    rhs = pochs([b, a * z], base) / pochs([c, z], base) * phi([c / b, z], [a * z], base, b).value
    return phi([a, b], [c], base, z), rhs


def jackson(p: Mapping[str, Any]) -> Sides:
    """2phi1(a, b; c; q, z) = (az)_inf / (z)_inf 2phi2(a, c/b; c, az; q, bz)."""
    a, b, c, z = p["a"], p["b"], p["c"], p["z"]
    base = QBase.of(p["q"])
    rhs = pochs([a * z], base) / pochs([z], base) * phi([a, c / b], [c, a * z], base, b * z).value
    return phi([a, b], [c], base, z), rhs


EVALUATORS: Dict[str, Evaluator] = {
    "rogers-fine": rogers_fine,
    "carlitz-lebesgue": carlitz_lebesgue,
    "watson": watson,
    "heine": heine,
    "jackson": jackson,
}

REGIONS: Dict[str, Region] = {}
