"""
(f,g)-expansion readings of corpus identities: for each case, the target F, the
node system it is expanded on and the closed form of its coefficients G(k).
"""
from __future__ import annotations

from typing import Any, Callable, Dict, Mapping, Tuple

from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field

from fgcalc.errors import UsageError
from fgcalc.fgkernel import bibasic_pair, one_diff_pair, onexy_diff_pair
from fgcalc.fginv import gessel_stanton_system
from fgcalc.functions import NamedFunction, carlitz_lebesgue_F
from fgcalc.nodes import ConstantSequence, GeometricSequence, NodeSystem
from fgcalc.qcore import QBase, phi, pochs, qpoch

Function = Callable[[Any], Any]
Coefficients = Callable[[int], Any]
Builder = Callable[[Mapping[str, Any]], Tuple[Function, NodeSystem, Coefficients]]

NO_INTERPRETATION_MSG: str = "Case '{case}' has no (f,g) interpretation. Cases with one: {valid}."


class Interpretation(BaseModel):
    """F, its node system and the expected G(k), bound to one parameter set."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    case_id: str = Field(..., description="Corpus case the reading belongs to")
    F: Callable[[Any], Any] = Field(..., description="Target function")
    sys: NodeSystem = Field(..., description="Nodes, parameters and pair")
    expected: Callable[[int], Any] = Field(..., description="Closed-form G(k)")


def _mp(params: Mapping[str, Any], *names: str):
    return [mp.mpmathify(params[name]) for name in names]


def _geometric(start, ratio) -> GeometricSequence:
    return GeometricSequence(start=complex(start), ratio=complex(ratio))


def _one_diff(start, q) -> NodeSystem:
    return NodeSystem(b=_geometric(start, q), x=ConstantSequence(value=0), pair=one_diff_pair())


# ========= Builders =========
def q_binomial(params: Mapping[str, Any]):
    """F(x) = (z;q)_inf / (zx;q)_inf on b_n = q^n."""
    z, q = _mp(params, "z", "q")
    base = QBase.of(q)

    def F(x):
        return pochs([z], base) / pochs([z * x], base)

    return F, _one_diff(1, q), lambda k: (-z) ** k / qpoch(q, q, k)


def q_gauss(params: Mapping[str, Any]):
    """q-Gauss with b = 1/x, on b_n = q^n."""
    a, c, q = _mp(params, "a", "c", "q")
    base = QBase.of(q)

    def F(x):
        return pochs([c / a, c * x], base) / pochs([c, c * x / a], base)

    def G(k: int):
        return (-1) ** k * qpoch(a, q, k) * (c / a) ** k / (qpoch(q, q, k) * qpoch(c, q, k))

    return F, _one_diff(1, q), G


def heine(params: Mapping[str, Any]):
    """(c, z)_inf / (x, az)_inf 2phi1(a, x; c; q, z) on b_n = cq^n."""
    a, c, z, q = _mp(params, "a", "c", "z", "q")
    base = QBase.of(q)

    def F(x):
        return pochs([c, z], base) / pochs([x, a * z], base) * phi([a, x], [c], base, z).value

    def G(k: int):
        return (-1) ** k * qpoch(z, q, k) / (qpoch(q, q, k) * qpoch(a * z, q, k))

    return F, _one_diff(c, q), G


def jackson(params: Mapping[str, Any]):
    """(z)_inf / (az)_inf 2phi1(a, x; c; q, z) on b_n = cq^n."""
    a, c, z, q = _mp(params, "a", "c", "z", "q")
    base = QBase.of(q)

    def F(x):
        return pochs([z], base) / pochs([a * z], base) * phi([a, x], [c], base, z).value

    def G(k: int):
        return qpoch(a, q, k) * q ** (k * (k - 1) // 2) * z**k / (qpoch(q, q, k) * qpoch(c, q, k) * qpoch(a * z, q, k))

    return F, _one_diff(c, q), G


def rogers_fine(params: Mapping[str, Any]):
    """sum (a)_n/(x)_n z^n on b_n = azq^(n+1), x_n = q^(n-1)."""
    a, z, q = _mp(params, "a", "z", "q")
    base = QBase.of(q)
    system = NodeSystem(b=_geometric(a * z * q, q), x=_geometric(1 / q, q), pair=onexy_diff_pair())

    def F(x):
        return phi([a, q], [x], base, z).value

    def G(k: int):
        return (-1) ** k * q ** (k * (k - 1)) * qpoch(a, q, k) * z**k / qpoch(z, q, k + 1)

    return F, system, G


def rogers_6phi5(params: Mapping[str, Any]):
    """The 6phi5 product with d = 1/x on b_n = q^n, x_n = aq^n."""
    a, b, c, q = _mp(params, "a", "b", "c", "q")
    base = QBase.of(q)
    system = NodeSystem(b=_geometric(1, q), x=_geometric(a, q), pair=onexy_diff_pair())
    def F(x):
        constant = pochs([a * q, a * q / (b * c)], base) / pochs([a * q / b, a * q / c], base)
        return constant * pochs([a * q * x / c, a * q * x / b], base) / pochs([a * q * x, a * q * x / (b * c)], base)

    def G(k: int):
        numerator = (-1) ** k * pochs([a, b, c], q, k) * (a * q / (b * c)) ** k
        return numerator / ((1 - a) * pochs([q, a * q / b, a * q / c], q, k))

    return F, system, G


def carlitz_lebesgue(params: Mapping[str, Any]):
    """Carlitz's Lebesgue function in y on b_n = bq^n, x_n = q^(n-1)."""
    b, x, q = _mp(params, "b", "x", "q")
    system = NodeSystem(b=_geometric(b, q), x=_geometric(1 / q, q), pair=onexy_diff_pair())
    F = carlitz_lebesgue_F(complex(b), complex(x), complex(q)).F

    def G(k: int):
        return (-x) ** k / (qpoch(q, q, k) * (1 - b * q ** (2 * k - 1)))

    return F, system, G


def geometric(params: Mapping[str, Any]):
    """1/(1-cx) on b_n = q^n, x_n = Ap^n."""
    c, q, p, A = _mp(params, "c", "q", "p", "A")
    system = gessel_stanton_system(complex(A), complex(p), complex(q))

    def F(x):
        return 1 / (1 - c * x)

    def G(k: int):
        if k == 0:
            return 1 / ((1 - c) * (1 - A))
        return (-c) ** k * qpoch(A * p / c, p, k - 1) / qpoch(c, q, k + 1)

    return F, system, G


def gasper_bibasic(params: Mapping[str, Any]):
    """Gasper's finite product on b_n = q^n, x_n = p^n with the bibasic pair; G(k) = 0 past m."""
    a, b, p, q = _mp(params, "a", "b", "p", "q")
    m = int(params["m"])
    system = NodeSystem(b=_geometric(1, q), x=_geometric(1, p), pair=bibasic_pair(complex(a), complex(b)))
    def F(x):
        constant = pochs([a * p, b * p], p, m) / pochs([q, a * q / b], q, m)
        return constant * pochs([q / x, a * q * x / b], q, m) / pochs([a * p * x, b * p / x], p, m)

    def G(k: int):
        if k > m:
            return mp.mpf(0)
        numerator = pochs([a, b], p, k) * (a / b) ** k * q ** (k * (k + 1) // 2)
        return numerator / ((1 - a) * (1 - b) * pochs([q, a * q / b], q, k))

    return F, system, G


INTERPRETATIONS: Dict[str, Builder] = {
    "q-binomial": q_binomial,
    "q-gauss": q_gauss,
    "heine": heine,
    "jackson": jackson,
    "rogers-fine": rogers_fine,
    "rogers-6phi5": rogers_6phi5,
    "carlitz-lebesgue": carlitz_lebesgue,
    "geometric-expansion": geometric,
    "gasper-bibasic": gasper_bibasic,
}


def interpret(case_id: str, params: Mapping[str, Any]) -> Interpretation:
    if case_id not in INTERPRETATIONS:
        raise UsageError(NO_INTERPRETATION_MSG.format(case=case_id, valid=", ".join(INTERPRETATIONS)))
    F, system, G = INTERPRETATIONS[case_id](params)
    return Interpretation(case_id=case_id, F=F, sys=system, expected=G)


def interpretation_function(case_id: str) -> NamedFunction:
    """The F of a corpus case's (f,g) reading, bound to the case defaults."""
    from fgcalc.identities.corpus import get_case

    case = get_case(case_id)
    reading = interpret(case_id, case.defaults)
    return NamedFunction(name=f"corpus:{case_id}", F=reading.F)
