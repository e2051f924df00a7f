"""
Named, mpmath-generic target functions with their power-series coefficients.
"""
from __future__ import annotations

from typing import Any, Callable, Dict, Optional, Tuple

from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field

from fgcalc.errors import DomainError, UsageError
from fgcalc.grammar import parse_assignments, split_spec
from fgcalc.qcore import Number, QBase, phi, pochs, qpoch_inf

# ========= Function Registry =========
FUNCTION_NAMES: Tuple[str, ...] = (
    "inv1mcx",
    "power",
    "sinpi",
    "exp",
    "exp-truncated",
    "rogers-fine-F",
    "ramanujan-F",
    "carlitz-lebesgue-F",
    "corpus",
)
FUNCTION_DEFAULTS: Dict[str, Dict[str, complex]] = {
    "inv1mcx": {"c": 0.3},
    "power": {"r": 2},
    "exp-truncated": {"n": 10},
    "rogers-fine-F": {"a": 0.4, "z": 0.5, "q": 0.5},
    "ramanujan-F": {"a": 0.6, "x": 0.5, "q": 0.5},
    "carlitz-lebesgue-F": {"b": 0.2, "x": 0.3, "q": 0.5},
}
UNKNOWN_FUNCTION_MSG: str = "Unknown function '{name}'. Valid functions: {valid}."


class NamedFunction(BaseModel):
    """A target function F plus, when known, its Taylor coefficients a_r at 0."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str = Field(..., description="Registry name")
    params: Dict[str, complex] = Field(default_factory=dict, description="Bound parameters")
    F: Callable[[Any], Any] = Field(..., description="mpmath-generic evaluator")
    coefficients: Optional[Callable[[int], Any]] = Field(None, description="a_r with F(x) = sum a_r x^r")
    ratio_limit: Optional[complex] = Field(None, description="lim a_{r+1}/a_r when it exists")

    def __call__(self, x):
        return self.F(x)

    def label(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}:" + ",".join(f"{key}={value}" for key, value in self.params.items())


def _integer(value: complex, name: str) -> int:
    if value.imag != 0 or value.real != int(value.real) or value.real < 0:
        raise UsageError(f"'{name}' must be a nonnegative integer, got {value}")
    return int(value.real)


def inv1mcx(c: Number) -> NamedFunction:
    c_mp = mp.mpmathify(c)
    return NamedFunction(
        name="inv1mcx",
        params={"c": complex(c)},
        F=lambda x: 1 / (1 - c_mp * x),
        coefficients=lambda r: c_mp**r if r >= 0 else mp.mpf(0),
        ratio_limit=complex(c),
    )


def power(r: Number) -> NamedFunction:
    """x^r; integer exponents also expose their one-term coefficient sequence."""
    r = complex(r)
    if r.imag == 0 and r.real == int(r.real) and r.real >= 0:
        degree = int(r.real)
        return NamedFunction(
            name="power",
            params={"r": r},
            F=lambda x: mp.mpmathify(x) ** degree,
            coefficients=lambda k: mp.mpf(1) if k == degree else mp.mpf(0),
        )
    exponent = mp.mpmathify(r)
    return NamedFunction(name="power", params={"r": r}, F=lambda x: mp.power(x, exponent))


def sinpi() -> NamedFunction:
    def coefficient(k: int):
        if k < 0 or k % 2 == 0:
            return mp.mpf(0)
        return (-1) ** ((k - 1) // 2) * mp.pi**k / mp.factorial(k)

    return NamedFunction(name="sinpi", F=lambda x: mp.sinpi(x), coefficients=coefficient, ratio_limit=0)


def exp() -> NamedFunction:
    return NamedFunction(
        name="exp",
        F=lambda x: mp.exp(x),
        coefficients=lambda k: 1 / mp.factorial(k) if k >= 0 else mp.mpf(0),
        ratio_limit=0,
    )


def exp_truncated(n: int) -> NamedFunction:
    """sum_{k<=n} x^k / k!."""

    def F(x):
        x = mp.mpmathify(x)
        return mp.fsum(x**k / mp.factorial(k) for k in range(n + 1))

    return NamedFunction(
        name="exp-truncated",
        params={"n": n},
        F=F,
        coefficients=lambda k: 1 / mp.factorial(k) if 0 <= k <= n else mp.mpf(0),
    )


def rogers_fine_F(a: Number, z: Number, q: Number) -> NamedFunction:
    """sum_n (a;q)_n / (x;q)_n z^n, as a function of x."""
    base = QBase.of(q)

    def F(x):
        return phi([a, base.q], [x], base, z).value

    return NamedFunction(name="rogers-fine-F", params={"a": a, "z": z, "q": q}, F=F)


def ramanujan_F(a: Number, x: Number, q: Number) -> NamedFunction:
    """(q, y/a, ax, q/(ax);q)_inf / (y, q/a, x, y/(ax);q)_inf, the 1psi1 product in y."""
    if a == 0 or x == 0:
        raise DomainError("the 1psi1 product needs a != 0 and x != 0")
    base = QBase.of(q)
    a_mp, x_mp, q_mp = mp.mpmathify(a), mp.mpmathify(x), base.value

    def F(y):
        numerator = pochs([q_mp, y / a_mp, a_mp * x_mp, q_mp / (a_mp * x_mp)], base)
        return numerator / pochs([y, q_mp / a_mp, x_mp, y / (a_mp * x_mp)], base)

    return NamedFunction(name="ramanujan-F", params={"a": a, "x": x, "q": q}, F=F)


def carlitz_lebesgue_F(b: Number, x: Number, q: Number) -> NamedFunction:
    """sum_i (-1)^i q^C(i,2) (bxq^i;q)_inf / (q;q)_i * y^i / (y, xyq^i;q)_inf.

    Summed as (bx;q)_inf / ((y;q)_inf (xy;q)_inf) times 1phi1(xy; bx; q, y).
    """
    base = QBase.of(q)
    bx = mp.mpmathify(b) * mp.mpmathify(x)
    x_mp = mp.mpmathify(x)

    def F(y):
        y = mp.mpmathify(y)
        prefactor = qpoch_inf(bx, base).value / (qpoch_inf(y, base).value * qpoch_inf(x_mp * y, base).value)
        return prefactor * phi([x_mp * y], [bx], base, y).value

    return NamedFunction(name="carlitz-lebesgue-F", params={"b": b, "x": x, "q": q}, F=F)


def _corpus_function(case_id: str) -> NamedFunction:
    from fgcalc.identities.expansions import interpretation_function

    return interpretation_function(case_id)


def make_function(name: str, params: Optional[Dict[str, complex]] = None) -> NamedFunction:
    values = {**FUNCTION_DEFAULTS.get(name, {}), **(params or {})}
    if name == "inv1mcx":
        return inv1mcx(values["c"])
    if name == "power":
        return power(values["r"])
    if name == "sinpi":
        return sinpi()
    if name == "exp":
        return exp()
    if name == "exp-truncated":
        return exp_truncated(_integer(complex(values["n"]), "n"))
    if name == "rogers-fine-F":
        return rogers_fine_F(values["a"], values["z"], values["q"])
    if name == "ramanujan-F":
        return ramanujan_F(values["a"], values["x"], values["q"])
    if name == "carlitz-lebesgue-F":
        return carlitz_lebesgue_F(values["b"], values["x"], values["q"])
    raise UsageError(UNKNOWN_FUNCTION_MSG.format(name=name, valid=", ".join(FUNCTION_NAMES)))


def parse_function(spec: str) -> NamedFunction:
    """Build a function from `name[:key=value,...]`, or `corpus:<case-id>`."""
    name, rest = split_spec(spec)
    if name == "corpus":
        if not rest:
            raise UsageError("corpus functions need a case id, e.g. corpus:q-gauss")
        return _corpus_function(rest)
    return make_function(name, parse_assignments(rest))
