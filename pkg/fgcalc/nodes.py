"""
Node and parameter sequences {b_i}, {x_i} and the NodeSystem tying them to a pair.
"""
from __future__ import annotations

import threading
from typing import Annotated, Any, Dict, List, Literal, Tuple, Union

from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr

from fgcalc.errors import COINCIDENT_NODES_MSG, CoincidentNodes, DomainError, UsageError
from fgcalc.fgkernel import FGPair
from fgcalc.grammar import parse_assignments, parse_complex, split_spec

# ========= Grammar Constants =========
START_KEYS: Tuple[str, ...] = ("b", "u", "A", "a")
RATIO_KEYS: Tuple[str, ...] = ("r", "q", "p")
STEP_KEYS: Tuple[str, ...] = ("h",)
SEQUENCE_KINDS: Tuple[str, ...] = ("geometric", "affine", "constant", "list")
DISTINCT_TOLERANCE: float = 1e-12
UNKNOWN_SEQUENCE_MSG: str = "Unknown sequence '{kind}'. Valid forms: {valid}."


class GeometricSequence(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["geometric"] = "geometric"
    start: complex = Field(1.0, description="Value at index 0")
    ratio: complex = Field(..., description="Common ratio")

    def at(self, i: int):
        return mp.mpmathify(self.start) * mp.mpmathify(self.ratio) ** i


class AffineSequence(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["affine"] = "affine"
    start: complex = Field(0.0, description="Value at index 0")
    step: complex = Field(1.0, description="Increment per index")

    def at(self, i: int):
        return mp.mpmathify(self.start) + i * mp.mpmathify(self.step)


class ConstantSequence(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["constant"] = "constant"
    value: complex = Field(..., description="Value at every index")

    def at(self, i: int):
        return mp.mpmathify(self.value)


class ExplicitSequence(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["list"] = "list"
    values: List[complex] = Field(..., min_length=1, description="Finite list of values")

    def at(self, i: int):
        if not 0 <= i < len(self.values):
            raise DomainError(f"explicit sequence has {len(self.values)} entries, index {i} requested")
        return mp.mpmathify(self.values[i])


Sequence = Annotated[
    Union[GeometricSequence, AffineSequence, ConstantSequence, ExplicitSequence],
    Field(discriminator="kind"),
]


def _pick(values: Dict[str, complex], keys: Tuple[str, ...], default=None):
    for key in keys:
        if key in values:
            return values[key]
    return default


def parse_sequence(text: str) -> Union[GeometricSequence, AffineSequence, ConstantSequence, ExplicitSequence]:
    """Parse `geometric:b=1,r=0.5`, `affine:u=0,h=1`, `constant:c=0.3` or `list:1;2;3`."""
    kind, rest = split_spec(text)
    if kind == "list":
        items = [item for item in rest.split(";") if item.strip()]
        if not items:
            raise UsageError("list sequence needs at least one value")
        return ExplicitSequence(values=[parse_complex(item) for item in items])
    values = parse_assignments(rest)
    if kind == "geometric":
        ratio = _pick(values, RATIO_KEYS)
        if ratio is None:
            raise UsageError("geometric sequence needs a ratio (r=...)")
        return GeometricSequence(start=_pick(values, START_KEYS, 1.0), ratio=ratio)
    if kind == "affine":
        return AffineSequence(start=_pick(values, START_KEYS, 0.0), step=_pick(values, STEP_KEYS, 1.0))
    if kind == "constant":
        value = _pick(values, ("c", "v") + START_KEYS)
        if value is None:
            raise UsageError("constant sequence needs a value (c=...)")
        return ConstantSequence(value=value)
    raise UsageError(UNKNOWN_SEQUENCE_MSG.format(kind=kind, valid=", ".join(SEQUENCE_KINDS)))


def _coincide(left, right) -> bool:
    return abs(left - right) <= DISTINCT_TOLERANCE * max(1, abs(left))


class NodeSystem(BaseModel):
    """Nodes b_i, parameters x_i and the pair they feed.

    Node values are memoized per working precision behind a lock, so one system
    can be shared by concurrent readers.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    b: Sequence = Field(..., description="Node generator b_0, b_1, ...")
    x: Sequence = Field(..., description="Parameter generator x_0, x_1, ...")
    pair: FGPair = Field(..., description="Kernel pair")

    _lock: threading.Lock = PrivateAttr(default_factory=threading.Lock)
    _nodes: Dict[Tuple[int, int], Any] = PrivateAttr(default_factory=dict)
    _params: Dict[Tuple[int, int], Any] = PrivateAttr(default_factory=dict)
    _checked: Dict[int, int] = PrivateAttr(default_factory=dict)

    def node(self, i: int):
        key = (mp.prec, i)
        with self._lock:
            if key not in self._nodes:
                self._nodes[key] = self.b.at(i)
            return self._nodes[key]

    def param(self, i: int):
        key = (mp.prec, i)
        with self._lock:
            if key not in self._params:
                self._params[key] = self.x.at(i)
            return self._params[key]

    def nodes(self, n: int) -> List[Any]:
        """b_0..b_n, checked pairwise distinct."""
        self._check_distinct(n)
        return [self.node(i) for i in range(n + 1)]

    def window(self, start: int, order: int, shift: int = 0) -> Tuple[List[Any], List[Any]]:
        """Nodes b_start..b_{start+order} and parameters x_shift..x_{shift+order-1}.

        The first parameter of the window plays the role of x_0; it is only used
        by order-0 differences.
        """
        self._check_distinct(start + order)
        nodes = [self.node(start + i) for i in range(order + 1)]
        params = [self.param(shift + i) for i in range(max(order, 1))]
        return nodes, params

    def prefill(self, n: int) -> None:
        """Materialize and check b_0..b_n and x_0..x_n at the current precision."""
        self.nodes(n)
        for i in range(n + 1):
            self.param(i)

    def _check_distinct(self, last: int) -> None:
        """Extend the distinct prefix to b_0..b_last; nodes already checked at this precision are skipped."""
        prec = mp.prec
        with self._lock:
            done = self._checked.get(prec, 0)
        if last < done:
            return
        values = [self.node(i) for i in range(last + 1)]
        for i in range(done, last + 1):
            for k in range(i):
                if _coincide(values[i], values[k]):
                    raise CoincidentNodes(COINCIDENT_NODES_MSG.format(i=k, k=i, value=complex(values[i])))
        with self._lock:
            self._checked[prec] = max(self._checked.get(prec, 0), last + 1)


def node_system(pair: FGPair, nodes: str, params: str) -> NodeSystem:
    return NodeSystem(b=parse_sequence(nodes), x=parse_sequence(params), pair=pair)
