import pytest

from fgcalc import nodes as nodes_module
from fgcalc.errors import CoincidentNodes, DomainError, UsageError
from fgcalc.fgkernel import one_diff_pair
from fgcalc.nodes import (
    AffineSequence,
    ConstantSequence,
    ExplicitSequence,
    GeometricSequence,
    NodeSystem,
    node_system,
    parse_sequence,
)


def test_parse_geometric():
    sequence = parse_sequence("geometric:b=1,r=0.5")
    assert sequence == GeometricSequence(start=1, ratio=0.5)
    assert parse_sequence("geometric:A=0.3,p=0.4") == GeometricSequence(start=0.3, ratio=0.4)
    assert parse_sequence("geometric:q=0.5").start == 1


def test_parse_other_forms():
    assert parse_sequence("affine:u=0,h=1") == AffineSequence(start=0, step=1)
    assert parse_sequence("constant:c=0.3") == ConstantSequence(value=0.3)
    assert parse_sequence("list:1;2+1i;-0.5") == ExplicitSequence(values=[1, 2 + 1j, -0.5])


def test_parse_errors():
    with pytest.raises(UsageError):
        parse_sequence("spiral:r=0.5")
    with pytest.raises(UsageError):
        parse_sequence("geometric:b=1")
    with pytest.raises(UsageError):
        parse_sequence("list:")
    with pytest.raises(UsageError):
        parse_sequence("geometric:b=1,r=abc")


def test_nodes_and_window():
    system = node_system(one_diff_pair(), "geometric:b=1,r=0.5", "affine:u=0,h=1")
    assert [complex(b) for b in system.nodes(3)] == [1, 0.5, 0.25, 0.125]
    nodes, params = system.window(2, 3, shift=1)
    assert [complex(b) for b in nodes] == [0.25, 0.125, 0.0625, 0.03125]
    assert [complex(x) for x in params] == [1, 2, 3]


def test_coincident_nodes():
    system = node_system(one_diff_pair(), "list:1;2;1", "constant:c=0")
    with pytest.raises(CoincidentNodes):
        system.nodes(2)


def test_explicit_sequence_is_finite():
    system = NodeSystem(b=ExplicitSequence(values=[1, 2]), x=ConstantSequence(value=0), pair=one_diff_pair())
    with pytest.raises(DomainError):
        system.node(2)


def test_windows_only_check_new_nodes(mocker):
    compare = mocker.spy(nodes_module, "_coincide")
    system = node_system(one_diff_pair(), "geometric:b=1,r=0.5", "constant:c=0")
    system.window(0, 4)
    assert compare.call_count == 10
    for k in range(1, 5):
        system.window(k, 4 - k, k)
    assert compare.call_count == 10
    system.window(3, 3)
    assert compare.call_count == 21


def test_coincidence_reported_in_later_window():
    system = node_system(one_diff_pair(), "list:1;2;3;2", "constant:c=0")
    system.window(0, 2)
    with pytest.raises(CoincidentNodes) as e:
        system.window(2, 1)
    assert "b_1 and b_3" in str(e.value)
