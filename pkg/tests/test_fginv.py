import pytest

from fgcalc.errors import UsageError
from fgcalc.fginv import (
    build_pair,
    gessel_stanton_bridge,
    gessel_stanton_pair,
    gessel_stanton_system,
    invert_sum_system,
    recover_sum_system,
    rescaling_bridge,
    sum_system_round_trip,
    verify_pair,
)
from fgcalc.fgkernel import broken_pair, builtin_pairs
from fgcalc.functions import inv1mcx
from fgcalc.nodes import node_system

NODES = "geometric:b=1,r=0.5"
PARAMS = "geometric:A=0.3,p=0.4"


@pytest.mark.parametrize("pair", builtin_pairs({"a": 0.3, "b": 0.1, "q": 0.4}), ids=lambda p: p.name)
def test_kernel_pairs_invert(pair):
    tp = build_pair(node_system(pair, NODES, PARAMS), 14)
    report = verify_pair(tp)
    assert report.passed
    assert report.max_deviation <= 1e-9


def test_diagonal_is_one(systems):
    tp = build_pair(systems["onexy-diff"], 6)
    for n in range(6):
        assert tp.B[n][n] == 1
        assert tp.Binv[n][n] == 1
        for k in range(n + 1, 6):
            assert tp.B[n][k] == 0


def test_broken_pair_does_not_invert():
    report = verify_pair(build_pair(node_system(broken_pair(), NODES, PARAMS), 14))
    assert not report.passed
    assert report.max_deviation >= 1e-3


def test_gessel_stanton_pair():
    gs = gessel_stanton_pair(0.3, 0.4, 0.5, 12)
    assert gs.convention == "gessel-stanton"
    assert verify_pair(gs).max_deviation <= 1e-9


def test_rescaling_bridge():
    gs = gessel_stanton_pair(0.3, 0.4, 0.5, 12)
    tp = build_pair(gessel_stanton_system(0.3, 0.4, 0.5), 12)
    report = rescaling_bridge(gs, tp)
    assert report.passed
    assert report.max_deviation <= 1e-10


def test_rescaling_bridge_needs_both_conventions():
    gs = gessel_stanton_pair(0.3, 0.4, 0.5, 4)
    with pytest.raises(UsageError):
        rescaling_bridge(gs, gs)


def test_coefficient_bridge():
    report = gessel_stanton_bridge(inv1mcx(0.3).F, 0.3, 0.4, 0.5, 10)
    assert report.passed


def test_unit_sequence_is_constant(systems):
    system = systems["onexy-diff"]
    X = invert_sum_system(system, [1, 0, 0, 0, 0], 4)
    expected = complex(system.pair.f(system.param(0), system.node(0)))
    assert all(abs(value - expected) < 1e-14 for value in X)
    Y = recover_sum_system(system, X, 4)
    assert abs(Y[0] - 1) < 1e-12
    assert all(abs(value) < 1e-12 for value in Y[1:])


@pytest.mark.parametrize("name", ["one-diff", "onexy-diff", "bibasic"])
def test_round_trip(systems, name):
    Y = [0.5 - 0.1 * k + 0.05j * k for k in range(13)]
    report = sum_system_round_trip(systems[name], Y, 12)
    assert report.passed


def test_recover_gives_differences(systems):
    system = systems["onexy-diff"]
    F = inv1mcx(0.3).F
    X = [complex(F(system.node(k))) for k in range(6)]
    Y = recover_sum_system(system, X, 5)
    back = invert_sum_system(system, Y, 5)
    assert max(abs(a - b) for a, b in zip(back, X)) < 1e-10


def test_argument_errors(systems):
    with pytest.raises(UsageError):
        build_pair(systems["onexy-diff"], 0)
    with pytest.raises(UsageError):
        invert_sum_system(systems["onexy-diff"], [1, 2], 4)
    with pytest.raises(UsageError):
        gessel_stanton_pair(0.3, 1.5, 0.5, 4)
