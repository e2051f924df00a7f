import pytest
from mpmath import mp

from fgcalc.errors import DomainError, UsageError, ZeroDenominator
from fgcalc.fgdiff import (
    backward_difference_limit,
    basis_function,
    divided_difference,
    fg_difference,
    fg_difference_recursive,
    fg_leibniz,
    qdiff_iterated,
    qdiff_leibniz,
    qdiff_n,
    qdiff_shifted,
)
from fgcalc.fgkernel import one_diff_pair, onexy_diff_pair
from fgcalc.functions import exp, inv1mcx, power
from fgcalc.nodes import node_system
from fgcalc.qcore import qpoch

F = inv1mcx(0.3).F


def _close(left, right, magnitude, tolerance=1e-10):
    return abs(left - right) <= tolerance * max(magnitude, 1e-300)


def test_order_zero_divides_by_f():
    system = node_system(onexy_diff_pair(), "geometric:b=0.5,r=0.6", "constant:c=0.4")
    value = fg_difference(F, system, 0).value
    assert abs(value - (1 / (1 - 0.15)) / (1 - 0.2)) < 1e-14


@pytest.mark.parametrize("name", ["one-diff", "diff-diff", "onexy-diff", "bibasic", "theta"])
def test_delta_property(systems, name):
    system = systems[name]
    for m in range(11):
        basis = basis_function(system, m)
        target = 1 / system.pair.f(system.param(m), system.node(m))
        for n in range(11):
            result = fg_difference(basis, system, n)
            expected = complex(target) if n == m else 0
            assert _close(result.value, expected, max(result.magnitude, abs(expected)))


def test_direct_and_recursive_agree(systems):
    system = systems["onexy-diff"]
    for n in range(13):
        direct = fg_difference(F, system, n)
        recursive = fg_difference_recursive(F, system, n)
        assert recursive.method == "recursive"
        assert _close(direct.value, recursive.value, direct.magnitude)


def test_leibniz_product_rule(systems):
    H = exp().F
    for name in ("onexy-diff", "bibasic"):
        system = systems[name]
        for n in range(11):
            product = fg_difference(lambda x: F(x) * H(x), system, n)
            leibniz = fg_leibniz(F, H, system, n)
            assert _close(product.value, leibniz.value, max(product.magnitude, leibniz.magnitude))


def test_polynomials_are_annihilated():
    system = node_system(one_diff_pair(), "geometric:b=1,r=0.7", "constant:c=0")
    for degree in range(9):
        G = power(degree).F
        for n in range(degree + 1, degree + 3):
            result = fg_difference(G, system, n)
            assert abs(result.value) <= 1e-20 * max(1.0, result.magnitude)


def test_one_diff_is_signed_divided_difference():
    system = node_system(one_diff_pair(), "affine:u=0.1,h=0.3", "constant:c=0")
    nodes = [complex(system.node(i)) for i in range(5)]
    for n in range(5):
        expected = (-1) ** n * divided_difference(lambda x: 1 / (1 - 0.3 * x), nodes[: n + 1])
        assert abs(fg_difference(F, system, n).value - expected) < 1e-10


def test_q_derivative_routes_agree():
    for n in range(11):
        explicit = qdiff_n(F, 0.5, 0.7, n)
        iterated = qdiff_iterated(F, 0.5, 0.7, n)
        assert abs(explicit - iterated) <= 1e-12 * max(1.0, abs(iterated))


def test_geometric_q_derivative_closed_form():
    c, q = 0.3, 0.5
    for n in range(13):
        expected = complex(c**n * qpoch(q, q, n) / qpoch(c, q, n + 1))
        assert abs(qdiff_n(F, q, 1, n) - expected) <= 1e-11 * abs(expected)


def test_q_leibniz_matches_product_derivative():
    H = inv1mcx(0.6).F
    for n in range(11):
        expected = qdiff_n(lambda t: F(t) * H(t), 0.5, 1, n)
        assert abs(qdiff_leibniz(F, H, 0.5, 1, n) - expected) <= 1e-10 * max(1.0, abs(expected))
    square = qdiff_n(lambda t: F(t) ** 2, 0.5, 1, 4)
    assert abs(qdiff_leibniz(F, F, 0.5, 1, 4) - square) <= 1e-12 * abs(square)


def test_shifted_window_matches_direct_difference():
    system = node_system(one_diff_pair(), "geometric:b=0.2,r=0.5", "constant:c=0")
    for n in range(5):
        direct = fg_difference(F, system, n)
        assert abs(qdiff_shifted(F, 0.5, 0.8, n, 2) - direct.value) <= 1e-10 * direct.magnitude


def test_backward_differences_tend_to_taylor_coefficient():
    report = backward_difference_limit(exp().F, 0, 2, [0.1, 0.05, 0.025], derivative=1)
    assert report.target == 0.5
    assert report.rows[-1].error < report.rows[0].error
    assert report.observed_order is not None and report.observed_order > 0.5


def test_zero_denominator_reports_indices():
    system = node_system(onexy_diff_pair(), "list:2;3", "constant:c=0.5")
    with pytest.raises(ZeroDenominator) as e:
        fg_difference(F, system, 0)
    assert e.value.indices == (0, 0)


def test_argument_errors(systems):
    with pytest.raises(UsageError):
        fg_difference(F, systems["onexy-diff"], -1)
    with pytest.raises(DomainError):
        qdiff_n(F, 0.5, 0, 3)


def test_result_reports_working_precision():
    system = node_system(onexy_diff_pair(), "geometric:b=1,r=0.6", "geometric:b=0.3,r=0.4")
    result = fg_difference(lambda x: mp.exp(x) * x**2, system, 5)
    assert result.precision >= 25
    assert result.condition_estimate >= 1
