import pytest
from mpmath import mp

from fgcalc.errors import DomainError, UsageError, ZeroDifference
from fgcalc.fgexpand import (
    ExpansionSpec,
    carlitz_reconstruct,
    coefficient_recovery,
    coefficient_routes_check,
    expand,
    expansion_coeffs,
    gs_reconstruct,
    interpolation_check,
    knk_generating_function_check,
    knk_recursion_check,
    knk_second_recursion_check,
    knn_limit_check,
    lambda_ratios,
    liu_reconstruct,
    partial_sum,
    qdiff_knn_check,
)
from fgcalc.fgkernel import one_diff_pair
from fgcalc.functions import inv1mcx, sinpi
from fgcalc.nodes import node_system
from fgcalc.qcore import qpoch

C, A, P, Q = 0.3, 0.2, 0.4, 0.5
F = inv1mcx(C).F


def geometric(r):
    return C**r


@pytest.fixture
def spec(gs_system):
    return ExpansionSpec(F=F, sys=gs_system, max_order=30, eval_points=[0.05])


def test_leading_coefficient(spec):
    assert abs(expansion_coeffs(spec)[0] - 1 / ((1 - C) * (1 - A))) < 1e-13


def test_geometric_closed_form(spec):
    coeffs = expansion_coeffs(spec)
    for n in range(1, 13):
        expected = complex((-1) ** n * C**n * qpoch(A * P / C, P, n - 1) / qpoch(C, Q, n + 1))
        assert abs(coeffs[n] - expected) <= 1e-10 * abs(expected)


def test_lambda_ratios_tend_to_one_minus_c(spec):
    ratios = lambda_ratios(spec)
    assert len(ratios) == 30
    assert abs(ratios[25] - (1 - C)) < 0.05


def test_interpolation_at_nodes(spec):
    residuals = interpolation_check(spec)
    assert len(residuals) == 31
    assert max(residuals[:15]) <= 1e-10


def test_partial_sum_converges(spec):
    assert abs(partial_sum(spec, 20, 0.05) - 1 / (1 - C * 0.05)) <= 1e-8
    with pytest.raises(UsageError):
        partial_sum(spec, 31, 0.05)


def test_expand_report(gs_system):
    report = expand(ExpansionSpec(F=F, sys=gs_system, eval_points=[0.1]), 0.1)
    assert report.passed
    assert report.verdict == "converged"
    assert report.diagnostic.reconstruction_error <= 1e-9
    assert len(report.rows) == 41
    assert len(report.partial_sums) == 1
    assert abs(report.partial_sums[0][-1] - 1 / (1 - C * 0.1)) <= 1e-9


def test_expand_is_deterministic(gs_system):
    first = expand(ExpansionSpec(F=F, sys=gs_system, max_order=12), 0.1)
    second = expand(ExpansionSpec(F=F, sys=gs_system, max_order=12), 0.1)
    assert first.model_dump() == second.model_dump()


def test_coefficients_are_recovered_from_partial_sums(gs_system):
    report = coefficient_recovery(ExpansionSpec(F=F, sys=gs_system, max_order=10))
    assert report.passed


def test_integer_nodes_do_not_determine_sinpi():
    system = node_system(one_diff_pair(), "affine:u=0,h=1", "constant:c=0")
    report = expand(ExpansionSpec(F=sinpi().F, sys=system, max_order=10), 0.5)
    assert all(abs(g) == 0 for g in report.coeffs)
    assert abs(report.diagnostic.reconstruction_error - 1) < 1e-12
    assert not report.passed
    assert report.diagnostic.accumulation_point is None
    assert "accumulation" in report.diagnostic.diagnosis
    assert all(ratio is None for ratio in report.lambda_ratios)


def test_strict_lambda_ratios_raise():
    system = node_system(one_diff_pair(), "affine:u=0,h=1", "constant:c=0")
    with pytest.raises(ZeroDifference):
        lambda_ratios(ExpansionSpec(F=sinpi().F, sys=system, max_order=4), strict=True)


def test_reconstruction_routes():
    target = 1 / (1 - C * 0.05)
    assert abs(gs_reconstruct(F, A, P, Q, 0.05, 40) - target) <= 1e-8
    assert abs(liu_reconstruct(F, 0.3, Q, 0.05, 40) - target) <= 1e-8
    assert abs(carlitz_reconstruct(F, Q, 0.05, 40) - target) <= 1e-8


def test_coefficient_routes_agree():
    assert coefficient_routes_check(F, 0.3, P, Q, 10).passed


def test_knk_recursions():
    assert knk_recursion_check(geometric, Q, 3, 1, 0.4).passed
    assert knk_second_recursion_check(geometric, Q, 3, 1, 0.4).passed


def test_knk_generating_function():
    assert knk_generating_function_check(geometric, Q, 2, 0.2, 0.5).passed
    with pytest.raises(DomainError):
        knk_generating_function_check(geometric, Q, 2, 0.5, 0.2)


def test_q_derivative_is_knn():
    assert qdiff_knn_check(F, geometric, Q, 0.4, 8).passed


def test_knn_limit():
    report = knn_limit_check(geometric, C, Q, 0.4, 30)
    assert report.passed
    assert abs(report.limit - complex(1 / mp.qp(C * 0.4, Q))) < 1e-12
    assert report.rows[-1].deviation < report.rows[1].deviation
