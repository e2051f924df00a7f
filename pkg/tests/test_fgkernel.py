import pytest

from fgcalc.errors import MissingParameter, UsageError
from fgcalc.fgkernel import (
    PAIR_NAMES,
    broken_pair,
    builtin_pairs,
    check_antisymmetry,
    check_kernel,
    kernel_residual,
    pair_by_name,
    theta_pair,
)

PARAMS = {"a": 0.2, "b": 0.1, "q": 0.4}


def test_builtin_pairs_cover_every_name():
    assert [pair.name for pair in builtin_pairs(PARAMS)] == list(PAIR_NAMES)


@pytest.mark.parametrize("name", ["one-diff", "diff-diff", "onexy-diff", "bibasic"])
def test_algebraic_pairs_satisfy_kernel(name):
    pair = pair_by_name("bibasic:a=0.2,b=0.1") if name == "bibasic" else pair_by_name(name)
    report = check_kernel(pair, samples=1000, seed=0)
    assert report.passed
    assert report.max_residual <= 1e-12


def test_theta_pair_satisfies_kernel():
    report = check_kernel(theta_pair(0.4), samples=100, seed=0)
    assert report.passed
    assert report.max_residual <= 1e-8


def test_broken_pair_fails_kernel():
    report = check_kernel(broken_pair(), samples=100, seed=0)
    assert not report.passed
    assert report.max_residual > 1e-3


def test_broken_residual_at_a_point():
    assert abs(kernel_residual(pair_by_name("onexy-diff"), 0.7, 1.1, -0.4, 0.9)) < 1e-13
    assert abs(kernel_residual(broken_pair(), 0.7, 1.1, -0.4, 0.9)) > 1e-3


@pytest.mark.parametrize("pair", builtin_pairs(PARAMS), ids=lambda p: p.name)
def test_g_is_antisymmetric(pair):
    report = check_antisymmetry(pair, samples=50, seed=1)
    assert report.passed or report.informational
    assert report.max_residual <= 1e-8
    assert report.informational == (pair.name == "theta")


def test_kernel_check_is_deterministic():
    pair = pair_by_name("bibasic:a=0.2,b=0.1")
    first = check_kernel(pair, samples=50, seed=7)
    second = check_kernel(pair, samples=50, seed=7)
    assert first.model_dump() == second.model_dump()


def test_pair_by_name_binds_parameters():
    pair = pair_by_name("bibasic:a=0.2,b=0.1")
    assert pair.params == {"a": 0.2 + 0j, "b": 0.1 + 0j}
    assert pair.label().startswith("bibasic:a=")


def test_unknown_pair():
    with pytest.raises(UsageError) as e:
        pair_by_name("three-diff")
    assert "Valid pairs" in str(e.value)
    assert "onexy-diff" in str(e.value)


def test_missing_parameter():
    with pytest.raises(MissingParameter):
        pair_by_name("bibasic:a=0.2")
    with pytest.raises(MissingParameter):
        pair_by_name("theta")
