import pytest
from mpmath import mp

from fgcalc.errors import DomainError, UsageError
from fgcalc.functions import (
    FUNCTION_NAMES,
    carlitz_lebesgue_F,
    exp_truncated,
    make_function,
    parse_function,
    power,
    ramanujan_F,
    rogers_fine_F,
)
from fgcalc.qcore import pochs


def test_inv1mcx_defaults():
    function = parse_function("inv1mcx")
    assert function.params == {"c": 0.3}
    assert abs(function(0.5) - 1 / 0.85) < 1e-14
    assert abs(function.coefficients(3) - 0.3**3) < 1e-16
    assert function.ratio_limit == 0.3


def test_parse_binds_parameters():
    function = parse_function("inv1mcx:c=0.5")
    assert abs(function(1) - 2) < 1e-14
    assert parse_function("power:r=3")(2) == 8
    assert parse_function("power:r=3").coefficients(3) == 1


def test_fractional_power_has_no_coefficients():
    function = power(0.5)
    assert function.coefficients is None
    assert abs(function(4) - 2) < 1e-14


def test_exp_truncated_is_a_polynomial():
    function = exp_truncated(3)
    assert abs(function(1) - (1 + 1 + 0.5 + 1 / 6)) < 1e-14
    assert function.coefficients(4) == 0
    assert make_function("exp-truncated").params["n"] == 10


def test_rogers_fine_sums_the_series():
    function = rogers_fine_F(0.4, 0.5, 0.5)
    series = sum(mp.qp(0.4, 0.5, n) / mp.qp(0.3, 0.5, n) * mp.mpf(0.5) ** n for n in range(200))
    assert abs(function(0.3) - series) < 1e-12


def test_ramanujan_product():
    a, x, q = 0.6, 0.5, 0.5
    function = ramanujan_F(a, x, q)
    y = 0.2
    expected = pochs([q, y / a, a * x, q / (a * x)], q) / pochs([y, q / a, x, y / (a * x)], q)
    assert abs(function(y) - expected) < 1e-12
    with pytest.raises(DomainError):
        ramanujan_F(0, x, q)


def test_carlitz_lebesgue_is_finite_near_zero():
    function = carlitz_lebesgue_F(0.2, 0.3, 0.5)
    assert mp.isfinite(mp.mpmathify(function(0.1)))


def test_unknown_function():
    with pytest.raises(UsageError) as e:
        parse_function("tangent")
    assert "Valid functions" in str(e.value)
    assert "inv1mcx" in str(e.value)


def test_bad_integer_parameter():
    with pytest.raises(UsageError):
        parse_function("exp-truncated:n=2.5")


def test_corpus_function_needs_an_id():
    with pytest.raises(UsageError):
        parse_function("corpus")


def test_every_name_is_known():
    for name in FUNCTION_NAMES:
        if name != "corpus":
            assert make_function(name).name == name
