import numpy as np
import pytest
from mpmath import mp

from fgcalc.errors import (
    Divergent,
    DivisionByZero,
    MaxTermsExceeded,
    OutOfRange,
    PoleInLowerParams,
    UsageError,
    WindowTooSmall,
)
from fgcalc.qcore import (
    QBase,
    _max_terms_from_env,
    explicit_series,
    phi,
    pochs,
    product_over_z,
    psi_bilateral,
    psi_bilateral_adaptive,
    qbinom,
    qpoch,
    qpoch_inf,
    theta,
    triple_product_series,
    vwp_phi,
)


def test_qpoch_matches_mpmath():
    for n in range(8):
        assert abs(qpoch(0.3, 0.5, n) - mp.qp(0.3, 0.5, n)) < 1e-14


def test_qpoch_negative_index_is_reciprocal():
    a, q = mp.mpf(0.3), mp.mpf(0.5)
    for n in range(1, 6):
        assert abs(qpoch(a, q, -n) * qpoch(a * q ** (-n), q, n) - 1) < 1e-13


def test_qpoch_is_additive_over_integer_lengths():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = complex(*rng.uniform(-1.5, 1.5, 2))
        q = rng.uniform(0.2, 0.8) * (1 if rng.random() < 0.5 else -1)
        n, m = (int(v) for v in rng.integers(-6, 7, 2))
        with mp.workdps(30):
            joined = qpoch(a, q, n + m)
            split = qpoch(a, q, n) * qpoch(a * mp.mpf(q) ** n, q, m)
            assert abs(joined - split) <= 1e-13 * abs(joined)


def test_qpoch_negative_index_at_vanishing_factor():
    with pytest.raises(DivisionByZero):
        qpoch(0.25, 0.5, -3)
    with pytest.raises(DivisionByZero):
        qpoch(mp.mpf(0.3) ** 2, 0.3, -2)


def test_product_over_z_conventions():
    assert product_over_z(lambda j: 2, 0, 2) == 8
    assert product_over_z(lambda j: 2, 5, 4) == 1
    assert abs(product_over_z(lambda j: j + 1, 3, 0) - mp.mpf(1) / 6) < 1e-15
    with pytest.raises(DivisionByZero):
        product_over_z(lambda j: j, 3, -1)


def test_qpoch_inf_matches_mpmath():
    for a in (0.3, -0.7, 0.5 + 0.2j):
        value = qpoch_inf(a, 0.5)
        assert value.converged
        assert abs(value.value - mp.qp(a, 0.5)) < 1e-14


def test_truncation_tightens_with_precision():
    with mp.workdps(40):
        assert QBase.of(0.5).eps < 1e-38
        exact = mp.qp(mp.mpf("0.3"), mp.mpf("0.5"))
        assert abs(qpoch_inf(mp.mpf("0.3"), 0.5).value - exact) < mp.mpf(10) ** -35


def test_pochs_products():
    assert abs(pochs([0.2, 0.3], 0.5, 4) - qpoch(0.2, 0.5, 4) * qpoch(0.3, 0.5, 4)) < 1e-15
    assert abs(pochs([0.2, 0.3], 0.5) - mp.qp(0.2, 0.5) * mp.qp(0.3, 0.5)) < 1e-14


def test_qbinom():
    q = 0.5
    expected = qpoch(q, q, 6) / (qpoch(q, q, 2) * qpoch(q, q, 4))
    assert abs(qbinom(6, 2, q) - expected) < 1e-14
    assert qbinom(6, 0, q) == 1
    assert qbinom(3, 5, q, zero_outside=True) == 0
    with pytest.raises(OutOfRange):
        qbinom(3, 5, q)


def test_qbase_rejects_modulus_one():
    with pytest.raises(ValueError):
        QBase(q=1.0)
    with pytest.raises(ValueError):
        QBase(q=0)


def test_env_overrides(mock_env_vars):
    base = QBase(q=0.5)
    assert base.max_terms == 5
    assert base.truncation_eps == 1e-10
    with pytest.raises(MaxTermsExceeded):
        qpoch_inf(0.3, base)


def test_invalid_max_terms_env():
    with pytest.MonkeyPatch.context() as m:
        m.setenv("FG_MAX_TERMS", "many")
        with pytest.raises(UsageError):
            _max_terms_from_env()


def test_defaults_without_env(clean_env):
    base = QBase(q=0.5)
    assert base.max_terms == 10_000
    assert base.truncation_eps == 1e-14


def test_q_binomial_theorem():
    a, z, q = 0.7, 0.25, 0.5
    series = phi([a], [], q, z)
    assert series.converged
    assert abs(series.value - mp.qp(a * z, q) / mp.qp(z, q)) < 1e-13


def test_terminating_series_stops_exactly():
    q = 0.5
    series = phi([q**-3, 0.4], [0.6], q, 0.7)
    assert series.terms_used == 4
    assert series.tail_bound == 0.0


def test_pole_in_lower_parameters():
    with pytest.raises(PoleInLowerParams):
        phi([0.3], [4.0], 0.5, 0.2)


def test_divergent_series():
    with pytest.raises(Divergent):
        phi([0.3], [], 0.5, 2.0)


def test_ramanujan_bilateral_sum():
    a, b, x, q = 1.7, 0.3, 0.5, 0.5
    series = psi_bilateral_adaptive([a], [b], q, x)
    product = pochs([q, b / a, a * x, q / (a * x)], q) / pochs([b, q / a, x, b / (a * x)], q)
    assert series.converged
    assert abs(series.value - product) < 1e-10 * abs(product)


def test_bilateral_window_stops_at_cap():
    a, b, x = 0.6, 0.297, 0.5
    with pytest.raises(WindowTooSmall):
        psi_bilateral_adaptive([a], [b], 0.5, x)


def test_bilateral_window_zero_is_the_constant_term():
    series = psi_bilateral([0.6], [0.2], 0.5, 0.5, window=0)
    assert series.value == 1
    assert series.terms_used == 1


def test_bilateral_negative_terms_vanish_at_q_power_lower_parameter():
    a, x, q, N = 0.6, 0.5, 0.5, 2
    b = q ** (N + 1)
    series = psi_bilateral_adaptive([a], [b], q, x)
    product = pochs([q, b / a, a * x, q / (a * x)], q) / pochs([b, q / a, x, b / (a * x)], q)
    assert series.converged
    assert abs(series.value - product) < 1e-12 * abs(product)
    narrow = psi_bilateral([a], [b], q, x, window=N + 1)
    wide = psi_bilateral([a], [b], q, x, window=3 * N)
    right_terms = sum(qpoch(a, q, n) / qpoch(b, q, n) * x**n for n in range(N + 2, 3 * N + 1))
    assert abs(wide.value - narrow.value - right_terms) < 1e-13


def test_theta_symmetry():
    q = 0.4
    for x in (0.3, -1.7, 0.4 + 0.9j, 2.5 - 0.1j):
        value = theta(x, q)
        assert abs(theta(q / mp.mpmathify(x), q) - value) <= 1e-12 * abs(value)


def test_triple_product():
    for x in (0.3, -1.7, 0.4 + 0.9j):
        series = triple_product_series(x, 0.4)
        assert abs(series.value - theta(x, 0.4) * mp.qp(0.4, 0.4)) < 1e-12


def test_very_well_poised_6phi5():
    a, b, c, d, q = 0.2, 0.5, 0.6, 0.7, 0.4
    series = vwp_phi(a, [b, c, d], q, a * q / (b * c * d))
    numerator = pochs([a * q, a * q / (c * d), a * q / (b * d), a * q / (b * c)], q)
    product = numerator / pochs([a * q / b, a * q / c, a * q / d, a * q / (b * c * d)], q)
    assert abs(series.value - product) < 1e-10 * abs(product)


def test_explicit_series_geometric():
    series = explicit_series(lambda n: mp.mpf(0.5) ** n, 0.5)
    assert series.converged
    assert abs(series.value - 2) < 1e-13
