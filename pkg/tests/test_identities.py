import pytest

from fgcalc.errors import DomainViolation, UsageError
from fgcalc.identities.corpus import (
    bind,
    corpus,
    get_case,
    q_binomial_chain,
    run_case,
    run_corpus,
    sweep,
    verify,
    verify_fg_interpretation,
)
from fgcalc.identities.expansions import INTERPRETATIONS

ACTIVE = [case.id for case in corpus() if case.status == "active"]
TERMINATING = [case.id for case in corpus() if case.status == "active" and case.terminating]


def test_corpus_contents():
    cases = corpus()
    assert len(cases) == 39
    assert len([case for case in cases if case.status == "stub"]) == 11
    assert len({case.id for case in cases}) == 39
    assert all(case.anchor for case in cases)
    assert len(TERMINATING) == 18


@pytest.mark.parametrize("case_id", ACTIVE)
def test_active_cases_hold_at_defaults(case_id):
    report = verify(get_case(case_id))
    assert report.passed, report.format_message()
    assert report.relative_error <= report.tolerance


@pytest.mark.parametrize("case_id", sorted(INTERPRETATIONS))
def test_fg_interpretations(case_id):
    report = verify_fg_interpretation(get_case(case_id))
    assert report.passed, report.format_message()


def test_carlitz_lebesgue_finite_orders():
    case = get_case("carlitz-lebesgue-finite")
    for n in range(11):
        assert verify(case, {"n": n}).passed


def test_gasper_new_family():
    case = get_case("gasper-new")
    for N in range(9):
        for m in range(1, 5):
            report = verify(case, {"N": N, "m": m}, tolerance=1e-9)
            assert report.passed, report.format_message()


def test_out_of_domain_parameters():
    with pytest.raises(DomainViolation):
        verify(get_case("q-binomial"), {"q": 1.5})
    with pytest.raises(DomainViolation):
        verify(get_case("gasper-difference"), {"n": 2, "m": 2})


def test_bind_rejects_unknown_and_fractional_parameters():
    case = get_case("geometric-finite")
    with pytest.raises(UsageError):
        bind(case, {"zeta": 0.1})
    with pytest.raises(DomainViolation):
        bind(case, {"n": 2.5})
    assert bind(case, {"n": 4}) == {"n": 4, "c": 0.3, "q": 0.5}


@pytest.mark.parametrize("case_id", TERMINATING)
def test_terminating_sweeps(case_id):
    report = sweep(get_case(case_id), seed=0, trials=20)
    assert report.passed, report.format_message()
    assert report.trials == 20


def test_sweep_is_deterministic():
    case = get_case("q-gauss-finite")
    assert sweep(case, seed=3, trials=5).model_dump() == sweep(case, seed=3, trials=5).model_dump()


def test_q_binomial_chain():
    report = q_binomial_chain()
    assert report.passed, report.format_message()


def test_stub_is_listed_not_evaluated():
    report = verify(get_case("singh"))
    assert report.status == "stub"
    assert report.passed
    assert report.lhs is None
    with pytest.raises(UsageError):
        verify_fg_interpretation(get_case("singh"))


def test_run_case_with_override_skips_interpretation():
    outcome = run_case("q-binomial", overrides={"z": 0.5})
    assert outcome.passed
    assert outcome.interpretation is None


def test_run_corpus_subset():
    report = run_corpus(["geometric-finite", "q-kummer"], sweep=2, seed=1)
    assert report.passed
    assert [o.case.id for o in report.outcomes] == ["geometric-finite", "q-kummer"]
    assert report.co_verification is None
    assert report.outcomes[0].sweep.trials == 2


def test_run_corpus_overrides_need_cases():
    with pytest.raises(UsageError):
        run_corpus(overrides={"q": 0.3})


def test_unknown_case():
    with pytest.raises(UsageError) as e:
        get_case("q-nothing")
    assert "Valid cases" in str(e.value)


def test_bilateral_sweep_stays_inside_window_cap():
    report = sweep(get_case("ramanujan-1psi1"), seed=0, trials=20)
    assert report.passed, report.format_message()
