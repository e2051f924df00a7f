"""
Two-sided q-series identities verified numerically, with their (f,g)-expansion readings.
"""
from fgcalc.identities.corpus import (
    CaseReport,
    CorpusReport,
    IdentityCase,
    InterpretationReport,
    SweepReport,
    corpus,
    get_case,
    run_corpus,
    sweep,
    verify,
    verify_fg_interpretation,
)

__all__ = [
    "CaseReport",
    "CorpusReport",
    "IdentityCase",
    "InterpretationReport",
    "SweepReport",
    "corpus",
    "get_case",
    "run_corpus",
    "sweep",
    "verify",
    "verify_fg_interpretation",
]
