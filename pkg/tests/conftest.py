import pytest
from mpmath import mp

from fgcalc.fginv import gessel_stanton_system
from fgcalc.fgkernel import builtin_pairs
from fgcalc.nodes import node_system

NODES = "geometric:b=1,r=0.6"
PARAMS = "geometric:b=0.3,r=0.4"
PAIR_PARAMS = {"a": 0.2, "b": 0.1, "q": 0.4}


@pytest.fixture(autouse=True)
def default_precision():
    """Every test starts and ends at double precision."""
    with mp.workdps(15):
        yield


@pytest.fixture
def mock_env_vars():
    """Fixture to set up environment overrides for the truncation policy."""
    with pytest.MonkeyPatch.context() as m:
        m.setenv("FG_MAX_TERMS", "5")
        m.setenv("FG_TRUNCATION_EPS", "1e-10")
        yield


@pytest.fixture
def clean_env():
    with pytest.MonkeyPatch.context() as m:
        m.delenv("FG_MAX_TERMS", raising=False)
        m.delenv("FG_TRUNCATION_EPS", raising=False)
        yield


@pytest.fixture
def systems():
    """One node system per built-in pair on the default nodes and parameters."""
    return {pair.name: node_system(pair, NODES, PARAMS) for pair in builtin_pairs(PAIR_PARAMS)}


@pytest.fixture
def gs_system():
    """(1-xy, x-y) with b_n = q^n and x_n = Ap^n at A=0.2, p=0.4, q=0.5."""
    return gessel_stanton_system(0.2, 0.4, 0.5)
