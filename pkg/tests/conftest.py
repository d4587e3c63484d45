import math

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from hyperconc import StateParams

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

REF = dict(alpha2=0.8, delta2=0.6)


@pytest.fixture
def ref_params():
    return StateParams.from_squares(**REF)


@pytest.fixture
def sym_params():
    return StateParams.symmetric()


# squared magnitudes kept away from 0 and 1 so every branch is populated
squares = st.floats(min_value=0.02, max_value=0.98, allow_nan=False)
phases = st.floats(min_value=-math.pi, max_value=math.pi, allow_nan=False)


@st.composite
def state_params(draw, complex_phases=False, alpha_dominant=False):
    a2, d2 = draw(squares), draw(squares)
    if alpha_dominant and a2 < 0.5:
        a2 = 1 - a2
    ph = None
    if complex_phases:
        ph = {k: draw(phases) for k in ("alpha", "beta", "delta", "eta")}
    return StateParams.from_squares(a2, d2, phases=ph)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:  # acceptance module not collected
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
