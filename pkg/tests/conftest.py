import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from sops_compression.rng import make_rng
from sops_compression.samplers import random_growth, random_state

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def grown_states(draw, max_n=20):
    """Random connected hole-free cell sets, reproducible from a drawn seed."""
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_growth(n, make_rng(seed))


@st.composite
def mixed_states(draw, max_n=20):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_state(n, make_rng(seed))


cells = st.tuples(st.integers(-50, 50), st.integers(-50, 50))


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
