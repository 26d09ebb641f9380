import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from rwre.env import CANONICAL_2PT, CANONICAL_3PT, EnvironmentWindow

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

LAWS = {"canonical2pt": CANONICAL_2PT, "canonical3pt": CANONICAL_3PT}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def reflected_window(omegas, lo=0):
    """Window starting with a reflecting site at ``lo``."""
    om = np.concatenate(([1.0], np.asarray(omegas, dtype=float)))
    return EnvironmentWindow(lo, om, lo)


@st.composite
def windows(draw, min_len=1, max_len=25, min_omega=0.05):
    """A reflecting site at 0 followed by 1..max_len random omegas."""
    vals = st.floats(min_value=min_omega, max_value=0.95, allow_nan=False)
    om = draw(st.lists(vals, min_size=min_len, max_size=max_len))
    return reflected_window(om)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
