import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from conservative_thresholds import BinnedPair, Grid

settings.register_profile("default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def binned_pairs(draw, m=None, calibrated=False, min_m=2, max_m=40):
    """Valid pairs with random support, masses and conditional means."""
    m = draw(st.integers(min_m, max_m)) if m is None else m
    grid = Grid(m)
    support = draw(st.lists(st.integers(0, m), min_size=1, max_size=min(m + 1, 8), unique=True))
    weights = draw(st.lists(st.floats(0.01, 1.0), min_size=len(support), max_size=len(support)))
    total = sum(weights)
    mu = np.zeros(m + 1)
    yt = np.full(m + 1, np.nan)
    for i, w in zip(support, weights):
        mu[i] = w / total
        yt[i] = i / m if calibrated else draw(st.floats(0.0, 1.0))
    return BinnedPair(grid, mu, yt)


@pytest.fixture
def section4_pair():
    """Everyone predicted 1.0 while the true risk is 0.9, on m = 100."""
    return BinnedPair.constant(Grid(100), 100, 0.9)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
