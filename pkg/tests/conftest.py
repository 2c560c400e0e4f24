import numpy as np
import pytest
from hypothesis import strategies as st

from vtol_formation.config import DEFAULT_SCENARIO, load_config
from vtol_formation.engine import run

finite = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite, finite, finite).map(lambda t: np.array(t, dtype=float))


@st.composite
def unit_quat(draw):
    q = np.array(draw(st.tuples(finite, finite, finite, finite)), dtype=float)
    n = np.linalg.norm(q)
    if n < 1e-3:
        return np.array([1.0, 0.0, 0.0, 0.0])
    return q / n


def random_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


@pytest.fixture(scope="session")
def scenario():
    return load_config(DEFAULT_SCENARIO)


@pytest.fixture(scope="session")
def exact_run(cached_run):
    return cached_run()


@pytest.fixture(scope="session")
def smoothed_run(cached_run):
    return cached_run(sgn_mode=1, eps=1e-3)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


_RUNS = {}


@pytest.fixture(scope="session")
def cached_run(scenario):
    """Memoized shipped-scenario runs keyed by (dt, sgn_mode, eps)."""

    def get(dt=1e-3, sgn_mode=0, eps=1e-3):
        key = (dt, sgn_mode, eps)
        if key not in _RUNS:
            _RUNS[key] = run(scenario.replace(dt=dt, sgn_mode=sgn_mode, eps=eps))
        return _RUNS[key]

    return get
