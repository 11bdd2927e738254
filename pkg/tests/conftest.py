import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from unidenoise.model import DependentComponentSystem

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# channel parameters used by the image experiment
IMAGE_BSCS = (0.71, 0.32, 0.41, 0.49, 0.48, 0.82, 0.81, 0.51, 0.84, 0.17)
EXAMPLE1_BSCS = (0.1, 0.45, 0.9)


@st.composite
def bsc_params(draw, margin=0.05):
    u = draw(st.floats(margin, 0.5, allow_nan=False))
    return 0.5 + u if draw(st.booleans()) else 0.5 - u


@st.composite
def binary_systems(draw, k_min=2, k_max=4, margin=0.05, p_min=0.05, p_max=0.95):
    K = draw(st.integers(k_min, k_max))
    p0 = draw(st.floats(p_min, p_max, allow_nan=False))
    bs = [draw(bsc_params(margin)) for _ in range(K)]
    return DependentComponentSystem.binary(p0, bs)


@st.composite
def stochastic_matrices(draw, L):
    rows = []
    for _ in range(L):
        w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=L, max_size=L)))
        rows.append(w / w.sum())
    return np.array(rows)


@st.composite
def general_systems(draw, L_max=3, K_max=3):
    from unidenoise.model import Channel, Distribution

    L = draw(st.integers(2, L_max))
    K = draw(st.integers(1, K_max))
    p = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=L, max_size=L)))
    chans = tuple(Channel(draw(stochastic_matrices(L))) for _ in range(K))
    return DependentComponentSystem(Distribution(p / p.sum()), chans)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_binary_system(rng, K, margin, p_lo, p_hi):
    p0 = rng.uniform(p_lo, p_hi)
    u = rng.uniform(margin, 0.5, size=K)
    s = rng.choice([-1.0, 1.0], size=K)
    return DependentComponentSystem.binary(p0, 0.5 + s * u)


# one (criterion, passed, detail) entry per acceptance check, printed at the end of the run
ACCEPTANCE = []


def record(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
