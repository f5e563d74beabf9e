import math

import numpy as np
import pytest
from hypothesis import assume, settings
from hypothesis import strategies as st

from icdlab.icd import ICDParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

E1_P = (0.7, 0.1, 0.1, 0.1)
E1_THETA = math.pi / 6


@pytest.fixture
def e1():
    return ICDParams(E1_P, E1_THETA)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_hermitian(rng, n=4, psd=False):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return g @ g.conj().T if psd else g + g.conj().T


def random_symmetric(rng, n=4):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return g + g.T


@st.composite
def icd_params(draw, min_theta=0.05):
    w = [draw(st.floats(0.0, 1.0)) for _ in range(4)]
    if sum(w) < 1e-3:
        w[0] = 1.0
    theta = draw(st.floats(min_theta, math.pi / 2 - min_theta))
    total = sum(w)
    return ICDParams(tuple(x / total for x in w), theta)


@st.composite
def region1_params(draw):
    """Entangled points moved to region-1 position."""
    from icdlab.icd import SEPARABLE, classify_region, to_region1

    q = draw(icd_params())
    kind = classify_region(q).kind
    if kind == SEPARABLE:
        # push weight onto psi_1 until the point is entangled
        p = np.array(q.p)
        q = ICDParams(tuple(0.2 * p + np.array([0.8, 0, 0, 0])), q.theta)
        kind = classify_region(q).kind
    assume(kind != SEPARABLE)
    return to_region1(q, kind)[0]


def complex_vectors(rng, k):
    return rng.standard_normal((k, 4)) + 1j * rng.standard_normal((k, 4))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
