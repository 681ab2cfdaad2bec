import numpy as np
import pytest

from contactjacobi.config import model_from_dict
from contactjacobi.extended import free_particle, harmonic_oscillator


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def free():
    return free_particle()


@pytest.fixture
def oscillator():
    return harmonic_oscillator()


@pytest.fixture
def free_model():
    return model_from_dict({"kind": "nonrelativistic", "hamiltonian": "p^2/2", "exclude": "p == 0",
                            "invariants": ["q - p*s", "p"], "name": "free particle"})


def nonzero_momentum_points(rng, count, box=2.0, margin=0.25):
    """(q, p, s) rows with |p| > margin."""
    out = []
    while len(out) < count:
        x = rng.uniform(-box, box, 3)
        if abs(x[1]) > margin:
            out.append(x)
    return np.array(out)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
