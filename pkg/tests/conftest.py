import numpy as np
import pytest

from mlrd.model import MemoryParameters, ProcessSpec, SlowlyVaryingSpec

ACCEPTANCE_LINES = []


def record(criterion, passed, detail=""):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def linear_spec(d_values, a_plus=None, a_minus=None, j0="zeta", innovation="standard_normal"):
    d = len(d_values)
    ap = np.eye(d) if a_plus is None else a_plus
    am = np.eye(d) if a_minus is None else a_minus
    return ProcessSpec("linear_lrd", d, MemoryParameters(tuple(d_values)), SlowlyVaryingSpec(ap, am, j0), innovation)


def gaussian_spec(d_values, r_diag=None):
    return ProcessSpec("gaussian_diagonal", len(d_values), MemoryParameters(tuple(d_values)),
                       r_diag=None if r_diag is None else tuple(r_diag))


def random_linear_spec(rng, max_dim=3):
    d = int(rng.integers(1, max_dim + 1))
    vals = np.sort(rng.uniform(0.05, 0.45, size=d))[::-1]
    while d > 1 and np.min(-np.diff(vals)) < 0.01:
        vals = np.sort(rng.uniform(0.05, 0.45, size=d))[::-1]
    ap = np.eye(d) + 0.3 * rng.standard_normal((d, d))
    am = np.eye(d) + 0.3 * rng.standard_normal((d, d))
    return linear_spec(vals, ap, am)


@pytest.fixture
def lin2():
    return linear_spec((0.4, 0.2))


@pytest.fixture
def white2():
    return ProcessSpec("white_noise", 2)
