import sys

import numpy as np
import pytest

from cqcoding import channels as C
from cqcoding.operators import pure_state

Q_HALF = np.array([[0.75, 0.25], [0.25, 0.75]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def noiseless():
    return C.memoryless([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])


@pytest.fixture
def identical():
    s = pure_state([1, 1])
    return C.memoryless([s, s])


def markov_fixture():
    """Two-state Markov noise (second eigenvalue 0.5): identity or amplitude damping."""
    noise = C.MarkovNoise(Q_HALF, (C.CPTPMap.identity(2), C.CPTPMap.amplitude_damping(0.4)))
    theta = np.pi / 3
    return C.markov_noise([pure_state([1, 0]), pure_state([np.cos(theta), np.sin(theta)])],
                          noise)


@pytest.fixture
def markov_channel():
    return markov_fixture()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
