from __future__ import annotations

import numpy as np
import pytest

from esdgsem.diagnostics import sample_states
from esdgsem.systems import SYSTEM_NAMES, make_system


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pairs(name: str, n: int, seed: int = 0):
    system = make_system(name)
    rng = np.random.default_rng(seed)
    return system, sample_states(system, n, rng), sample_states(system, n, rng)


ALL_SYSTEMS = SYSTEM_NAMES


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: float(s.split()[1].rstrip(":").rstrip("ab"))):
            terminalreporter.write_line(line)
