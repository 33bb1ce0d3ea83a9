import numpy as np
import pytest

import spamri as sp

# one PASS/FAIL line per acceptance criterion, echoed after the run
# (captured stdout would otherwise hide them for passing tests)
acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_grid(rng, frames=1, h=16, w=16):
    return sp.ComplexGrid(
        rng.standard_normal((frames, h, w)) + 1j * rng.standard_normal((frames, h, w))
    )


def random_mask(rng, h=16, w=16, p=0.4):
    keep = rng.random((h, w)) < p
    keep[h // 2, w // 2] = True  # never empty
    return sp.SamplingMask(keep)


def unit_coil(h=16, w=16):
    return sp.CoilSensitivities(np.ones((1, h, w), dtype=complex))
