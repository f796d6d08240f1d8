"""Shared fixtures and the acceptance summary hook."""

import numpy as np
import pytest

from nevaikit.models import (PowerDecay, make_anderson, make_block41, make_block51, make_constant,
                             make_fibonacci, make_free, make_periodic, make_szwarc)

ACCEPTANCE_LINES = []


def zoo():
    """One instance of every model family, reused by randomized checks."""
    return [
        make_free(),
        make_constant(0.7, 0.3),
        make_szwarc(0.4),
        make_anderson(5),
        make_block41(),
        make_block51(),
        make_fibonacci(0.2),
        make_periodic([1.0, 0.5], [0.2, -0.1], PowerDecay(0.3)),
    ]


@pytest.fixture
def model_zoo():
    return zoo()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
