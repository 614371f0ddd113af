import numpy as np
import pytest

from seclist.channels import bsc, noiseless, random_channel, z_channel

ACCEPTANCE_LINES = []


@pytest.fixture
def W01():
    return bsc(0.1)


@pytest.fixture
def W005():
    return bsc(0.05)


@pytest.fixture
def Z05():
    return z_channel(0.5)


@pytest.fixture
def N2():
    return noiseless(2)


def random_channels(seed, count, nx=3, ny=3):
    rng = np.random.default_rng(seed)
    return [random_channel(rng, nx, ny) for _ in range(count)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
