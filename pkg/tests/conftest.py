import numpy as np
import pytest

from fltlf import Alphabet
from fltlf.mnist import synthetic_digit_store

# One line per acceptance criterion, filled in by tests/test_acceptance.py
# and echoed after the run so the verdicts survive output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ab2():
    return Alphabet(["p0", "p1"])


@pytest.fixture(scope="session")
def ab3():
    return Alphabet(["p0", "p1", "p2"])


@pytest.fixture(scope="session")
def store_train():
    return synthetic_digit_store(30, split="train", seed=0)


@pytest.fixture(scope="session")
def store_test():
    return synthetic_digit_store(30, split="test", seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
