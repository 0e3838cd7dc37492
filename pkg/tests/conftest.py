import numpy as np
import pytest

from nsc.data import LabeledDataset


def two_clusters(n=30, gap=10.0, seed=0, d=2):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 0.3, (n, d))
    b = rng.normal(0.0, 0.3, (n, d))
    b[:, 0] += gap
    return LabeledDataset(np.vstack([a, b]), np.repeat([0, 1], n), "clusters")


@pytest.fixture
def clusters():
    return two_clusters()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
