import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_eplus(rng, d, margin=0.2):
    """Random real matrix with every eigenvalue real part above ``margin``."""
    while True:
        M = rng.normal(scale=0.5, size=(d, d)) + np.eye(d) * rng.uniform(0.5, 1.5)
        if np.linalg.eigvals(M).real.min() > margin:
            return M


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion; returns the verdict."""
    def record(number, ok, detail):
        ACCEPTANCE_LINES.append((number, bool(ok), detail))
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
