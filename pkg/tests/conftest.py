import numpy as np
import pytest

from isingloops.fk_ising import make_rng


@pytest.fixture
def rng():
    return make_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical test")


def three_sigma(count, n, p):
    """Observed count within three binomial standard errors of ``n p``."""
    sd = np.sqrt(n * p * (1 - p))
    return abs(count - n * p) <= 3 * sd + 1e-9


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report(capsys):
    """Record and print one pass/fail line for an acceptance criterion."""

    def report(number, ok, detail, elapsed, budget):
        ok = bool(ok) and elapsed < budget
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.1f}s / {budget:.0f}s]"
        _ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
