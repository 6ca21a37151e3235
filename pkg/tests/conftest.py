import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

ACCEPTANCE_LINES = {}


@pytest.fixture
def report(request):
    """Record the one-line verdict of an acceptance criterion."""
    def _report(number, name, passed, detail, seconds):
        verdict = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES[number] = f"criterion {number} [{verdict}] {name}: {detail} ({seconds:.2f}s)"
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
