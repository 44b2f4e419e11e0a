import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ctxobs", max_examples=60, deadline=None)
settings.load_profile("ctxobs")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def ray(*entries):
    """Unit vector with the given entries."""
    v = np.array(entries, dtype=complex)
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for result in sorted(RESULTS, key=lambda r: r.number):
            terminalreporter.write_line(result.line())
