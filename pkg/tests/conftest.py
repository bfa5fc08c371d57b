import numpy as np
import pytest
from hypothesis import settings

from tandem.numerics import make_rng

settings.register_profile("ci", max_examples=1000, deadline=None)
settings.register_profile("dev", max_examples=100, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return make_rng(12345)


def vectors(n, d, seed=0):
    return np.random.default_rng(seed).uniform(0, 1, size=(n, d))


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
