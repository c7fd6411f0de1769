import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_state(rng, dim):
    from psiontic.qcore import PureState

    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState.from_amplitudes(v, normalize=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance criteria report -------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one numbered acceptance criterion.

    Usage: ``criterion(n, summary)`` before the assertions; the line is
    marked PASS only if the test body then completes.
    """
    state = {}

    def start(number: int, summary: str):
        state["n"], state["summary"] = number, summary

    yield start
    if "n" in state:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        ACCEPTANCE[state["n"]] = (ok, state["summary"])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, summary = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {summary}")
