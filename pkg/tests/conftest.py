import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_ACCEPTANCE = []


@pytest.fixture
def accept():
    """Record one acceptance line: accept(criterion, ok, text)."""

    def record(criterion, ok, text):
        status = "PASS" if ok else "FAIL"
        _ACCEPTANCE.append((criterion, len(_ACCEPTANCE), status, text))
        print(f"[{criterion:>2}] {status}  {text}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, _, status, text in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{crit:>2}] {status}  {text}")
