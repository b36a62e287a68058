import os

import pytest
from hypothesis import settings

settings.register_profile("levyfield", max_examples=25, deadline=None)
settings.load_profile("levyfield")

ACCEPTANCE = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line: (name, passed, detail)."""
    def rec(name, passed, detail):
        ACCEPTANCE.append((name, bool(passed), detail))
        return passed
    return rec


@pytest.fixture(autouse=True)
def _single_thread(monkeypatch):
    monkeypatch.setenv("LEVYFIELD_THREADS", os.environ.get("LEVYFIELD_THREADS", "1"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
