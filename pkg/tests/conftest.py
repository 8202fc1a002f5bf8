import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("varexp", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "varexp"))

# one line per acceptance criterion, filled by tests/test_acceptance.py
CRITERIA: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])


@pytest.fixture
def criterion():
    """Record the outcome of acceptance criterion ``k`` for the summary."""

    def record(k: int, ok: bool, detail: str) -> None:
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        CRITERIA[k] = line
        print(line)

    return record


@pytest.fixture(scope="session")
def suite_reports():
    from varexp.harness import run_suite

    return {r["check"]: r for r in run_suite(seed=0)}
