"""Shared pytest hooks: surface acceptance PASS/FAIL lines in the summary."""

import pytest

_CRITERION_LINES = []


@pytest.fixture
def record_criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert."""

    def _record(criterion: int, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}"
        _CRITERION_LINES.append(line)
        print(line, flush=True)
        assert passed, line

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
