"""Shared fixtures, including the acceptance criteria reporter.

Acceptance tests record one entry per criterion before asserting, so a
failing criterion still shows up in the summary block with its measured
numbers.
"""

from __future__ import annotations

import pytest


class CriterionLog:
    def __init__(self):
        self.entries: list[tuple[str, bool, str]] = []

    def record(self, criterion: str, passed: bool, detail: str = "") -> None:
        self.entries.append((criterion, bool(passed), detail))

    def check(self, criterion: str, passed: bool, detail: str = "") -> None:
        """Record the outcome, then fail the test if it did not hold."""
        self.record(criterion, passed, detail)
        assert passed, f"criterion {criterion}: {detail}"


_LOG = CriterionLog()


@pytest.fixture(scope="session")
def criteria() -> CriterionLog:
    return _LOG


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _LOG.entries:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion, passed, detail in _LOG.entries:
        status = "PASS" if passed else "FAIL"
        line = f"{status}  criterion {criterion}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
