"""Shared pytest plumbing: the acceptance summary printed after the run."""

from __future__ import annotations

from tests.gatelog import criterion_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in criterion_lines:
            terminalreporter.write_line(line)
