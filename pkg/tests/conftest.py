"""Shared pytest hooks.

The acceptance tests print one PASS/FAIL line each, but pytest captures
stdout of passing tests, so the lines are collected here and echoed in
their own section after the run summary.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
