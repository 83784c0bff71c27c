"""Shared pytest wiring: collects acceptance pass/fail lines and prints them
in a dedicated terminal section at the end of the run (they are emitted even
when output capture is active)."""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
