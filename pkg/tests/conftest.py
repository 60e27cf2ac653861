import pytest

from elmsync.frame import SystemParams

# Lines collected by the acceptance suite and echoed in the terminal summary.
ACCEPTANCE_LINES = []


@pytest.fixture
def params():
    return SystemParams()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
