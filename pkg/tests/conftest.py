import pytest

from fuzzymech import make_grid

ACCEPTANCE_LINES = []


@pytest.fixture
def wide_grid():
    return make_grid(-50.0, 50.0, 4096)


@pytest.fixture
def small_grid():
    return make_grid(-20.0, 20.0, 1024)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
