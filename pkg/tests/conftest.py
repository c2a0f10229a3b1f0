import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mps_rescale import fixtures

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def disk200():
    return fixtures.disk()


@pytest.fixture(scope="session")
def rand512():
    return fixtures.random_binary(512, 512, 0.5, seed=20260822)


@pytest.fixture(scope="session")
def stripes200():
    return fixtures.stripes_random(200, 200, seed=7)
