import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from helpers import ACCEPTANCE_LINES  # noqa: E402
from illab.geometry import Schedule  # noqa: E402
from illab.scenarios import builtin_scenarios  # noqa: E402


@pytest.fixture(scope="session")
def scenarios():
    return {s.name: s for s in builtin_scenarios()}


@pytest.fixture
def default_schedule():
    return Schedule.geometric(order=2)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
