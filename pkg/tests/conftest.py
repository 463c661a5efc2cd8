import math

import pytest

from ddsim.pulses import ErrorModelConfig, paper_config

ACCEPTANCE_LINES = []


@pytest.fixture
def paper():
    return paper_config()


@pytest.fixture
def ideal():
    return paper_config().with_zero_errors()


@pytest.fixture
def record():
    """Collect one summary line per acceptance criterion."""
    def _record(name, passed, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
        print(ACCEPTANCE_LINES[-1])
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
