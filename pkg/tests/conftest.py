import math

import pytest

from deltastar import angle_config, assemble, build_grid, lines_config


@pytest.fixture(scope="session")
def small_grid():
    # origin sits on the centre node: 2L/h = 40, n = 39
    return build_grid(5.0, 0.25)


@pytest.fixture(scope="session")
def small_angle_form(small_grid):
    return assemble(small_grid, angle_config(math.pi / 3, 1.0))


@pytest.fixture(scope="session")
def small_lines_form(small_grid):
    return assemble(small_grid, lines_config(math.pi / 4, 1.5))


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the test still asserts on its own."""

    def record(number, name, ok, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} {detail}".rstrip())
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
