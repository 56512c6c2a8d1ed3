from pathlib import Path

import pytest

from topical.expr import parse_map

MAPS = Path(__file__).resolve().parents[1] / "maps"


def load(name: str):
    return parse_map((MAPS / f"{name}.map").read_text())


@pytest.fixture
def e1():
    return load("e1")


@pytest.fixture
def e2():
    return load("e2")


@pytest.fixture
def mat_a():
    """x -> A x with A = [[0, 1], [0, 1]]."""
    return load("matrix_A")


@pytest.fixture
def e4():
    """(x1, max(x1, x2))."""
    return load("e4")


@pytest.fixture
def ident2():
    return load("identity2")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion ")[1][0])):
            terminalreporter.write_line(line)
