import pytest

from helpers import mc_friendly
from recgame.game import Model
from recgame.scenario import example


@pytest.fixture(scope="session")
def ex1():
    return example("example1")


@pytest.fixture(scope="session")
def ex2():
    return example("example2")


@pytest.fixture(scope="session")
def m1(ex1):
    return Model.build(ex1)


@pytest.fixture(scope="session")
def mc_scenario():
    return mc_friendly()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(REPORT):
        ok, detail = REPORT[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
