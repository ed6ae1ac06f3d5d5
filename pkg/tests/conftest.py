import pytest

from whittlecrawl.model import table1_fleet

_ACCEPTANCE = []


@pytest.fixture
def table1():
    return table1_fleet(budget=1.0)


@pytest.fixture
def src1(table1):
    return table1.sources[0]


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _report(criterion, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
