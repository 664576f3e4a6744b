import pytest

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, passed, detail)``."""
    def record(number, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
