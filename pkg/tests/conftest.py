import pytest

_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""
    def add(number, ok, text):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {text}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return add


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
