import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one summary line per acceptance criterion."""

    def record(criterion: str, ok: bool, detail: str) -> None:
        line = f"{criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        _LINES.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
