import pytest

RESULTS: list[str] = []


@pytest.fixture
def record():
    """Collect one summary line per acceptance criterion."""
    def add(line: str) -> None:
        print(line)
        RESULTS.append(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
