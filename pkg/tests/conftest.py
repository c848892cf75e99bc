import pytest

VERDICTS: list[str] = []


def record_verdict(line: str) -> None:
    print(line)
    VERDICTS.append(line)


@pytest.fixture
def verdict():
    return record_verdict


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
