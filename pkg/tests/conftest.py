import pytest

# One "PASS/FAIL <criterion> ..." line per acceptance criterion, echoed at
# the end of the run so the report is visible without -s.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def _report(line: str):
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
