import pytest

CRITERIA = []


def record(number, description, passed, detail=""):
    CRITERIA.append((number, description, bool(passed), detail))
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, passed, detail in sorted(CRITERIA, key=lambda c: c[0]):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number:>2}: {description}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    return record
