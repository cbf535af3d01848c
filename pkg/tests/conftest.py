import pytest

# criterion number -> (passed, detail), filled in by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    def record(number, passed, detail=""):
        ACCEPTANCE[number] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
