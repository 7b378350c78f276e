import pytest

RESULTS = {}


@pytest.fixture
def record():
    """Store one acceptance line: ``record(number, passed, detail)``."""
    def _record(number, passed, detail):
        RESULTS[number] = (bool(passed), detail)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        passed, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
