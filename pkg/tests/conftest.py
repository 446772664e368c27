import pytest

ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(number, title, ok, detail)`` for the end-of-run criterion table."""

    def record(number, title, ok, detail=""):
        ACCEPTANCE[number] = (title, bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
