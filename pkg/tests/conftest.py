import pytest

_ACCEPTANCE: list = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(criterion, ok, detail)``."""

    def add(criterion, ok, detail=""):
        _ACCEPTANCE.append((criterion, bool(ok), detail))

    return add


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in sorted(_ACCEPTANCE, key=lambda r: str(r[0])):
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
