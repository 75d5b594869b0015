import pytest

ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion(capsys):
    """Call with (number, passed, detail); prints one PASS/FAIL line."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
