import pytest

ACCEPTANCE = []


@pytest.fixture
def report():
    def record(number, title, passed, detail):
        ACCEPTANCE.append((number, title, bool(passed), detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        flag = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{flag}] {number:>3} {title}: {detail}")
