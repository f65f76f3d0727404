import pytest

ACCEPTANCE = {}


def record(number, name, ok, seconds, budget, detail=""):
    ACCEPTANCE[number] = (name, ok, seconds, budget, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, ok, seconds, budget, detail = ACCEPTANCE[number]
        mark = "PASS" if ok else "FAIL"
        line = f"criterion {number:2d} {mark}  {name}  ({seconds:.2f} s, budget {budget} s)"
        if detail:
            line += f"  {detail}"
        terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    return record
