import pytest

# criterion number -> (status, detail), filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}")


@pytest.fixture
def record_criterion(capsys):
    def record(n: int, ok: bool | None, detail: str):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        ACCEPTANCE[n] = (status, detail)
        with capsys.disabled():
            print(f"\n[acceptance] criterion {n}: {status}  {detail}")
        return ok

    return record
