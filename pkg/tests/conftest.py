import pytest

# criterion number -> (verdict, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


def record(number: int, ok: bool, detail: str = "") -> None:
    ACCEPTANCE[number] = ("PASS" if ok else "FAIL", detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{verdict} criterion {n}: {detail}")


@pytest.fixture
def rng():
    import random
    return random.Random(12345)
