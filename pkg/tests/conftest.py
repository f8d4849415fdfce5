import time
from contextlib import contextmanager

ACCEPTANCE: list = []


@contextmanager
def criterion(number: int, title: str, limit: float):
    """Record pass/fail and runtime of an acceptance criterion; the body fails
    the criterion by raising, and overrunning the time limit fails it too."""
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        within = elapsed <= limit
        ACCEPTANCE.append((number, title, ok and within, elapsed, limit))
    assert within, f"criterion {number} took {elapsed:.1f}s > {limit}s"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, elapsed, limit in sorted(ACCEPTANCE):
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {elapsed:6.2f}s / {limit:.0f}s  {title}"
        )
