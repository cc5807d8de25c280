import functools
import time

# (number, title, passed, seconds, detail) per acceptance criterion run in this session
ACCEPTANCE = []


def criterion(number, title):
    """Record a pass/fail line for an acceptance test and print it in the summary."""
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                ACCEPTANCE.append((number, title, False, time.perf_counter() - t0, repr(exc)[:160]))
                raise
            ACCEPTANCE.append((number, title, True, time.perf_counter() - t0, detail or ""))
        return inner
    return wrap


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, secs, detail in sorted(ACCEPTANCE):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {title} ({secs:.2f}s) {detail}")
