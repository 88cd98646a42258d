"""Session-level gate: the whole primary suite must finish inside 60 s.

Every test runs against scripted backends; the only socket any test touches
is a refused local connection, so the suite needs no network access.
"""

import time

SUITE_BUDGET_S = 60.0

_session_start = 0.0


def pytest_sessionstart(session):
    global _session_start
    _session_start = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.perf_counter() - _session_start
    if elapsed <= SUITE_BUDGET_S:
        terminalreporter.write_line(
            f"[PASS] full primary suite, scripted backends only ({elapsed:.1f} s < {SUITE_BUDGET_S:.0f} s)"
        )
    else:
        terminalreporter.write_line(
            f"[FAIL] full primary suite exceeded {SUITE_BUDGET_S:.0f} s ({elapsed:.1f} s)"
        )


def pytest_sessionfinish(session, exitstatus):
    if time.perf_counter() - _session_start > SUITE_BUDGET_S:
        session.exitstatus = 1
