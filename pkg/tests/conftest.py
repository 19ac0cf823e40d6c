"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import contextlib
import time

import pytest

RESULTS: list[tuple[str, bool, str]] = []
RUNTIME_LIMIT = 120.0
_state = {}


def pytest_sessionstart(session):
    _state["start"] = time.perf_counter()


@contextlib.contextmanager
def criterion(label, detail=""):
    """Record PASS if the block completes, FAIL (and re-raise) otherwise."""
    info = {"detail": detail}
    try:
        yield info
    except BaseException:
        RESULTS.append((label, False, info["detail"]))
        print(f"ACCEPTANCE {label}: FAIL {info['detail']}")
        raise
    RESULTS.append((label, True, info["detail"]))
    print(f"ACCEPTANCE {label}: PASS {info['detail']}")


@pytest.hookimpl(tryfirst=True)
def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _state.get("start", time.perf_counter())
    _state["elapsed"] = elapsed
    if RESULTS and elapsed > RUNTIME_LIMIT:
        session.exitstatus = pytest.ExitCode.TESTS_FAILED


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    elapsed = _state.get("elapsed", 0.0)
    lines = [(int(label.split()[0]), f"{label}: {'PASS' if ok else 'FAIL'}  {detail}")
             for label, ok, detail in RESULTS]
    lines.append((9, "9 (real-data results): N/A  no criterion targets them"))
    verdict = "PASS" if elapsed <= RUNTIME_LIMIT else "FAIL"
    lines.append((10, f"10 (suite runtime <= {RUNTIME_LIMIT:.0f} s): {verdict}  {elapsed:.1f} s"))
    for _, line in sorted(lines, key=lambda t: t[0]):
        tr.write_line(line)
