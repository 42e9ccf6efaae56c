"""Suite-level bookkeeping: per-criterion result lines and the wall-time
budget (the whole suite must run headless in under 60 seconds)."""

import time

SUITE_BUDGET_S = 60.0
_acceptance_results: dict[str, str] = {}


def pytest_configure(config):
    config._suite_t0 = time.time()


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance_results[name] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and report.failed:
        _acceptance_results[name] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.time() - config._suite_t0
    if _acceptance_results:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, status in _acceptance_results.items():
            terminalreporter.write_line(f"  {status}  {name}")
    within = "within" if elapsed <= SUITE_BUDGET_S else "OVER"
    terminalreporter.write_line(
        f"suite wall time {elapsed:.1f}s ({within} the {SUITE_BUDGET_S:.0f}s budget)"
    )


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.time() - session.config._suite_t0
    if exitstatus == 0 and elapsed > SUITE_BUDGET_S:
        session.exitstatus = 1
