import pytest


def pytest_addoption(parser):
    parser.addoption("--quick-mc", action="store_true", default=False,
                     help="run the Monte Carlo criterion with fewer shots")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, checks = RESULTS[n]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}"
        bad = [f"{a} ({c})" for a, b, c in checks if not b]
        terminalreporter.write_line(line + ("" if ok else "; failing: " + "; ".join(bad)))
