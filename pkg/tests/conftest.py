import sys


def pytest_terminal_summary(terminalreporter):
    # per-test output is captured, so repeat the acceptance lines in the summary
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
