import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-criteria PASS/FAIL lines into the final summary."""
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None) if module else None
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key, (ok, detail) in results.items():
        terminalreporter.write_line(f"ACCEPTANCE {key}: {'PASS' if ok else 'FAIL'} - {detail}")
