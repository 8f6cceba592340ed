"""Collects acceptance-test outcomes and prints one line per criterion."""

_acceptance_reports: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance_reports[report.nodeid.split("::")[-1]] = report.outcome.upper()
    elif ("test_acceptance.py" in report.nodeid and report.when == "setup"
          and report.outcome in ("skipped", "failed")):
        _acceptance_reports[report.nodeid.split("::")[-1]] = report.outcome.upper()


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_reports:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_acceptance_reports):
        outcome = _acceptance_reports[name]
        flag = {"PASSED": "PASS", "FAILED": "FAIL", "SKIPPED": "SKIP"}.get(outcome, outcome)
        terminalreporter.write_line(f"ACCEPTANCE {flag}: {name}")
