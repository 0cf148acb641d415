import re

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = dict(report.user_properties).get("detail", "")
        status = "PASS" if report.passed else "SKIP" if report.skipped else "FAIL"
        # parametrized criteria fold into one line; any failure wins
        name, prev, details = _ACCEPTANCE.get(int(m.group(1)), (m.group(2).replace("_", " "), "PASS", []))
        _ACCEPTANCE[int(m.group(1))] = (name, status if prev == "PASS" else prev, details + [detail])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        name, status, details = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k} [{status}] {name}: {'; '.join(details)}")
