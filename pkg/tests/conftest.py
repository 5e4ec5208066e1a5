import re
from collections import OrderedDict

_CRITERIA = OrderedDict()
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)[a-z]?_")


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        key = int(m.group(1))
        ok = _CRITERIA.get(key, True) and report.outcome == "passed"
        _CRITERIA[key] = ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {key}: {'PASS' if _CRITERIA[key] else 'FAIL'}")
