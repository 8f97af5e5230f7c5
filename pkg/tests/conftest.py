import re

import pytest

_CRITERION = re.compile(r"test_criterion_(\d+)")
_DETAIL = {}
_OUTCOME = {}


@pytest.fixture
def report(request):
    """``report(text)`` attaches a one-line summary to the running criterion."""
    number = int(_CRITERION.search(request.node.name).group(1))

    def record(text):
        _DETAIL[number] = text
        print(f"criterion {number}: {text}")

    return record


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if match is None:
        return
    number = int(match.group(1))
    if report.when == "call" or report.outcome != "passed":
        # a setup or teardown failure overrides a passing call
        if report.outcome != "passed" or number not in _OUTCOME:
            _OUTCOME[number] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOME:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOME):
        status = "PASS" if _OUTCOME[number] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {_DETAIL.get(number, '')}")
