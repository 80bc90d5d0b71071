import re

import pytest

_ACCEPTANCE = re.compile(r"test_criterion_(\d+)_(\w+)")
_results: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = _ACCEPTANCE.fullmatch(item.name)
    if not m or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    detail = dict(report.user_properties).get("acceptance", "")
    if not detail and report.failed:
        detail = str(report.longrepr).strip().splitlines()[-1]
    status = "PASS" if report.passed else "SKIP" if report.skipped else "FAIL"
    _results[int(m.group(1))] = (m.group(2).replace("_", " "), status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_results):
        name, status, detail = _results[k]
        terminalreporter.write_line(f"CRITERION {k:2d} {name}: {status}  [{detail}]")
