"""Collects outcomes of tests marked ``acceptance`` and prints one line per criterion."""

from collections import defaultdict

import pytest

_outcomes: dict[int, dict] = defaultdict(lambda: {"title": "", "tests": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry = _outcomes[number]
        entry["title"] = title
        entry["tests"].append((item.name, rep.passed, rep.skipped))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_outcomes):
        entry = _outcomes[number]
        failed = [name for name, ok, skipped in entry["tests"] if not ok]
        status = "PASS" if not failed else "FAIL"
        suffix = "" if not failed else f"  (failing: {', '.join(failed)})"
        tr.write_line(f"criterion {number}: {status}  {entry['title']}{suffix}")
