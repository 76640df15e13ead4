"""Per-criterion acceptance summary.

Tests tagged ``@pytest.mark.criterion(n, "title")`` are folded into one
PASS/FAIL/SKIP line per criterion at the end of the run. A criterion fails
if any of its tests fails, and is skipped only when all of them are.
"""

from collections import OrderedDict

_results: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion a test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            n, title = mark.args
            _results.setdefault(n, {"title": title, "outcomes": []})
            item.user_properties.append(("criterion", n))


def pytest_runtest_logreport(report):
    n = dict(report.user_properties).get("criterion")
    if n is None:
        return
    outcomes = _results[n]["outcomes"]
    if report.when == "call" or report.outcome != "passed":
        outcomes.append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        outcomes = _results[n]["outcomes"]
        if not outcomes:
            verdict = "NOT RUN"
        elif "failed" in outcomes:
            verdict = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {n}: {verdict:<7} {_results[n]['title']}")
