"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): an acceptance criterion reported in the summary")


@pytest.fixture
def criterion(request):
    """Record ``(passed, detail)`` under the test's criterion name; returns ``passed``."""
    name = request.node.get_closest_marker("criterion").args[0]

    def record(passed, detail):
        RESULTS[name] = (bool(passed), detail)
        return passed

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call" and report.failed and marker.args[0] not in RESULTS:
        RESULTS[marker.args[0]] = (False, f"error: {call.excinfo.typename}")


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (passed, detail) in RESULTS.items():
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
