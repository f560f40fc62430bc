import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title, limit): acceptance criterion with runtime limit in seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title, limit = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        elapsed = getattr(item, "criterion_elapsed", None)
        _results[number] = (title, limit, report.outcome, elapsed)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, limit, outcome, elapsed = _results[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        took = f"{elapsed:.2f} s" if elapsed is not None else "n/a"
        terminalreporter.write_line(f"{status}  criterion {number:2d}: {title} ({took}, limit {limit} s)")


@pytest.fixture
def stopwatch(request):
    """Time the test body; fail if it exceeds the criterion's runtime limit."""
    import contextlib
    import time

    limit = request.node.get_closest_marker("criterion").args[2]

    @contextlib.contextmanager
    def run():
        start = time.perf_counter()
        yield
        elapsed = time.perf_counter() - start
        request.node.criterion_elapsed = elapsed
        assert elapsed < limit, f"took {elapsed:.2f} s, limit {limit} s"

    return run
