import os
import sys
import warnings

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from fockdistill.fockcore import NegativeEigenvalueWarning  # noqa: E402

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    warnings.simplefilter("ignore", NegativeEigenvalueWarning)


@pytest.fixture
def rng():
    return np.random.default_rng(20130521)


@pytest.fixture
def note(request):
    """Attach a one-line measurement summary to an acceptance criterion."""
    marker = request.node.get_closest_marker("criterion")
    entry = _RESULTS.setdefault(marker.args[0], {"title": marker.args[1], "notes": [], "passed": None})

    def add(text):
        entry["notes"].append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    entry = _RESULTS.setdefault(marker.args[0], {"title": marker.args[1], "notes": [], "passed": None})
    ok = report.passed if report.when == "call" else False
    entry["passed"] = ok if entry["passed"] is None else entry["passed"] and ok


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        status = "PASS" if entry["passed"] else "FAIL"
        detail = "; ".join(entry["notes"])
        line = f"criterion {number:>2} {status}  {entry['title']}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
