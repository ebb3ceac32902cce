import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        state = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _RESULTS.setdefault(marker.args[0], []).append(state)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, states in _RESULTS.items():
        state = "FAIL" if "FAIL" in states else ("PASS" if "PASS" in states else "SKIP")
        terminalreporter.write_line(f"{state}: {name}")


@pytest.fixture(scope="session")
def pew_dir():
    """Directory holding the public survey files, if supplied."""
    root = Path(os.environ.get("BAYESORD_PEW_DIR", Path(__file__).parent.parent / "data" / "pew"))
    return root
