import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from prosumage import synthetic

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=1000,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


@pytest.fixture(scope="session")
def dataset():
    return synthetic.generate(20)


@pytest.fixture(scope="session")
def small_dataset():
    return synthetic.generate(2)


# acceptance reporting: one line per criterion at the end of the run

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when != "call" and rep.outcome == "passed":
        return
    n = marker.args[0]
    entry = _criteria.setdefault(n, {"title": marker.args[1], "outcomes": [], "reasons": []})
    entry["outcomes"].append(rep.outcome)
    if rep.outcome == "skipped" and isinstance(rep.longrepr, tuple):
        entry["reasons"].append(rep.longrepr[2])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        outs = e["outcomes"]
        if "failed" in outs:
            status = "FAIL"
        elif all(o == "skipped" for o in outs):
            status = "SKIP"
        else:
            status = "PASS"
        note = f"  ({e['reasons'][0]})" if status == "SKIP" and e["reasons"] else ""
        terminalreporter.write_line(f"criterion {n:2d} {status}  {e['title']}{note}")
