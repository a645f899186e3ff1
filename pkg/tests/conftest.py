import time

import pytest

from neutralmatch.core import Instance, two_sided_profile
from neutralmatch.axioms import MechanismTable
from neutralmatch.fouragent import catalog_names
from neutralmatch.twosided import uniform_neutral_royalty

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title, limit): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        number, title, limit = marker.args
        _CRITERIA[number] = (title, limit, report.passed, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, limit, passed, duration = _CRITERIA[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"{verdict} criterion {number:>2}: {title} ({duration:.2f}s, limit {limit}s)")


@pytest.fixture(scope="session")
def cyclic():
    """The cyclic three-couple profile (also the stability counterexample)."""
    return two_sided_profile([[3, 2, 1], [1, 3, 2], [2, 1, 3]],
                             [[3, 2, 1], [1, 3, 2], [2, 1, 3]])


class RoyaltyFamily:
    """Neutral royalty mechanisms at three couples, materialized on first use."""

    def __init__(self):
        self.inst = Instance.two_sided(3)
        self.tables = None
        self.build_seconds = 0.0

    def specs(self):
        # every distinct catalog terminal under regime D, the quota rules under U
        terminals = [names[0] for _, names in sorted(catalog_names().items(),
                                                     key=lambda kv: kv[1])]
        out = [("D", 0, t) for t in terminals]
        out += [("U", 0, t) for t in ("a1", "a2", "a3", "a4")]
        return out

    def get(self):
        if self.tables is None:
            t0 = time.perf_counter()
            self.tables = [MechanismTable.from_mechanism(
                uniform_neutral_royalty(self.inst, regime, first, terminal))
                for regime, first, terminal in self.specs()]
            self.build_seconds = time.perf_counter() - t0
        return self.tables


@pytest.fixture(scope="session")
def royalty_family():
    return RoyaltyFamily()
