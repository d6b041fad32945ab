import os

import pytest

from primedeficit.prime_engine import PrimeEngine


def pytest_addoption(parser):
    parser.addoption(
        "--skip-heavy", action="store_true", default=False,
        help="skip tests that sieve up to ~1.4e9 (about a minute in total)",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--skip-heavy") or os.environ.get("PRIMEDEFICIT_SKIP_HEAVY") == "1":
        skip = pytest.mark.skip(reason="heavy tier disabled")
        for item in items:
            if "heavy" in item.keywords:
                item.add_marker(skip)


@pytest.fixture(scope="session")
def engine():
    return PrimeEngine()


_criteria = {}


def pytest_runtest_logreport(report):
    item_label = getattr(report, "criterion_label", None)
    if item_label is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _criteria[item_label] = outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion_label = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: (int("".join(c for c in s.split()[0] if c.isdigit())), s)):
        terminalreporter.write_line(f"{_criteria[label]}  {label}")
