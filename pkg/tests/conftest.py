import math

import numpy as np
import pytest

_criteria: dict[str, list[str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def within_3_sigma(successes: int, trials: int, p: float) -> bool:
    sigma = math.sqrt(p * (1 - p) / trials)
    return abs(successes / trials - p) <= 3 * sigma + 1e-12


def within_3_sigma_heterogeneous(hits: int, probs) -> bool:
    """Sum of independent Bernoulli(p_i) draws against its mean, 3 sigma."""
    probs = np.asarray(probs, dtype=float)
    sigma = math.sqrt(float(np.sum(probs * (1 - probs))))
    return abs(hits - probs.sum()) <= 3 * sigma + 1e-9


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and (report.when == "call" or report.outcome != "passed"):
        _criteria.setdefault(marker.args[0], []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcomes in sorted(_criteria.items()):
        ok = all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")
