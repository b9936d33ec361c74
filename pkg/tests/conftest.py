import math

import numpy as np
import pytest


def mean_se(samples):
    samples = np.asarray(samples, dtype=float)
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(samples.size))


def assert_mean_near(samples, target, sigmas=3.0, atol=1e-12):
    """Two-sided: sample mean within ``sigmas`` standard errors of ``target``."""
    m, se = mean_se(samples)
    assert abs(m - target) <= sigmas * se + atol, f"mean {m:.6g} vs {target:.6g} (se {se:.3g})"


def assert_mean_below(samples, bound, sigmas=3.0):
    m, se = mean_se(samples)
    assert m <= bound + sigmas * se, f"mean {m:.6g} above {bound:.6g} (se {se:.3g})"


@pytest.fixture
def seed():
    return 20241018


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, passed, detail)``."""

    def record(number, passed, detail):
        _CRITERIA.append((number, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
