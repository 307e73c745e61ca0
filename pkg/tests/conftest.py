import numpy as np
import pytest

from nh3trend.series import Provenance, StationSeries, YearMonth


def make_series(values, station_id="S1", start=YearMonth(2005, 1), provenance=Provenance.RAW):
    return StationSeries(station_id, start, tuple(values), provenance)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def noisy_series():
    noise = np.random.default_rng(99).normal(0.0, 1.2, 120)
    values = 10.0 + 0.01 * np.arange(1, 121) + noise
    return make_series(values, "N1", provenance=Provenance.CALIBRATED)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
