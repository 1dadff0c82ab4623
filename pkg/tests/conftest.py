import numpy as np
import pytest

from trendlab.marketdata import HOUR, PriceSeries

T0 = 1315958400  # 2011-09-14 00:00 UTC

ACCEPTANCE_LOG: list[str] = []


def make_series(closes, resolution=HOUR, start=T0, asset_id="test", filled=None):
    closes = np.asarray(closes, dtype=float)
    if filled is None:
        filled = np.zeros(closes.size, dtype=bool)
    ts = start + resolution * np.arange(closes.size, dtype=np.int64)
    return PriceSeries(asset_id, resolution, ts, closes, filled)


@pytest.fixture
def series_factory():
    return make_series


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
