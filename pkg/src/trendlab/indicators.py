"""Rolling averages (SMA, EMA, DEMA) aligned bar-for-bar with a PriceSeries."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from trendlab import _kernels
from trendlab.errors import TrendlabError
from trendlab.marketdata import PriceSeries


class Kind(str, enum.Enum):
    SMA = "sma"
    EMA = "ema"
    DEMA = "dema"

    @classmethod
    def parse(cls, value: "str | Kind") -> "Kind":
        if isinstance(value, Kind):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            raise TrendlabError(f"unknown strategy kind {value!r}") from None


@dataclass(frozen=True)
class IndicatorSeries:
    """Indicator values, NaN in the ``warmup`` leading bars where undefined."""

    kind: Kind
    window: int
    values: np.ndarray
    warmup: int

    def __len__(self) -> int:
        return int(self.values.size)

    def to_list(self) -> list[Optional[float]]:
        return [None if i < self.warmup else float(v) for i, v in enumerate(self.values)]


def _check_window(closes: np.ndarray, window: int) -> None:
    if window < 1:
        raise TrendlabError("invalid window")
    if window > closes.size:
        raise TrendlabError("window exceeds data")


def _closes(prices: PriceSeries | np.ndarray) -> np.ndarray:
    if isinstance(prices, PriceSeries):
        return prices.closes
    return np.ascontiguousarray(prices, dtype=np.float64)


def _freeze(kind: Kind, window: int, values: np.ndarray, warmup: int) -> IndicatorSeries:
    values.setflags(write=False)
    return IndicatorSeries(kind, window, values, warmup)


def sma(prices: PriceSeries | np.ndarray, window: int) -> IndicatorSeries:
    """Arithmetic mean of the trailing ``window`` closes.

    Uses a running sum that is recomputed from scratch every
    ``SMA_RESYNC`` bars, so drift stays bounded on long hourly series.
    """
    x = _closes(prices)
    _check_window(x, window)
    values = _kernels.rolling_mean(x, window, _kernels.SMA_RESYNC)
    return _freeze(Kind.SMA, window, values, window - 1)


def ema(prices: PriceSeries | np.ndarray, window: int) -> IndicatorSeries:
    """Exponential average with weight 2/(window+1), seeded with the first close."""
    x = _closes(prices)
    _check_window(x, window)
    return _freeze(Kind.EMA, window, _kernels.exp_mean(x, window), 0)


def dema(prices: PriceSeries | np.ndarray, window: int) -> IndicatorSeries:
    """Double exponential average: 2*EMA - EMA(EMA)."""
    x = _closes(prices)
    _check_window(x, window)
    e1 = _kernels.exp_mean(x, window)
    e2 = _kernels.exp_mean(e1, window)
    return _freeze(Kind.DEMA, window, 2.0 * e1 - e2, 0)


_FUNCS = {Kind.SMA: sma, Kind.EMA: ema, Kind.DEMA: dema}


def compute(kind: Kind | str, prices: PriceSeries | np.ndarray, window: int) -> IndicatorSeries:
    return _FUNCS[Kind.parse(kind)](prices, window)
