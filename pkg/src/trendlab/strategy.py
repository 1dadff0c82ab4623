"""Crossover rule: turn a (short, long) pair of averages into Buy/Sell/Hold signals."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from trendlab import _kernels
from trendlab.errors import TrendlabError
from trendlab.indicators import IndicatorSeries, Kind, compute
from trendlab.marketdata import PriceSeries

# Relative gap below which the two averages count as equal. Rolling sums and
# recurrences leave ~1e-13 relative noise, which must not register as a cross.
TIE_RTOL = 1e-11


class Signal(enum.IntEnum):
    SELL = -1
    HOLD = 0
    BUY = 1


@dataclass(frozen=True)
class StrategySpec:
    kind: Kind
    short_window: int
    long_window: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        if self.short_window < 1:
            raise TrendlabError("invalid window")
        if self.short_window >= self.long_window:
            raise TrendlabError("short must be < long")


@dataclass(frozen=True)
class SignalSeries:
    signals: np.ndarray
    first_active: int

    def __len__(self) -> int:
        return int(self.signals.size)

    def as_enums(self) -> list[Signal]:
        return [Signal(int(s)) for s in self.signals]


def signals_from_indicators(
    short: IndicatorSeries, long: IndicatorSeries, entry_on_start: bool = True
) -> SignalSeries:
    """Run the crossover state machine over two precomputed averages.

    With ``entry_on_start`` the first bar where the averages differ emits an
    entry matching their ordering; without it, that bar only sets the state
    and the first signal waits for a genuine cross.
    """
    if len(short) != len(long):
        raise TrendlabError("indicator series are misaligned")
    first_active = max(short.warmup, long.warmup)
    out = _kernels.crossover(short.values, long.values, first_active, entry_on_start, TIE_RTOL)
    out.setflags(write=False)
    return SignalSeries(out, first_active)


def crossover_signals(prices: PriceSeries, spec: StrategySpec, entry_on_start: bool = True) -> SignalSeries:
    if spec.long_window > len(prices):
        raise TrendlabError("window exceeds data")
    short = compute(spec.kind, prices, spec.short_window)
    long = compute(spec.kind, prices, spec.long_window)
    return signals_from_indicators(short, long, entry_on_start)
