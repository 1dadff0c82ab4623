"""All-in long/flat portfolio simulation without fees or slippage."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from trendlab import _kernels
from trendlab.errors import TrendlabError
from trendlab.marketdata import PriceSeries
from trendlab.strategy import Signal, SignalSeries


@dataclass(frozen=True)
class BacktestConfig:
    initial_cash: float = 10_000.0
    entry_on_start: bool = True
    # None derives the factor from the price resolution
    bars_per_year: Optional[float] = None

    def __post_init__(self):
        if not self.initial_cash > 0:
            raise TrendlabError("initial_cash must be positive")
        if self.bars_per_year is not None and not self.bars_per_year > 0:
            raise TrendlabError("bars_per_year must be positive")


class Trade(NamedTuple):
    index: int
    side: Signal
    price: float
    units: float


@dataclass(frozen=True)
class BacktestResult:
    equity: np.ndarray
    trades: list[Trade] = field(repr=False)
    bars_in_market: int

    @property
    def n_trades(self) -> int:
        return len(self.trades)

    @property
    def final_equity(self) -> float:
        return float(self.equity[-1])


def run_backtest(prices: PriceSeries, signals: SignalSeries, config: BacktestConfig = BacktestConfig()) -> BacktestResult:
    """Execute signals at each bar's close.

    A Buy while flat converts all cash into (fractional) units; a Sell while
    long converts all units back. Other signals are ignored. An open position
    at the end is marked to the last close, not liquidated.
    """
    if len(signals) != len(prices):
        raise TrendlabError(f"signals ({len(signals)}) and prices ({len(prices)}) are misaligned")
    equity, idx, side, price, units, in_market = _kernels.simulate(
        prices.closes, signals.signals, float(config.initial_cash)
    )
    equity.setflags(write=False)
    trades = [
        Trade(int(i), Signal(int(s)), float(p), float(u))
        for i, s, p, u in zip(idx, side, price, units)
    ]
    return BacktestResult(equity, trades, int(in_market))
