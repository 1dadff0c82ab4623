"""
Yearly walk-forward evaluation.

Windows are anchored at the first bar. The parameters that maximise Sharpe
on window k are traded, unchanged, on window k+1, and the out-of-sample
returns are compounded across windows.
"""
from __future__ import annotations

import calendar
import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from trendlab.backtest import BacktestConfig, run_backtest
from trendlab.errors import TrendlabError
from trendlab.indicators import Kind
from trendlab.marketdata import PriceSeries, bars_per_year, slice_series
from trendlab.metrics import ANNUALIZATIONS, ARITHMETIC, GEOMETRIC, PerformanceMetrics, compute_metrics
from trendlab.optimizer import GridSpec, best_params, grid_search
from trendlab.strategy import StrategySpec, crossover_signals

logger = logging.getLogger(__name__)

NO_TRADES = "no trades"
MIN_TAIL_FRACTION = 0.25

Bounds = tuple[int, int]


def add_months(ts: int, months: int) -> int:
    """Shift a UTC timestamp by calendar months, clamping the day (Feb 29 -> Feb 28)."""
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    total = dt.year * 12 + dt.month - 1 + months
    year, month = divmod(total, 12)
    day = min(dt.day, calendar.monthrange(year, month + 1)[1])
    return int(dt.replace(year=year, month=month + 1, day=day).timestamp())


def iso(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def partition_periods(prices: PriceSeries, period_months: int = 12) -> list[tuple[Bounds, Bounds]]:
    """Consecutive (train, test) window pairs of ``period_months`` each.

    At least two full windows are required. A trailing partial window is kept
    as a short final test window when it spans at least a quarter period.
    """
    if period_months < 1:
        raise TrendlabError("period must be at least one month")
    start, end = prices.start, prices.end
    edges = [start]
    while True:
        nxt = add_months(start, period_months * len(edges))
        if nxt > end:
            break
        edges.append(nxt)
    if len(edges) - 1 < 2:
        raise TrendlabError("insufficient history")
    last = edges[-1]
    if last < end:
        nominal = add_months(start, period_months * len(edges)) - last
        if (end - last) / nominal >= MIN_TAIL_FRACTION:
            edges.append(end)
    windows = list(zip(edges[:-1], edges[1:]))
    return list(zip(windows[:-1], windows[1:]))


@dataclass(frozen=True)
class PeriodResult:
    train: Bounds
    test: Bounds
    fitted: Optional[tuple[int, int]]
    train_sharpe: Optional[float]
    test_metrics: Optional[PerformanceMetrics]
    skipped_reason: Optional[str]
    test_bars: int

    @property
    def period_return(self) -> float:
        if self.skipped_reason is not None or self.test_metrics is None:
            return 0.0
        return self.test_metrics.total_return

    def to_dict(self) -> dict:
        return {
            "train_start": iso(self.train[0]),
            "train_end": iso(self.train[1]),
            "test_start": iso(self.test[0]),
            "test_end": iso(self.test[1]),
            "short": self.fitted[0] if self.fitted else None,
            "long": self.fitted[1] if self.fitted else None,
            "train_sharpe": self.train_sharpe,
            "test_metrics": self.test_metrics.to_dict() if self.test_metrics else None,
            "period_return": self.period_return,
            "skipped_reason": self.skipped_reason,
            "test_bars": self.test_bars,
        }


@dataclass(frozen=True)
class WalkForwardReport:
    kind: Kind
    grid: GridSpec
    periods: list[PeriodResult]
    combined_total_return: float
    annualized: dict[str, float] = field(default_factory=dict)
    annualization: str = GEOMETRIC

    @property
    def combined_annualized_return(self) -> float:
        return self.annualized[self.annualization]

    def parameter_table(self) -> list[dict]:
        return [
            {
                "train_start": iso(p.train[0]),
                "test_start": iso(p.test[0]),
                "short": p.fitted[0] if p.fitted else None,
                "long": p.fitted[1] if p.fitted else None,
            }
            for p in self.periods
        ]

    def write_parameter_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, ["train_start", "test_start", "short", "long"], lineterminator="\n")
            w.writeheader()
            for row in self.parameter_table():
                w.writerow({k: "" if v is None else v for k, v in row.items()})

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "grid": str(self.grid),
            "periods": [p.to_dict() for p in self.periods],
            "combined_total_return": self.combined_total_return,
            "annualization": self.annualization,
            "combined_annualized_return": self.combined_annualized_return,
            "annualized_variants": dict(self.annualized),
            "parameter_table": self.parameter_table(),
        }


def _run_period(
    prices: PriceSeries,
    train: Bounds,
    test: Bounds,
    kind: Kind,
    grid: GridSpec,
    config: BacktestConfig,
    threads: Optional[int],
) -> PeriodResult:
    train_px = slice_series(prices, *train)
    test_px = slice_series(prices, *test)
    try:
        surface = grid_search(train_px, kind, grid, config, threads=threads)
        short, long, train_m = best_params(surface)
    except TrendlabError as exc:
        logger.info("period %s: no fit (%s)", iso(train[0]), exc)
        return PeriodResult(train, test, None, None, None, NO_TRADES, len(test_px))

    metrics = None
    if long <= len(test_px):
        signals = crossover_signals(test_px, StrategySpec(kind, short, long), config.entry_on_start)
        result = run_backtest(test_px, signals, config)
        if len(test_px) >= 2:
            metrics = compute_metrics(result, config.bars_per_year or bars_per_year(prices.resolution))
    skipped = NO_TRADES if metrics is None or metrics.n_trades == 0 else None
    return PeriodResult(train, test, (short, long), train_m.sharpe, metrics, skipped, len(test_px))


def walk_forward(
    prices: PriceSeries,
    kind: Kind | str,
    grid: GridSpec,
    config: BacktestConfig = BacktestConfig(),
    period_months: int = 12,
    annualization: str = GEOMETRIC,
    threads: Optional[int] = None,
) -> WalkForwardReport:
    """Fit on each window, trade the next, and chain out-of-sample returns.

    Periods where nothing can be fitted, or where the fitted pair never
    trades, are kept in the report as flat (0% return) with reason
    ``"no trades"``.
    """
    kind = Kind.parse(kind)
    if annualization not in ANNUALIZATIONS:
        raise TrendlabError(f"unknown annualization {annualization!r}")
    periods = [
        _run_period(prices, train, test, kind, grid, config, threads)
        for train, test in partition_periods(prices, period_months)
    ]
    growth = 1.0
    for p in periods:
        growth *= 1.0 + p.period_return
    annual = config.bars_per_year or bars_per_year(prices.resolution)
    elapsed = sum(p.test_bars for p in periods) - 1
    rates = [p.period_return * annual / max(p.test_bars - 1, 1) for p in periods]
    try:
        geometric = growth ** (annual / max(elapsed, 1)) - 1.0
    except OverflowError:
        geometric = math.inf
    annualized = {
        GEOMETRIC: geometric,
        ARITHMETIC: sum(rates) / len(rates),
    }
    return WalkForwardReport(kind, grid, periods, growth - 1.0, annualized, annualization)
