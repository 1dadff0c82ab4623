"""Moving-average trend following: ingestion, backtesting, grid search, walk-forward."""

from trendlab.errors import ParseError, TrendlabError
from trendlab.marketdata import PriceSeries, TickSeries, parse_ohlc_csv, parse_tick_csv, resample, slice_series
from trendlab.indicators import IndicatorSeries, Kind, dema, ema, sma
from trendlab.strategy import Signal, SignalSeries, StrategySpec, crossover_signals
from trendlab.backtest import BacktestConfig, BacktestResult, Trade, run_backtest
from trendlab.metrics import PerformanceMetrics, compute_metrics
from trendlab.optimizer import GridSpec, SharpeSurface, best_params, grid_search
from trendlab.walkforward import WalkForwardReport, partition_periods, walk_forward
from trendlab.analysis import (
    CorrelationSeries,
    PairedReturns,
    align_daily,
    correlation_significance,
    rolling_correlation,
)

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig",
    "BacktestResult",
    "CorrelationSeries",
    "GridSpec",
    "IndicatorSeries",
    "Kind",
    "PairedReturns",
    "ParseError",
    "PerformanceMetrics",
    "PriceSeries",
    "SharpeSurface",
    "Signal",
    "SignalSeries",
    "StrategySpec",
    "TickSeries",
    "Trade",
    "TrendlabError",
    "WalkForwardReport",
    "align_daily",
    "best_params",
    "compute_metrics",
    "correlation_significance",
    "crossover_signals",
    "dema",
    "ema",
    "grid_search",
    "parse_ohlc_csv",
    "parse_tick_csv",
    "partition_periods",
    "resample",
    "rolling_correlation",
    "run_backtest",
    "slice_series",
    "sma",
    "walk_forward",
]
