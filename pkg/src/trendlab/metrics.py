"""
Performance statistics computed from an equity curve.

Ratios use a zero risk-free rate. Sharpe uses the sample (n-1) standard
deviation; Sortino divides by the root-mean-square of the negative returns
taken over all n returns. Undefined ratios are ``None``, never 0.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from trendlab.backtest import BacktestResult
from trendlab.errors import TrendlabError

GEOMETRIC = "geometric"
ARITHMETIC = "arithmetic"
ANNUALIZATIONS = (GEOMETRIC, ARITHMETIC)


@dataclass(frozen=True)
class PerformanceMetrics:
    sharpe: Optional[float]
    sortino: Optional[float]
    max_drawdown: float
    exposure: float
    total_return: float
    annualized_return: float
    n_trades: int

    def to_dict(self) -> dict:
        return asdict(self)


def per_bar_returns(equity: np.ndarray) -> np.ndarray:
    equity = np.asarray(equity, dtype=np.float64)
    if equity.size < 2:
        raise TrendlabError("insufficient data")
    return equity[1:] / equity[:-1] - 1.0


def sharpe_ratio(returns: np.ndarray, bars_per_year: float) -> Optional[float]:
    r = np.asarray(returns, dtype=np.float64)
    if r.size < 2:
        return None
    sd = r.std(ddof=1)
    if sd == 0 or not np.isfinite(sd):
        return None
    return float(r.mean() / sd * math.sqrt(bars_per_year))


def sortino_ratio(returns: np.ndarray, bars_per_year: float) -> Optional[float]:
    r = np.asarray(returns, dtype=np.float64)
    if r.size == 0:
        return None
    downside = np.minimum(r, 0.0)
    dd = math.sqrt(float(np.dot(downside, downside)) / r.size)
    if dd == 0:
        return None
    return float(r.mean() / dd * math.sqrt(bars_per_year))


def max_drawdown(equity: np.ndarray) -> float:
    """Largest peak-to-trough decline as a fraction of the running peak."""
    equity = np.asarray(equity, dtype=np.float64)
    if equity.size == 0:
        raise TrendlabError("insufficient data")
    peak = np.maximum.accumulate(equity)
    return float(np.max((peak - equity) / peak))


def exposure(result: BacktestResult) -> float:
    n = result.equity.size
    return result.bars_in_market / n if n else 0.0


def total_and_annualized_return(
    equity: np.ndarray, bars_per_year: float, method: str = GEOMETRIC
) -> tuple[float, float]:
    """Total return and its annualized rate.

    ``geometric`` compounds the total over the elapsed years;
    ``arithmetic`` scales the mean per-bar return by ``bars_per_year``.
    """
    equity = np.asarray(equity, dtype=np.float64)
    if equity.size < 2:
        raise TrendlabError("insufficient data")
    total = float(equity[-1] / equity[0] - 1.0)
    if method == GEOMETRIC:
        try:
            annualized = (1.0 + total) ** (bars_per_year / (equity.size - 1)) - 1.0
        except OverflowError:
            annualized = math.inf
    elif method == ARITHMETIC:
        annualized = float(per_bar_returns(equity).mean() * bars_per_year)
    else:
        raise TrendlabError(f"unknown annualization {method!r}")
    return total, float(annualized)


def compute_metrics(result: BacktestResult, bars_per_year: float) -> PerformanceMetrics:
    returns = per_bar_returns(result.equity)
    traded = result.n_trades > 0
    total, annualized = total_and_annualized_return(result.equity, bars_per_year)
    return PerformanceMetrics(
        sharpe=sharpe_ratio(returns, bars_per_year) if traded else None,
        sortino=sortino_ratio(returns, bars_per_year) if traded else None,
        max_drawdown=max_drawdown(result.equity),
        exposure=exposure(result),
        total_return=total,
        annualized_return=annualized,
        n_trades=result.n_trades,
    )
