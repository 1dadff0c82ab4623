"""Cross-asset diversification: daily return pairing, rolling and full-period correlation."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from trendlab.backtest import BacktestResult
from trendlab.errors import TrendlabError
from trendlab.marketdata import DAY, PriceSeries

BETACF_TOL = 1e-15
BETACF_MAX_ITER = 10_000


@dataclass(frozen=True)
class PairedReturns:
    """Simple daily returns of two series over their common observed days.

    ``days[i]`` is the UTC midnight of the day closing return ``i``.
    """

    days: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __len__(self) -> int:
        return int(self.a.size)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "return_a", "return_b"])
            for d, x, y in zip(self.days, self.a, self.b):
                w.writerow([_day_iso(d), repr(float(x)), repr(float(y))])


@dataclass(frozen=True)
class CorrelationSeries:
    window: int
    days: np.ndarray
    values: np.ndarray  # NaN where undefined

    def to_list(self) -> list[Optional[float]]:
        return [None if np.isnan(v) else float(v) for v in self.values]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "correlation"])
            for d, v in zip(self.days, self.values):
                w.writerow([_day_iso(d), "" if np.isnan(v) else repr(float(v))])


def _day_iso(day_ts) -> str:
    return str(np.datetime64(int(day_ts), "s").astype("datetime64[D]"))


def equity_series(prices: PriceSeries, result: BacktestResult, asset_id: str | None = None) -> PriceSeries:
    """Wrap a strategy equity curve on the price grid so it can be paired like a price."""
    equity = np.asarray(result.equity)
    # a filled price bar only repeats its equity value when flat or when the price repeats
    return PriceSeries(
        asset_id or f"{prices.asset_id}-equity",
        prices.resolution,
        prices.timestamps,
        equity,
        prices.filled & np.append(False, equity[1:] == equity[:-1]),
    )


def _daily_closes(series: PriceSeries) -> tuple[np.ndarray, np.ndarray]:
    """Last close of each UTC day that has at least one observed (non-filled) bar."""
    if series.resolution > DAY or DAY % series.resolution:
        raise TrendlabError("series resolution must divide one day")
    day = series.timestamps // DAY
    last = np.flatnonzero(np.append(np.diff(day) != 0, True))
    observed_days = np.unique(day[~series.filled])
    keep = np.isin(day[last], observed_days)
    return day[last][keep] * DAY, series.closes[last][keep]


def align_daily(a: PriceSeries, b: PriceSeries) -> PairedReturns:
    """Pair daily returns of two series on the days both were actually observed.

    Intraday series are reduced to their last bar per UTC day. Days that
    are only forward-filled (weekends, holidays, illiquid days) are excluded,
    so returns span from one common observed day to the next.
    """
    days_a, close_a = _daily_closes(a)
    days_b, close_b = _daily_closes(b)
    common, ia, ib = np.intersect1d(days_a, days_b, assume_unique=True, return_indices=True)
    if common.size == 0:
        raise TrendlabError("series have no days in common")
    if common.size < 2:
        raise TrendlabError("need at least two common days to form a return")
    ra = close_a[ia][1:] / close_a[ia][:-1] - 1.0
    rb = close_b[ib][1:] / close_b[ib][:-1] - 1.0
    return PairedReturns(common[1:], ra, rb)


def pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        return None
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def rolling_correlation(pairs: PairedReturns, window: int = 20) -> CorrelationSeries:
    if window < 2:
        raise TrendlabError("window < 2")
    n = len(pairs)
    if window > n:
        raise TrendlabError(f"window {window} exceeds {n} paired returns")
    values = np.full(n, np.nan)
    for end in range(window, n + 1):
        r = pearson(pairs.a[end - window : end], pairs.b[end - window : end])
        if r is not None:
            values[end - 1] = r
    return CorrelationSeries(window, pairs.days, values)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETACF_TOL:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_pvalue(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class Significance:
    r: float
    t_statistic: float
    p_value: float
    n: int

    def to_dict(self) -> dict:
        t = self.t_statistic
        return {"r": self.r, "t_statistic": t if math.isfinite(t) else ("inf" if t > 0 else "-inf"),
                "p_value": self.p_value, "n": self.n}


def correlation_significance(pairs: PairedReturns) -> Significance:
    """Full-period Pearson r with a two-sided t-test on n-2 degrees of freedom."""
    n = len(pairs)
    if n < 3:
        raise TrendlabError("need at least 3 paired returns")
    r = pearson(pairs.a, pairs.b)
    if r is None:
        raise TrendlabError("degenerate series")
    df = n - 2
    if abs(r) == 1.0:
        t = math.copysign(math.inf, r)
    else:
        t = r * math.sqrt(df / (1.0 - r * r))
    return Significance(r, t, t_two_sided_pvalue(t, df), n)
