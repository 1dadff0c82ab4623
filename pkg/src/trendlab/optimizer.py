"""
Exhaustive (short, long) window search.

Each window's average is computed once and shared by every pair that uses
it, so a grid costs O(windows * bars) for indicators plus one signal pass and
one backtest per pair. Pairs are evaluated on a thread pool; the compiled
kernels release the GIL.
"""
from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from trendlab.backtest import BacktestConfig, run_backtest
from trendlab.errors import TrendlabError
from trendlab.indicators import IndicatorSeries, Kind, compute
from trendlab.marketdata import DAY, PriceSeries, bars_per_year
from trendlab.metrics import PerformanceMetrics, compute_metrics
from trendlab.strategy import signals_from_indicators

logger = logging.getLogger(__name__)

THREADS_ENV = "TRENDLAB_THREADS"
SURFACE_COLUMNS = ["kind", "short", "long", "sharpe", "sortino", "max_drawdown", "exposure", "total_return", "n_trades"]


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise TrendlabError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise TrendlabError("threads must be >= 1")
    return threads


@dataclass(frozen=True)
class GridSpec:
    min_window: int
    max_window: int
    step: int = 1

    def __post_init__(self):
        if self.min_window < 1 or self.step < 1 or self.max_window < self.min_window:
            raise TrendlabError(f"invalid grid {self.min_window},{self.max_window},{self.step}")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        try:
            lo, hi, step = (int(p) for p in text.split(","))
        except ValueError:
            raise TrendlabError(f"grid must be 'min,max,step', got {text!r}") from None
        return cls(lo, hi, step)

    @classmethod
    def default_for(cls, resolution: int) -> "GridSpec":
        if resolution >= DAY:
            return cls(1, 50, 1)
        return cls(1, 991, 10)

    def windows(self) -> list[int]:
        return list(range(self.min_window, self.max_window + 1, self.step))

    def pairs(self, max_len: Optional[int] = None) -> list[tuple[int, int]]:
        w = [x for x in self.windows() if max_len is None or x <= max_len]
        return [(s, l) for s in w for l in w if s < l]

    def __str__(self) -> str:
        return f"{self.min_window},{self.max_window},{self.step}"


@dataclass(frozen=True)
class SharpeSurface:
    kind: Kind
    grid: GridSpec
    cells: dict[tuple[int, int], PerformanceMetrics]
    slice_bounds: tuple[int, int]

    def __len__(self) -> int:
        return len(self.cells)

    def rows(self) -> Iterable[list]:
        for (s, l), m in self.cells.items():
            yield [self.kind.value, s, l, m.sharpe, m.sortino, m.max_drawdown, m.exposure, m.total_return, m.n_trades]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SURFACE_COLUMNS)
            for row in self.rows():
                w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])

    def matrix(self, metric: str = "sharpe") -> dict:
        """Dense short-by-long matrix for heat-map rendering; invalid cells are None."""
        windows = self.grid.windows()
        pos = {w: i for i, w in enumerate(windows)}
        values: list[list[Optional[float]]] = [[None] * len(windows) for _ in windows]
        for (s, l), m in self.cells.items():
            values[pos[s]][pos[l]] = getattr(m, metric)
        return {
            "kind": self.kind.value,
            "metric": metric,
            "grid": str(self.grid),
            "rows": "short",
            "columns": "long",
            "windows": windows,
            "values": values,
        }


def evaluate_pair(
    prices: PriceSeries,
    short: IndicatorSeries,
    long: IndicatorSeries,
    config: BacktestConfig,
    annual: float,
) -> PerformanceMetrics:
    signals = signals_from_indicators(short, long, config.entry_on_start)
    return compute_metrics(run_backtest(prices, signals, config), annual)


def grid_search(
    prices: PriceSeries,
    kind: Kind | str,
    grid: GridSpec,
    config: BacktestConfig = BacktestConfig(),
    threads: Optional[int] = None,
) -> SharpeSurface:
    """Backtest every valid (short, long) pair on ``prices``.

    Pairs whose long window exceeds the series are left out of the surface.
    Output does not depend on thread count or scheduling.
    """
    kind = Kind.parse(kind)
    pairs = grid.pairs(max_len=len(prices))
    if not pairs:
        raise TrendlabError("empty grid")
    annual = config.bars_per_year or bars_per_year(prices.resolution)
    used = sorted({w for pair in pairs for w in pair})
    cache = {w: compute(kind, prices, w) for w in used}

    def work(chunk: list[tuple[int, int]]) -> list[PerformanceMetrics]:
        return [evaluate_pair(prices, cache[s], cache[l], config, annual) for s, l in chunk]

    n_threads = min(resolve_threads(threads), len(pairs))
    size = max(1, -(-len(pairs) // (n_threads * 8)))
    chunks = [pairs[i : i + size] for i in range(0, len(pairs), size)]
    if n_threads == 1:
        results = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(work, chunks))
    cells = {}
    for chunk, metrics in zip(chunks, results):
        cells.update(zip(chunk, metrics))
    logger.debug("grid %s %s: %d cells on %d bars", kind.value, grid, len(cells), len(prices))
    return SharpeSurface(kind, grid, cells, (prices.start, prices.end))


def best_params(surface: SharpeSurface) -> tuple[int, int, PerformanceMetrics]:
    """Cell with the highest Sharpe; ties go to the smaller long, then smaller short."""
    best = None
    for (s, l) in sorted(surface.cells, key=lambda p: (p[1], p[0])):
        m = surface.cells[(s, l)]
        if m.sharpe is None:
            continue
        if best is None or m.sharpe > best[2].sharpe:
            best = (s, l, m)
    if best is None:
        raise TrendlabError("no tradeable parameters")
    return best
