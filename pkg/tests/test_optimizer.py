import json

import numpy as np
import pytest

from trendlab.backtest import BacktestConfig, run_backtest
from trendlab.errors import TrendlabError
from trendlab.indicators import Kind
from trendlab.marketdata import DAY, HOUR
from trendlab.metrics import PerformanceMetrics, compute_metrics
from trendlab.optimizer import GridSpec, SharpeSurface, best_params, grid_search, resolve_threads
from trendlab.strategy import StrategySpec, crossover_signals

from conftest import make_series
from oracles import square_wave


def _metrics(sharpe):
    return PerformanceMetrics(sharpe, None, 0.0, 0.0, 0.0, 0.0, 1 if sharpe is not None else 0)


def _surface(cells):
    return SharpeSurface(Kind.SMA, GridSpec(1, 10), {k: _metrics(v) for k, v in cells.items()}, (0, 1))


def brute_force(prices, kind, grid, config=BacktestConfig()):
    out = {}
    for s, l in grid.pairs(max_len=len(prices)):
        sig = crossover_signals(prices, StrategySpec(kind, s, l), config.entry_on_start)
        out[(s, l)] = compute_metrics(run_backtest(prices, sig, config), 8760.0)
    return out


def test_pair_enumeration():
    surface = grid_search(make_series(np.linspace(1, 2, 20)), "sma", GridSpec(1, 3, 1))
    assert sorted(surface.cells) == [(1, 2), (1, 3), (2, 3)]


def test_long_windows_beyond_data_are_omitted():
    surface = grid_search(make_series(np.linspace(1, 2, 5)), "sma", GridSpec(1, 10, 1))
    assert max(l for _, l in surface.cells) == 5


def test_empty_grid():
    with pytest.raises(TrendlabError, match="empty grid"):
        grid_search(make_series([1.0, 2.0]), "sma", GridSpec(5, 9, 1))


@pytest.mark.parametrize("kind", list(Kind))
def test_constant_series(kind):
    surface = grid_search(make_series([50.0] * 60), kind, GridSpec(1, 20, 3))
    assert all(m.sharpe is None and m.n_trades == 0 for m in surface.cells.values())
    with pytest.raises(TrendlabError, match="no tradeable parameters"):
        best_params(surface)


@pytest.mark.parametrize("kind", list(Kind))
def test_square_wave_matches_brute_force(kind):
    prices = make_series(square_wave(600, 40, noise=0.002, seed=4))
    grid = GridSpec(1, 30, 1)
    surface = grid_search(prices, kind, grid, threads=2)
    assert surface.cells == brute_force(prices, kind, grid)
    short, long, m = best_params(surface)
    defined = {k: v.sharpe for k, v in surface.cells.items() if v.sharpe is not None}
    assert m.sharpe == max(defined.values())
    assert (short, long) == min((k for k, v in defined.items() if v == m.sharpe), key=lambda p: (p[1], p[0]))


def test_best_params_singleton_and_ties():
    assert best_params(_surface({(1, 2): 0.5, (1, 3): None}))[:2] == (1, 2)
    assert best_params(_surface({(2, 5): 1.0, (3, 4): 1.0, (1, 4): 1.0}))[:2] == (1, 4)
    assert best_params(_surface({(1, 9): 2.0, (1, 2): -1.0}))[:2] == (1, 9)


def test_deterministic_across_thread_counts():
    rng = np.random.default_rng(11)
    prices = make_series(100 * np.exp(np.cumsum(rng.normal(0, 0.01, 800))))
    grid = GridSpec(1, 60, 4)
    runs = [grid_search(prices, "ema", grid, threads=t) for t in (1, 3, 8)]
    assert runs[0].cells == runs[1].cells == runs[2].cells
    assert list(runs[0].cells) == list(runs[2].cells)


def test_scaled_surface_identical_argmax():
    rng = np.random.default_rng(5)
    prices = make_series(100 * np.exp(np.cumsum(rng.normal(0, 0.01, 500))))
    grid = GridSpec(1, 40, 3)
    base = grid_search(prices, "sma", grid)
    for c in (1e-3, 7.0, 1e4):
        scaled = grid_search(prices.scaled(c), "sma", grid)
        assert best_params(scaled)[:2] == best_params(base)[:2]
        for k, m in base.cells.items():
            assert scaled.cells[k].n_trades == m.n_trades
            if m.sharpe is not None:
                assert scaled.cells[k].sharpe == pytest.approx(m.sharpe, rel=1e-9)


def test_exports(tmp_path):
    prices = make_series(square_wave(200, 20, noise=0.01))
    surface = grid_search(prices, "sma", GridSpec(1, 7, 3))
    surface.write_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "kind,short,long,sharpe,sortino,max_drawdown,exposure,total_return,n_trades"
    assert len(lines) == 1 + 3
    mat = surface.matrix()
    assert mat["windows"] == [1, 4, 7]
    assert mat["values"][1][0] is None and mat["values"][0][2] == surface.cells[(1, 7)].sharpe
    json.dumps(mat)


def test_grid_defaults_and_parse():
    assert GridSpec.default_for(HOUR) == GridSpec(1, 991, 10)
    assert GridSpec.default_for(DAY) == GridSpec(1, 50, 1)
    assert len(GridSpec(1, 991, 10).pairs()) == 4950
    assert len(GridSpec(1, 50, 1).pairs()) == 1225
    assert GridSpec.parse("1,50,1") == GridSpec(1, 50, 1)
    with pytest.raises(TrendlabError):
        GridSpec.parse("1,50")
    with pytest.raises(TrendlabError):
        GridSpec(0, 5, 1)


def test_thread_resolution(monkeypatch):
    monkeypatch.setenv("TRENDLAB_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads(5) == 5
    with pytest.raises(TrendlabError):
        resolve_threads(0)
