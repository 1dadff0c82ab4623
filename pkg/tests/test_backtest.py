import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trendlab.backtest import BacktestConfig, run_backtest
from trendlab.errors import TrendlabError
from trendlab.strategy import Signal, SignalSeries

from conftest import make_series
from oracles import ledger, round_trip_product

B, S, H = 1, -1, 0


def run(closes, sigs, **cfg):
    return run_backtest(make_series(closes), SignalSeries(np.array(sigs, np.int8), 0), BacktestConfig(**cfg))


def test_round_trip_doubles():
    res = run([10, 10, 20, 20], [B, H, S, H])
    assert res.equity.tolist() == [10000, 10000, 20000, 20000]
    assert res.trades[0].units == 1000 and res.trades[0].side is Signal.BUY
    assert res.trades[1].side is Signal.SELL and res.trades[1].index == 2
    assert res.bars_in_market == 2


def test_all_hold_is_flat():
    res = run([10, 11, 9, 12], [H] * 4)
    assert res.equity.tolist() == [10000.0] * 4
    assert res.n_trades == 0


def test_loss_realized():
    assert run([10, 5], [B, S]).equity.tolist() == [10000, 5000]


def test_redundant_signals_are_noops():
    res = run([10, 12, 15, 10, 8], [S, B, B, S, S])
    assert [t.index for t in res.trades] == [1, 3]
    assert res.equity.tolist() == pytest.approx([10000, 10000, 12500, 10000 * 10 / 12, 10000 * 10 / 12])


def test_open_position_marked_to_market():
    res = run([10, 30], [B, H])
    assert res.final_equity == 30000
    assert res.bars_in_market == 2


def test_misaligned():
    with pytest.raises(TrendlabError):
        run_backtest(make_series([1, 2, 3]), SignalSeries(np.zeros(2, np.int8), 0))


def test_config_validation():
    with pytest.raises(TrendlabError):
        BacktestConfig(initial_cash=0)


def test_custom_cash():
    assert run([4, 8], [B, H], initial_cash=1.0).equity.tolist() == [1.0, 2.0]


fixtures = st.lists(
    st.tuples(st.floats(0.5, 2000.0), st.sampled_from([B, S, H, H])), min_size=1, max_size=200
)


@settings(max_examples=300, deadline=None)
@given(fixtures)
def test_matches_ledger_oracle(rows):
    closes = [r[0] for r in rows]
    sigs = [r[1] for r in rows]
    res = run(closes, sigs)
    equity, trades = ledger(closes, sigs)
    np.testing.assert_allclose(res.equity, equity, rtol=1e-12)
    assert [(t.index, int(t.side)) for t in res.trades] == [(i, s) for i, s, _ in trades]
    assert res.final_equity == pytest.approx(round_trip_product(closes, trades), rel=1e-9)
    assert np.all(res.equity > 0)
    sides = [int(t.side) for t in res.trades]
    assert sides == [B, S] * (len(sides) // 2) + [B] * (len(sides) % 2)


@settings(max_examples=200, deadline=None)
@given(fixtures, st.sampled_from([1e-3, 7.0, 1e4]))
def test_scaling_invariant(rows, c):
    closes = np.array([r[0] for r in rows])
    sigs = [r[1] for r in rows]
    np.testing.assert_allclose(run(closes * c, sigs).equity, run(closes, sigs).equity, rtol=1e-9)
