import csv
import io
import json
from datetime import date, timedelta

import numpy as np
import pytest

from trendlab.cli import main

T0 = 1315958400


def write_ticks(path, hours, seed=0, start=T0):
    rng = np.random.default_rng(seed)
    price = 5.0
    lines = []
    for h in range(hours):
        for k in range(2):
            price *= float(np.exp(rng.normal(0.0002, 0.005)))
            lines.append(f"{start + h * 3600 + 600 + 1200 * k},{price:.6f},{rng.uniform(0.1, 3):.4f}")
        if h % 97 == 5:
            lines.pop()
            lines.pop()  # an empty hour, forward-filled
    path.write_text("\n".join(lines) + "\n")
    return path


def write_ohlc(path, days, seed=1, start=date(2012, 1, 2)):
    rng = np.random.default_rng(seed)
    close = 1300.0
    rows = ["Date,Open,High,Low,Close,Adj Close,Volume"]
    for i in range(days):
        d = start + timedelta(days=i)
        if d.weekday() >= 5:
            continue
        close *= float(np.exp(rng.normal(0.0003, 0.01)))
        rows.append(f"{d.isoformat()},{close},{close},{close},{close:.4f},{close:.4f},1000")
    path.write_text("\n".join(rows) + "\n")
    return path


@pytest.fixture
def ticks(tmp_path):
    return write_ticks(tmp_path / "btc.csv", 1200)


@pytest.fixture
def ohlc(tmp_path):
    return write_ohlc(tmp_path / "spx.csv", 200)


def read_json(path):
    return json.loads(path.read_text())


def test_backtest_outputs(ticks, tmp_path):
    out = tmp_path / "out"
    assert main(["backtest", "--data", str(ticks), "--kind", "sma", "--short", "14", "--long", "78", "--out", str(out)]) == 0
    report = read_json(out / "metrics.json")
    assert set(report["metrics"]) >= {"sharpe", "sortino", "max_drawdown", "exposure", "total_return", "n_trades"}
    assert report["manifest"]["parameters"]["short"] == 14
    assert report["manifest"]["input_files"][0]["sha256"]
    with open(out / "equity.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == report["manifest"]["parameters"]["bars"]
    assert (out / "trades.csv").exists() and (out / "manifest.json").exists()


def test_missing_file_exit_2(tmp_path, capsys):
    assert main(["backtest", "--data", str(tmp_path / "none.csv"), "--short", "1", "--long", "2", "--out", str(tmp_path)]) == 2
    assert "no data" in capsys.readouterr().err


def test_short_not_below_long(ticks, tmp_path, capsys):
    assert main(["backtest", "--data", str(ticks), "--short", "100", "--long", "50", "--out", str(tmp_path)]) == 2
    assert "short must be < long" in capsys.readouterr().err


def test_parse_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1315958400,5.0,1\n1315962000,-3,1\n")
    assert main(["ingest", "--data", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_grid_on_hourly(ticks, tmp_path):
    out = tmp_path / "g"
    assert main(["grid", "--data", str(ticks), "--grid", "1,991,10", "--out", str(out), "--threads", "2"]) == 0
    with open(out / "surface.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4950
    assert list(rows[0]) == ["kind", "short", "long", "sharpe", "sortino", "max_drawdown", "exposure", "total_return", "n_trades"]
    surface = read_json(out / "surface.json")
    assert surface["cells"] == 4950 and len(surface["sharpe"]["values"]) == 100


def test_grid_defaults_on_daily(ohlc, tmp_path):
    out = tmp_path / "g"
    assert main(["grid", "--data", str(ohlc), "--format", "ohlc", "--out", str(out)]) == 0
    surface = read_json(out / "surface.json")
    assert surface["cells"] == 1225
    assert surface["manifest"]["parameters"]["grid"] == "1,50,1"


def test_outputs_are_reproducible(ohlc, tmp_path):
    for name in ("a", "b"):
        assert main(["grid", "--data", str(ohlc), "--format", "ohlc", "--grid", "1,20,2", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "surface.csv").read_bytes() == (tmp_path / "b" / "surface.csv").read_bytes()
    a, b = read_json(tmp_path / "a" / "surface.json"), read_json(tmp_path / "b" / "surface.json")
    a.pop("manifest"), b.pop("manifest")
    assert a == b


def test_walkforward(tmp_path):
    data = write_ohlc(tmp_path / "spx.csv", 3 * 365 + 10)
    out = tmp_path / "wf"
    argv = ["walkforward", "--data", str(data), "--format", "ohlc", "--grid", "1,20,1", "--out", str(out)]
    assert main(argv + ["--annualization", "arithmetic"]) == 0
    report = read_json(out / "walkforward.json")
    assert report["annualization"] == "arithmetic"
    assert report["combined_annualized_return"] == report["annualized_variants"]["arithmetic"]
    assert len(report["periods"]) == 2
    assert (out / "parameters.csv").read_text().startswith("train_start,test_start,short,long")


def test_walkforward_insufficient_history(tmp_path, capsys):
    data = write_ohlc(tmp_path / "spx.csv", 548)
    assert main(["walkforward", "--data", str(data), "--format", "ohlc", "--out", str(tmp_path / "wf")]) == 2
    assert "insufficient history" in capsys.readouterr().err


def test_correlate_identical(ohlc, tmp_path):
    out = tmp_path / "c"
    assert main(["correlate", "--data", str(ohlc), "--format", "ohlc", "--other", str(ohlc), "--out", str(out)]) == 0
    with open(out / "rolling_price.csv") as fh:
        vals = [r["correlation"] for r in csv.DictReader(fh)]
    assert all(v == "" for v in vals[:19])
    assert all(abs(float(v) - 1.0) < 1e-12 for v in vals[19:])
    report = read_json(out / "correlation.json")
    assert report["price"]["significance"]["p_value"] == 0.0


def test_correlate_btc_vs_spx_with_strategies(tmp_path):
    btc = write_ticks(tmp_path / "btc.csv", 24 * 120, start=1325462400)
    spx = write_ohlc(tmp_path / "spx.csv", 120)
    out = tmp_path / "c"
    argv = ["correlate", "--data", str(btc), "--other", str(spx), "--out", str(out), "--window", "20",
            "--short", "24", "--long", "96", "--other-short", "3", "--other-long", "10"]
    assert main(argv) == 0
    report = read_json(out / "correlation.json")
    assert set(report) == {"price", "strategy", "manifest"}
    assert report["price"]["paired_returns"] > 60
    assert (out / "rolling_strategy.csv").exists() and (out / "pairs_price.csv").exists()


def test_correlate_window_one(ohlc, tmp_path, capsys):
    argv = ["correlate", "--data", str(ohlc), "--format", "ohlc", "--other", str(ohlc), "--window", "1", "--out", str(tmp_path)]
    assert main(argv) == 2
    assert "window < 2" in capsys.readouterr().err


def test_ingest_from_stdin(ticks, tmp_path, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.TextIOWrapper(io.BytesIO(ticks.read_bytes())))
    out = tmp_path / "i"
    assert main(["ingest", "--data", "-", "--out", str(out), "--from", "2011-09-15", "--to", "2011-09-20"]) == 0
    summary = read_json(out / "ingest.json")["summary"]
    assert summary["bars"] == 5 * 24
    assert summary["filled_bars"] >= 1


def test_entry_on_start_flag(ticks, tmp_path):
    for flag in ("true", "false"):
        out = tmp_path / flag
        argv = ["backtest", "--data", str(ticks), "--short", "5", "--long", "40", "--entry-on-start", flag, "--out", str(out)]
        assert main(argv) == 0
        assert read_json(out / "metrics.json")["manifest"]["parameters"]["entry_on_start"] is (flag == "true")


def test_threads_env(ohlc, tmp_path, monkeypatch):
    monkeypatch.setenv("TRENDLAB_THREADS", "nope")
    assert main(["grid", "--data", str(ohlc), "--format", "ohlc", "--grid", "1,5,1", "--out", str(tmp_path)]) == 2
