"""
Command-line entry point.

    trendlab ingest      --data btc.csv --format ticks --resample 1h --out out/
    trendlab backtest    --data btc.csv --kind sma --short 141 --long 781 --out out/
    trendlab grid        --data spx.csv --format ohlc --grid 1,50,1 --out out/
    trendlab walkforward --data btc.csv --kind sma --out out/
    trendlab correlate   --data btc.csv --other spx.csv --other-format ohlc --out out/

Exit status: 0 on success, 2 for invalid arguments or unusable data, 1 for
anything unexpected.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from trendlab import __version__
from trendlab.analysis import align_daily, correlation_significance, equity_series, rolling_correlation
from trendlab.backtest import BacktestConfig, run_backtest
from trendlab.errors import TrendlabError
from trendlab.indicators import Kind
from trendlab.marketdata import PriceSeries, bars_per_year, load_prices, parse_date, resolution_label, slice_series
from trendlab.metrics import ANNUALIZATIONS, ARITHMETIC, GEOMETRIC, compute_metrics, total_and_annualized_return
from trendlab.optimizer import GridSpec, best_params, grid_search, resolve_threads
from trendlab.strategy import StrategySpec, crossover_signals
from trendlab.walkforward import iso, walk_forward

logger = logging.getLogger("trendlab")


class Run:
    """Collects the manifest for one invocation and writes its outputs."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.started = _now()
        self.out = Path(args.out)
        self.inputs: list[dict] = []
        self.outputs: list[str] = []
        self.parameters: dict = {}

    def add_input(self, path: str) -> None:
        if path == "-":
            self.inputs.append({"path": "-", "sha256": None})
            return
        try:
            digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        except FileNotFoundError:
            raise TrendlabError(f"no data: {path} not found") from None
        self.inputs.append({"path": path, "sha256": digest})

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "argv": sys.argv[1:],
            "input_files": self.inputs,
            "parameters": self.parameters,
            "tool_version": __version__,
            "started": self.started,
            "finished": _now(),
            "outputs": sorted(self.outputs),
        }

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return self.out / name

    def write_json(self, name: str, payload: dict) -> None:
        payload = dict(payload, manifest=self.manifest())
        text = json.dumps(_jsonable(payload), indent=2, allow_nan=False)
        self.path(name).write_text(text + "\n")

    def finish(self) -> None:
        self.outputs.append("manifest.json")
        (self.out / "manifest.json").write_text(json.dumps(_jsonable(self.manifest()), indent=2) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "1", "yes", "on"):
        return True
    if value in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _load(run: Run, path: str, fmt: str, resolution: Optional[str]) -> PriceSeries:
    run.add_input(path)
    prices = load_prices(path, fmt, resolution)
    args = run.args
    if args.date_from or args.date_to:
        lo = parse_date(args.date_from) if args.date_from else prices.start
        hi = parse_date(args.date_to) if args.date_to else prices.end
        prices = slice_series(prices, lo, hi)
    logger.info("%s: %d bars (%d filled) from %s", prices.asset_id, len(prices), prices.n_filled, iso(prices.start))
    return prices


def _config(args) -> BacktestConfig:
    return BacktestConfig(args.initial_cash, args.entry_on_start, args.bars_per_year)


def _annual(args, prices: PriceSeries) -> float:
    return args.bars_per_year or bars_per_year(prices.resolution)


def _grid(args, prices: PriceSeries) -> GridSpec:
    return GridSpec.parse(args.grid) if args.grid else GridSpec.default_for(prices.resolution)


def _base_parameters(args, prices: PriceSeries) -> dict:
    return {
        "asset": prices.asset_id,
        "format": args.format,
        "resolution": resolution_label(prices.resolution),
        "from": iso(prices.start),
        "to": iso(prices.end),
        "bars": len(prices),
        "filled_bars": prices.n_filled,
        "bars_per_year": _annual(args, prices),
    }


def cmd_ingest(args) -> None:
    run = Run("ingest", args)
    prices = _load(run, args.data, args.format, args.resample)
    run.parameters = _base_parameters(args, prices)
    with open(run.path("prices.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "time", "close", "filled"])
        for t, c, f in zip(prices.timestamps, prices.closes, prices.filled):
            w.writerow([int(t), iso(int(t)), repr(float(c)), int(f)])
    run.write_json("ingest.json", {"summary": run.parameters})
    run.finish()


def cmd_backtest(args) -> None:
    run = Run("backtest", args)
    spec = StrategySpec(Kind.parse(args.kind), args.short, args.long)
    prices = _load(run, args.data, args.format, args.resample)
    config = _config(args)
    run.parameters = dict(
        _base_parameters(args, prices),
        kind=spec.kind.value, short=spec.short_window, long=spec.long_window,
        initial_cash=config.initial_cash, entry_on_start=config.entry_on_start,
    )
    signals = crossover_signals(prices, spec, config.entry_on_start)
    result = run_backtest(prices, signals, config)
    annual = _annual(args, prices)
    metrics = compute_metrics(result, annual)
    _, arithmetic = total_and_annualized_return(result.equity, annual, ARITHMETIC)

    with open(run.path("equity.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "time", "close", "equity"])
        for t, c, e in zip(prices.timestamps, prices.closes, result.equity):
            w.writerow([int(t), iso(int(t)), repr(float(c)), repr(float(e))])
    with open(run.path("trades.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "time", "side", "price", "units"])
        for tr in result.trades:
            w.writerow([tr.index, iso(int(prices.timestamps[tr.index])), tr.side.name.lower(),
                        repr(tr.price), repr(tr.units)])
    run.write_json("metrics.json", {
        "metrics": metrics.to_dict(),
        "annualized_variants": {GEOMETRIC: metrics.annualized_return, ARITHMETIC: arithmetic},
        "final_equity": result.final_equity,
    })
    run.finish()


def cmd_grid(args) -> None:
    run = Run("grid", args)
    prices = _load(run, args.data, args.format, args.resample)
    kind = Kind.parse(args.kind)
    grid = _grid(args, prices)
    config = _config(args)
    run.parameters = dict(_base_parameters(args, prices), kind=kind.value, grid=str(grid),
                          initial_cash=config.initial_cash, entry_on_start=config.entry_on_start)
    surface = grid_search(prices, kind, grid, config, threads=args.threads)
    try:
        short, long, best = best_params(surface)
        best_json = {"short": short, "long": long, "metrics": best.to_dict()}
    except TrendlabError as exc:
        best_json = {"short": None, "long": None, "metrics": None, "reason": str(exc)}
    surface.write_csv(run.path("surface.csv"))
    run.write_json("surface.json", {
        "cells": len(surface),
        "best": best_json,
        "sharpe": surface.matrix("sharpe"),
        "sortino": surface.matrix("sortino"),
    })
    run.finish()


def cmd_walkforward(args) -> None:
    run = Run("walkforward", args)
    prices = _load(run, args.data, args.format, args.resample)
    kind = Kind.parse(args.kind)
    grid = _grid(args, prices)
    config = _config(args)
    run.parameters = dict(_base_parameters(args, prices), kind=kind.value, grid=str(grid),
                          period_months=args.period_months, annualization=args.annualization,
                          initial_cash=config.initial_cash, entry_on_start=config.entry_on_start)
    report = walk_forward(prices, kind, grid, config, args.period_months, args.annualization, threads=args.threads)
    report.write_parameter_csv(run.path("parameters.csv"))
    run.write_json("walkforward.json", report.to_dict())
    run.finish()


def _strategy_equity(prices: PriceSeries, kind: Kind, short: int, long: int, config: BacktestConfig) -> PriceSeries:
    spec = StrategySpec(kind, short, long)
    result = run_backtest(prices, crossover_signals(prices, spec, config.entry_on_start), config)
    return equity_series(prices, result)


def cmd_correlate(args) -> None:
    run = Run("correlate", args)
    if args.window < 2:
        raise TrendlabError("window < 2")
    a = _load(run, args.data, args.format, args.resample)
    b = _load(run, args.other, args.other_format, args.other_resample)
    run.parameters = {"a": _base_parameters(args, a), "b": _base_parameters(args, b), "window": args.window}
    bases = {"price": (a, b)}
    strategy_flags = (args.short, args.long, args.other_short, args.other_long)
    if any(v is not None for v in strategy_flags):
        if any(v is None for v in strategy_flags):
            raise TrendlabError("strategy correlation needs --short, --long, --other-short and --other-long")
        kind = Kind.parse(args.kind)
        config = _config(args)
        bases["strategy"] = (
            _strategy_equity(a, kind, args.short, args.long, config),
            _strategy_equity(b, kind, args.other_short, args.other_long, config),
        )
        run.parameters.update(kind=kind.value, short=args.short, long=args.long,
                              other_short=args.other_short, other_long=args.other_long)
    report = {}
    for basis, (x, y) in bases.items():
        pairs = align_daily(x, y)
        rolling = rolling_correlation(pairs, args.window)
        pairs.write_csv(run.path(f"pairs_{basis}.csv"))
        rolling.write_csv(run.path(f"rolling_{basis}.csv"))
        try:
            sig = correlation_significance(pairs).to_dict()
        except TrendlabError as exc:
            sig = {"error": str(exc)}
        report[basis] = {"paired_returns": len(pairs), "significance": sig}
    run.write_json("correlation.json", report)
    run.finish()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", required=True, help="input file, or - for stdin")
    common.add_argument("--format", choices=["ticks", "ohlc"], default="ticks")
    common.add_argument("--resample", choices=["1h", "1d"], default=None,
                        help="bar size (default 1h for ticks, 1d for ohlc)")
    common.add_argument("--from", dest="date_from", metavar="DATE", help="first bar, ISO date (UTC)")
    common.add_argument("--to", dest="date_to", metavar="DATE", help="end of data, exclusive, ISO date (UTC)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for grid search (default $TRENDLAB_THREADS or CPU count)")
    common.add_argument("--initial-cash", type=float, default=10_000.0)
    common.add_argument("--entry-on-start", type=_bool, default=True, metavar="{true,false}")
    common.add_argument("--bars-per-year", type=float, default=None,
                        help="annualization factor (default 8760 hourly, 365 daily)")
    common.add_argument("-v", "--verbose", action="store_true")

    kind = argparse.ArgumentParser(add_help=False)
    kind.add_argument("--kind", choices=[k.value for k in Kind], default="sma")

    parser = argparse.ArgumentParser(prog="trendlab", description=__doc__.split("\n")[1])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="resample and inspect a price file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("backtest", parents=[common, kind], help="backtest one (short, long) pair")
    p.add_argument("--short", type=int, required=True)
    p.add_argument("--long", type=int, required=True)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("grid", parents=[common, kind], help="Sharpe surface over a window grid")
    p.add_argument("--grid", metavar="MIN,MAX,STEP")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("walkforward", parents=[common, kind], help="fit on period Y, trade period Y+1")
    p.add_argument("--grid", metavar="MIN,MAX,STEP")
    p.add_argument("--period-months", type=int, default=12)
    p.add_argument("--annualization", choices=list(ANNUALIZATIONS), default=GEOMETRIC)
    p.set_defaults(func=cmd_walkforward)

    p = sub.add_parser("correlate", parents=[common, kind], help="rolling and full-period daily return correlation")
    p.add_argument("--other", required=True, help="second input file")
    p.add_argument("--other-format", choices=["ticks", "ohlc"], default="ohlc")
    p.add_argument("--other-resample", choices=["1h", "1d"], default=None)
    p.add_argument("--window", type=int, default=20)
    p.add_argument("--short", type=int, help="strategy windows for --data (enables strategy-return correlation)")
    p.add_argument("--long", type=int)
    p.add_argument("--other-short", type=int)
    p.add_argument("--other-long", type=int)
    p.set_defaults(func=cmd_correlate)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads is not None:
            resolve_threads(args.threads)
        args.func(args)
    except TrendlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        logger.debug("unexpected failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
