"""
Price data ingestion.

Raw trade prints (bitcoincharts ``unix_seconds,price,volume`` exports) and
Yahoo! Finance daily OHLC downloads are turned into ``PriceSeries``: closing
prices on a uniform UTC grid with gaps forward-filled and flagged.
"""
from __future__ import annotations

import csv
import io
import logging
import sys
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np
import pandas as pd

from trendlab.errors import ParseError, TrendlabError

logger = logging.getLogger(__name__)

HOUR = 3600
DAY = 86400
RESOLUTIONS = {"1h": HOUR, "1d": DAY}

OHLC_HEADER = ["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"]

Source = Union[bytes, str, Path, BinaryIO]


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def parse_resolution(text: str) -> int:
    try:
        return RESOLUTIONS[text]
    except KeyError:
        raise TrendlabError(f"unknown resolution {text!r}, expected one of {sorted(RESOLUTIONS)}") from None


def resolution_label(seconds: int) -> str:
    for label, value in RESOLUTIONS.items():
        if value == seconds:
            return label
    return f"{seconds}s"


def bars_per_year(resolution: int) -> float:
    """Annualization factor for a uniform calendar grid (weekends included)."""
    if resolution == HOUR:
        return 8760.0
    if resolution == DAY:
        return 365.0
    return 365.0 * DAY / resolution


@dataclass(frozen=True)
class TickSeries:
    timestamps: np.ndarray
    prices: np.ndarray
    volumes: np.ndarray

    def __post_init__(self):
        ts = _frozen(self.timestamps, np.int64)
        px = _frozen(self.prices, np.float64)
        vol = _frozen(self.volumes, np.float64)
        if not (ts.shape == px.shape == vol.shape) or ts.ndim != 1:
            raise TrendlabError("tick columns must be 1-d and equally long")
        if ts.size and np.any(np.diff(ts) < 0):
            raise TrendlabError("tick timestamps must be non-decreasing")
        if np.any(~(px > 0)):
            raise TrendlabError("tick prices must be strictly positive")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)
        object.__setattr__(self, "volumes", vol)

    def __len__(self) -> int:
        return int(self.timestamps.size)

    @classmethod
    def empty(cls) -> "TickSeries":
        return cls(np.empty(0, np.int64), np.empty(0), np.empty(0))


@dataclass(frozen=True)
class PriceSeries:
    """Closing prices on a uniform grid of ``resolution`` seconds.

    ``filled[i]`` marks bars that had no observation of their own and carry
    the previous close. After slicing, the first bar may be flagged filled;
    its close was carried from before the slice.
    """

    asset_id: str
    resolution: int
    timestamps: np.ndarray
    closes: np.ndarray
    filled: np.ndarray

    def __post_init__(self):
        ts = _frozen(self.timestamps, np.int64)
        closes = _frozen(self.closes, np.float64)
        filled = _frozen(self.filled, bool)
        if not (ts.shape == closes.shape == filled.shape) or ts.ndim != 1:
            raise TrendlabError("price columns must be 1-d and equally long")
        if self.resolution <= 0:
            raise TrendlabError("resolution must be positive")
        if ts.size == 0:
            raise TrendlabError("no data")
        if np.any(np.diff(ts) != self.resolution):
            raise TrendlabError("bar timestamps are not on a uniform grid")
        if np.any(~(closes > 0)):
            raise TrendlabError("close prices must be strictly positive")
        if np.any(closes[1:][filled[1:]] != closes[:-1][filled[1:]]):
            raise TrendlabError("filled bar differs from previous close")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "closes", closes)
        object.__setattr__(self, "filled", filled)

    def __len__(self) -> int:
        return int(self.closes.size)

    @property
    def start(self) -> int:
        return int(self.timestamps[0])

    @property
    def end(self) -> int:
        """Exclusive end of the last bar."""
        return int(self.timestamps[-1]) + self.resolution

    @property
    def n_filled(self) -> int:
        return int(self.filled.sum())

    def scaled(self, factor: float) -> "PriceSeries":
        return PriceSeries(self.asset_id, self.resolution, self.timestamps, self.closes * factor, self.filled)

    def with_closes(self, closes: np.ndarray) -> "PriceSeries":
        return PriceSeries(self.asset_id, self.resolution, self.timestamps, closes, self.filled)

    def to_ticks(self) -> TickSeries:
        """Observed (non-filled) bars as one tick each, stamped at bar start."""
        keep = ~self.filled
        return TickSeries(self.timestamps[keep], self.closes[keep], np.zeros(int(keep.sum())))


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, Path)):
        if str(source) == "-":
            return sys.stdin.buffer.read()
        try:
            return Path(source).read_bytes()
        except FileNotFoundError:
            raise TrendlabError(f"no data: {source} not found") from None
    return source.read()


def _scan_tick_errors(text: str) -> None:
    """Slow line-by-line pass, only used to locate the first bad row."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", lineno)
        try:
            ts, price, _ = (float(f) for f in fields)
        except ValueError:
            raise ParseError(f"non-numeric field in {line.strip()!r}", lineno) from None
        if not np.isfinite(ts) or ts != int(ts):
            raise ParseError(f"bad timestamp {fields[0]!r}", lineno)
        if not price > 0:
            raise ParseError(f"price must be positive, got {fields[1].strip()}", lineno)


def parse_tick_csv(source: Source) -> TickSeries:
    """Parse a headerless ``unix_seconds,price,volume`` trade file.

    Rows are stably sorted by timestamp. A malformed row raises
    ``ParseError`` carrying its 1-based line number.
    """
    raw = _read_bytes(source)
    text = raw.decode("utf-8", errors="strict")
    if not text.strip():
        return TickSeries.empty()
    try:
        df = pd.read_csv(
            io.StringIO(text),
            header=None,
            names=["ts", "price", "volume"],
            dtype="float64",
            skip_blank_lines=True,
        )
    except (ValueError, pd.errors.ParserError):
        _scan_tick_errors(text)
        raise ParseError("unreadable tick file") from None
    ts = df["ts"].to_numpy()
    price = df["price"].to_numpy()
    if df.isna().any().any() or np.any(ts != np.floor(ts)) or np.any(~(price > 0)):
        _scan_tick_errors(text)
        raise ParseError("malformed tick rows")
    ts = ts.astype(np.int64)
    order = np.argsort(ts, kind="stable")
    if np.any(order != np.arange(order.size)):
        logger.info("tick input out of order, sorting %d rows", order.size)
    return TickSeries(ts[order], price[order], df["volume"].to_numpy()[order])


def _iso_day(text: str, lineno: int) -> int:
    try:
        d = date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"unparseable date {text!r}", lineno) from None
    return int(datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp())


def _fill_grid(asset_id: str, resolution: int, bar_ts: np.ndarray, closes: np.ndarray) -> PriceSeries:
    """Place observations (sorted, unique bar timestamps) on a full grid and forward-fill."""
    first = bar_ts[0]
    slot = (bar_ts - first) // resolution
    n = int(slot[-1]) + 1
    observed = np.zeros(n, dtype=bool)
    observed[slot] = True
    values = np.empty(n)
    values[slot] = closes
    src = np.where(observed, np.arange(n), 0)
    np.maximum.accumulate(src, out=src)
    timestamps = first + resolution * np.arange(n, dtype=np.int64)
    return PriceSeries(asset_id, resolution, timestamps, values[src], ~observed)


def parse_ohlc_csv(source: Source, asset_id: str = "ohlc") -> PriceSeries:
    """Parse a Yahoo! Finance daily download into a calendar-daily close series.

    Rows whose Close is ``null`` are dropped; weekends, holidays and dropped
    rows are forward-filled from the previous trading day.
    """
    text = _read_bytes(source).decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != OHLC_HEADER:
        raise ParseError(f"missing or unexpected header, expected {','.join(OHLC_HEADER)}", 1)
    days: dict[int, float] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(OHLC_HEADER):
            raise ParseError(f"expected {len(OHLC_HEADER)} fields, got {len(row)}", lineno)
        ts = _iso_day(row[0], lineno)
        close = row[4].strip()
        if close.lower() == "null" or close == "":
            continue
        try:
            value = float(close)
        except ValueError:
            raise ParseError(f"non-numeric close {close!r}", lineno) from None
        if not value > 0:
            raise ParseError(f"close must be positive, got {close}", lineno)
        if ts in days:
            raise ParseError(f"duplicate date {row[0].strip()}", lineno)
        days[ts] = value
    if not days:
        raise TrendlabError("no data")
    bar_ts = np.array(sorted(days), dtype=np.int64)
    return _fill_grid(asset_id, DAY, bar_ts, np.array([days[t] for t in bar_ts]))


def resample(ticks: TickSeries, resolution: int, asset_id: str = "ticks") -> PriceSeries:
    """Bucket ticks into bars of ``resolution`` seconds aligned to the UTC epoch.

    A bar's close is the last tick before the bar's end. Bars without ticks
    repeat the previous close and are flagged as filled. The series begins at
    the bar holding the first tick.
    """
    if len(ticks) == 0:
        raise TrendlabError("no data")
    bars = ticks.timestamps // resolution
    last_in_bar = np.flatnonzero(np.append(np.diff(bars) != 0, True))
    return _fill_grid(asset_id, resolution, bars[last_in_bar] * resolution, ticks.prices[last_in_bar])


def slice_series(series: PriceSeries, start: int, end: int) -> PriceSeries:
    """Bars with ``start <= timestamp < end``."""
    if not start < end:
        raise TrendlabError("slice start must precede end")
    lo, hi = np.searchsorted(series.timestamps, [start, end], side="left")
    if lo >= hi:
        raise TrendlabError("empty slice")
    return PriceSeries(
        series.asset_id,
        series.resolution,
        series.timestamps[lo:hi],
        series.closes[lo:hi],
        series.filled[lo:hi],
    )


def parse_date(text: str) -> int:
    """ISO date or datetime to UTC epoch seconds (naive values are taken as UTC)."""
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise TrendlabError(f"unparseable date {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def load_prices(path: Union[str, Path], fmt: str, resolution: str | None = None) -> PriceSeries:
    """Read a tick or OHLC file into a PriceSeries, as the CLI does."""
    asset_id = Path(str(path)).stem if str(path) != "-" else "stdin"
    if fmt == "ticks":
        res = parse_resolution(resolution or "1h")
        return resample(parse_tick_csv(path), res, asset_id=asset_id)
    if fmt == "ohlc":
        if resolution not in (None, "1d"):
            raise TrendlabError("ohlc data only supports 1d resolution")
        return parse_ohlc_csv(path, asset_id=asset_id)
    raise TrendlabError(f"unknown format {fmt!r}")
