"""Tick data: parsing, validation, price derivation, and session filtering.

Ticks carry either a bid/ask quote pair, a trade price, or both.  Series are
stored column-wise (int64 millisecond timestamps plus float price columns with
NaN for absent fields) so million-row feeds stay cheap to process.  All
containers are immutable after construction; distinct assets can be parsed and
filtered concurrently.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from ._validation import DataWarning, freeze
from .calendars import TradingCalendar

__all__ = [
    "Tick",
    "TickSeries",
    "TickFormat",
    "ParseStats",
    "ParseError",
    "parse_ticks",
    "mid_price",
    "tick_price",
    "session_filter",
]

#: largest tolerated backward timestamp step (feed jitter); bigger steps abort
REORDER_TOLERANCE_MS = 1000

_COLUMNS = ("timestamp", "bid", "ask", "trade_price")


class ParseError(ValueError):
    """Unrecoverable tick-stream problem (wrong format, corrupted ordering)."""


@dataclass(frozen=True)
class Tick:
    """One timestamped quote: UTC epoch milliseconds plus optional price fields."""

    timestamp: int
    bid: float | None = None
    ask: float | None = None
    trade_price: float | None = None

    def __post_init__(self):
        has_quote = self.bid is not None and self.ask is not None
        if not has_quote and self.trade_price is None:
            raise ValueError("tick needs a trade price or a bid/ask pair")
        if (self.bid is None) != (self.ask is None):
            raise ValueError("bid and ask must be given together")
        if has_quote and not (0 < self.bid <= self.ask):
            raise ValueError(f"need 0 < bid <= ask, got {self.bid}/{self.ask}")
        if self.trade_price is not None and self.trade_price <= 0:
            raise ValueError(f"trade price must be positive, got {self.trade_price}")


@dataclass(frozen=True)
class ParseStats:
    """Row accounting for one parse run."""

    total_rows: int = 0
    parsed: int = 0
    malformed: int = 0
    jitter_dropped: int = 0
    duplicates_replaced: int = 0


@dataclass(frozen=True)
class TickSeries:
    """Column-wise tick sequence for one asset, strictly increasing timestamps.

    Duplicate timestamps are collapsed keeping the last tick (a later quote
    within the same millisecond supersedes the earlier one).
    """

    asset_id: str
    timestamps: np.ndarray
    bid: np.ndarray
    ask: np.ndarray
    trade_price: np.ndarray
    parse_stats: ParseStats | None = field(default=None, compare=False)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, np.int64)
        n = ts.size
        for name in ("bid", "ask", "trade_price"):
            col = np.asarray(getattr(self, name), np.float64)
            if col.shape != (n,):
                raise ValueError(f"{name} column length mismatch")
            object.__setattr__(self, name, freeze(col))
        if n > 1 and np.any(np.diff(ts) <= 0):
            raise ValueError("timestamps must be strictly increasing after dedup")
        object.__setattr__(self, "timestamps", freeze(ts))

    @classmethod
    def from_arrays(cls, asset_id, timestamps, bid=None, ask=None, trade_price=None,
                    parse_stats=None):
        """Build a series from possibly duplicated (non-decreasing) timestamps.

        Equal timestamps keep the last row; the caller is responsible for
        ordering (``parse_ticks`` enforces the reorder tolerance).
        """
        ts = np.asarray(timestamps, np.int64)
        n = ts.size

        def col(c):
            if c is None:
                return np.full(n, np.nan)
            return np.asarray(c, np.float64)

        b, a, t = col(bid), col(ask), col(trade_price)
        if n:
            keep = np.ones(n, bool)
            keep[:-1] = ts[:-1] != ts[1:]  # keep the LAST of each duplicate run
            ts, b, a, t = ts[keep], b[keep], a[keep], t[keep]
        return cls(asset_id, ts, b, a, t, parse_stats)

    def __len__(self):
        return int(self.timestamps.size)

    def __getitem__(self, i):
        def opt(v):
            return None if math.isnan(v) else float(v)

        return Tick(int(self.timestamps[i]), opt(self.bid[i]), opt(self.ask[i]),
                    opt(self.trade_price[i]))

    def prices(self, basis="mid"):
        """Single price per tick: 'mid' (default), 'bid', 'ask', or 'trade'.

        The mid basis averages bid/ask where both are present and falls back
        to the trade price; the quote bases fall back likewise.
        """
        has_quote = ~np.isnan(self.bid)
        if basis == "mid":
            quoted = 0.5 * (self.bid + self.ask)
        elif basis == "bid":
            quoted = self.bid
        elif basis == "ask":
            quoted = self.ask
        elif basis == "trade":
            return np.where(np.isnan(self.trade_price),
                            0.5 * (self.bid + self.ask), self.trade_price)
        else:
            raise ValueError(f"unknown price basis {basis!r}")
        return np.where(has_quote, quoted, self.trade_price)

    def restrict(self, keep_mask):
        return TickSeries(self.asset_id, self.timestamps[keep_mask],
                          self.bid[keep_mask], self.ask[keep_mask],
                          self.trade_price[keep_mask])


@dataclass(frozen=True)
class TickFormat:
    """Describes a delimiter-separated tick file.

    ``columns`` is the on-disk column order drawn from
    {timestamp, bid, ask, trade_price}; ``timestamp_unit`` is one of
    'ms', 's', or 'iso8601'.
    """

    columns: tuple = ("timestamp", "bid", "ask")
    delimiter: str = ","
    timestamp_unit: str = "ms"
    header: bool = True

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        unknown = set(self.columns) - set(_COLUMNS)
        if unknown:
            raise ValueError(f"unknown columns: {sorted(unknown)}")
        if "timestamp" not in self.columns:
            raise ValueError("a timestamp column is required")
        if self.timestamp_unit not in ("ms", "s", "iso8601"):
            raise ValueError(f"unknown timestamp unit {self.timestamp_unit!r}")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate columns")


def _parse_timestamp(text, unit):
    if unit == "ms":
        return int(text)
    if unit == "s":
        return round(float(text) * 1000)
    ts = text.strip()
    if ts.endswith("Z"):
        ts = ts[:-1] + "+00:00"
    dt = datetime.fromisoformat(ts)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return round(dt.timestamp() * 1000)


def format_timestamp(ts_ms, unit):
    if unit == "ms":
        return str(int(ts_ms))
    if unit == "s":
        return repr(ts_ms / 1000.0)
    dt = datetime.fromtimestamp(ts_ms / 1000.0, timezone.utc)
    return dt.isoformat(timespec="milliseconds")


def parse_ticks(source, fmt, asset_id="") -> TickSeries:
    """Parse a delimiter-separated tick stream into a :class:`TickSeries`.

    ``source`` may be a path, bytes, str content, or a file-like object.
    Malformed rows (wrong field count, unparseable numbers, invariant
    violations) are skipped and counted; more than 50% malformed rows raises
    :class:`ParseError` since that signals a wrong format descriptor.
    Timestamps may jitter backwards by at most ``REORDER_TOLERANCE_MS``; such
    ticks are dropped with a counter, larger violations raise.

    The returned series carries a :class:`ParseStats` in ``parse_stats``.
    """
    lines = _read_lines(source)
    start = 1 if fmt.header and lines else 0
    col_idx = {name: i for i, name in enumerate(fmt.columns)}
    ncols = len(fmt.columns)
    i_ts = col_idx["timestamp"]
    i_bid = col_idx.get("bid")
    i_ask = col_idx.get("ask")
    i_trade = col_idx.get("trade_price")
    delim = fmt.delimiter
    unit = fmt.timestamp_unit

    ts_out, bid_out, ask_out, trade_out = [], [], [], []
    malformed = 0
    total = 0
    for line in lines[start:]:
        line = line.strip()
        if not line:
            continue
        total += 1
        parts = line.split(delim)
        if len(parts) != ncols:
            malformed += 1
            continue
        try:
            ts = _parse_timestamp(parts[i_ts], unit)
            bid = float(parts[i_bid]) if i_bid is not None and parts[i_bid] != "" else math.nan
            ask = float(parts[i_ask]) if i_ask is not None and parts[i_ask] != "" else math.nan
            trade = float(parts[i_trade]) if i_trade is not None and parts[i_trade] != "" else math.nan
        except ValueError:
            malformed += 1
            continue
        has_quote = not math.isnan(bid) and not math.isnan(ask)
        has_trade = not math.isnan(trade)
        ok = (has_quote or has_trade)
        ok = ok and not (math.isnan(bid) ^ math.isnan(ask))
        if has_quote:
            ok = ok and 0 < bid <= ask
        if has_trade:
            ok = ok and trade > 0
        if not ok:
            malformed += 1
            continue
        ts_out.append(ts)
        bid_out.append(bid)
        ask_out.append(ask)
        trade_out.append(trade)

    if total and malformed * 2 > total:
        raise ParseError(
            f"{malformed}/{total} rows malformed; check the format descriptor")

    ts = np.asarray(ts_out, np.int64)
    bid = np.asarray(bid_out, np.float64)
    ask = np.asarray(ask_out, np.float64)
    trade = np.asarray(trade_out, np.float64)

    jitter_dropped = 0
    if ts.size > 1:
        run_max = np.maximum.accumulate(ts)
        behind = run_max - ts
        if np.any(behind > REORDER_TOLERANCE_MS):
            k = int(np.argmax(behind > REORDER_TOLERANCE_MS))
            raise ParseError(
                f"timestamp goes back {int(behind[k])} ms at row {k}; "
                f"tolerance is {REORDER_TOLERANCE_MS} ms")
        keep = behind == 0
        jitter_dropped = int(np.count_nonzero(~keep))
        ts, bid, ask, trade = ts[keep], bid[keep], ask[keep], trade[keep]

    n_before = ts.size
    series = TickSeries.from_arrays(asset_id, ts, bid, ask, trade)
    stats = ParseStats(
        total_rows=total,
        parsed=len(series),
        malformed=malformed,
        jitter_dropped=jitter_dropped,
        duplicates_replaced=n_before - len(series),
    )
    if malformed:
        warnings.warn(f"skipped {malformed} malformed tick rows", DataWarning,
                      stacklevel=2)
    return TickSeries(series.asset_id, series.timestamps, series.bid, series.ask,
                      series.trade_price, stats)


def _read_lines(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    if isinstance(source, bytes):
        return source.decode("utf-8").splitlines()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data.splitlines()


def mid_price(tick: Tick) -> float:
    """Mid-quote when bid/ask are present, else the trade price."""
    if tick.bid is not None and tick.ask is not None:
        return 0.5 * (tick.bid + tick.ask)
    return tick.trade_price


def tick_price(tick: Tick, basis="mid") -> float:
    """Price of a single tick under the chosen basis (see TickSeries.prices)."""
    if basis == "mid":
        return mid_price(tick)
    if basis == "bid" and tick.bid is not None:
        return tick.bid
    if basis == "ask" and tick.ask is not None:
        return tick.ask
    if basis == "trade" and tick.trade_price is not None:
        return tick.trade_price
    return mid_price(tick)


def session_filter(series: TickSeries, cal: TradingCalendar) -> TickSeries:
    """Keep only the ticks whose timestamp falls inside a trading session."""
    if len(series) == 0:
        return series
    return series.restrict(cal.contains(series.timestamps))
