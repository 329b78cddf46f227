"""Even-grid resampling and normalized log-returns.

Prices are carried forward from the most recent tick (previous-tick
interpolation) onto a grid aligned to the session boundary at or before the
first tick, so grids for nesting intervals (1 s, 10 s, 1 min, ...) share their
slots.  Returns are differences of log prices over one grid step; pairs that
span a session gap or an excised window are dropped, never glued.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timezone

import numpy as np

from ._validation import freeze
from .calendars import TradingCalendar
from .ticks import TickSeries

__all__ = [
    "PriceSeries",
    "RawReturns",
    "ReturnSeries",
    "PeriodMask",
    "NormalizationError",
    "sample_prices",
    "log_returns",
    "normalize",
    "excise",
]

#: the sampling intervals used throughout the analyses, in seconds
DEFAULT_DT_GRID = (1, 10, 60, 600, 3600)


class NormalizationError(ValueError):
    """Raised when returns cannot be normalized (zero variance)."""


@dataclass(frozen=True)
class PriceSeries:
    """Evenly sampled prices with a defined-slot mask.

    Slot ``k`` sits at ``grid_start + k*dt*1000`` ms; ``defined_mask`` is False
    before the first tick, outside trading sessions, and inside excised
    windows.  Every defined price is positive.
    """

    asset_id: str
    dt: int
    grid_start: int
    prices: np.ndarray
    defined_mask: np.ndarray

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be a positive number of seconds")
        p = np.asarray(self.prices, np.float64)
        m = np.asarray(self.defined_mask, bool)
        if p.shape != m.shape or p.ndim != 1:
            raise ValueError("prices and defined_mask must be equal-length 1-D")
        if np.any(~(p[m] > 0)):
            raise ValueError("defined prices must be positive")
        object.__setattr__(self, "dt", int(self.dt))
        object.__setattr__(self, "grid_start", int(self.grid_start))
        object.__setattr__(self, "prices", freeze(p))
        object.__setattr__(self, "defined_mask", freeze(m))

    def __len__(self):
        return int(self.prices.size)

    @property
    def slot_times(self):
        return self.grid_start + np.arange(len(self), dtype=np.int64) * (self.dt * 1000)

    def write_text(self, path):
        """Two-column (slot_time, price) text dump of the defined slots."""
        t = self.slot_times[self.defined_mask]
        p = self.prices[self.defined_mask]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# slot_time_ms\tprice\n")
            for ti, pi in zip(t, p):
                fh.write(f"{ti}\t{float(pi)!r}\n")


@dataclass(frozen=True)
class RawReturns:
    """Log-price differences over one grid step, labelled by the start slot."""

    asset_id: str
    dt: int
    slot_times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.slot_times, np.int64)
        v = np.asarray(self.values, np.float64)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("slot_times and values must be equal-length 1-D")
        object.__setattr__(self, "slot_times", freeze(t))
        object.__setattr__(self, "values", freeze(v))

    def __len__(self):
        return int(self.values.size)


@dataclass(frozen=True)
class ReturnSeries:
    """Normalized log-returns: (R - mean) / std with the population std.

    ``raw_mean``/``raw_std`` hold the normalization constants; ``zero_mask``
    marks slots whose raw return was exactly zero (stale price), used by the
    zero-return correlation filter.
    """

    asset_id: str
    dt: int
    raw_mean: float
    raw_std: float
    values: np.ndarray
    slot_times: np.ndarray
    zero_mask: np.ndarray | None = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values, np.float64)
        t = np.asarray(self.slot_times, np.int64)
        if v.shape != t.shape or v.ndim != 1:
            raise ValueError("values and slot_times must be equal-length 1-D")
        z = self.zero_mask
        if z is None:
            z = (v * self.raw_std + self.raw_mean) == 0.0
        z = np.asarray(z, bool)
        if z.shape != v.shape:
            raise ValueError("zero_mask length mismatch")
        object.__setattr__(self, "values", freeze(v))
        object.__setattr__(self, "slot_times", freeze(t))
        object.__setattr__(self, "zero_mask", freeze(z))

    def __len__(self):
        return int(self.values.size)

    def write_text(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# slot_time_ms\tnormalized_return\n")
            for ti, vi in zip(self.slot_times, self.values):
                fh.write(f"{ti}\t{float(vi)!r}\n")


@dataclass(frozen=True)
class PeriodMask:
    """Disjoint, sorted, half-open [start_ms, end_ms) calendar windows."""

    intervals: tuple = ()

    def __post_init__(self):
        iv = tuple((int(s), int(e)) for s, e in self.intervals)
        for s, e in iv:
            if e <= s:
                raise ValueError(f"empty or inverted interval {s}..{e}")
        for (_, e1), (s2, _) in zip(iv, iv[1:]):
            if s2 < e1:
                raise ValueError("intervals must be disjoint and sorted")
        object.__setattr__(self, "intervals", iv)

    @classmethod
    def from_isoformat(cls, *windows):
        """Build from 'START..END' strings (ISO dates or datetimes, UTC).

        A date-only END is inclusive: '2020-03-09..2020-03-27' covers the
        27th entirely.  A datetime END is the exact exclusive boundary.
        """
        ivs = []
        for w in windows:
            a, b = w.split("..", 1)
            ivs.append((_iso_to_ms(a), _iso_to_ms(b, end=True)))
        return cls(tuple(sorted(ivs)))

    def contains(self, timestamps_ms):
        ts = np.asarray(timestamps_ms, np.int64)
        if not self.intervals:
            return np.zeros(ts.shape, bool)
        bounds = np.asarray([b for iv in self.intervals for b in iv], np.int64)
        return (np.searchsorted(bounds, ts, side="right") % 2) == 1


def _iso_to_ms(text, end=False):
    text = text.strip()
    try:
        d = date.fromisoformat(text)
        dt = datetime(d.year, d.month, d.day, tzinfo=timezone.utc)
        ms = int(dt.timestamp() * 1000)
        return ms + 86_400_000 if end else ms
    except ValueError:
        pass
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp() * 1000)


def sample_prices(ticks: TickSeries, dt: int, cal: TradingCalendar,
                  mask: PeriodMask | None = None, price_basis="mid") -> PriceSeries:
    """Previous-tick interpolation of a session-filtered tick series.

    Each slot carries the most recent tick price at or before the slot time;
    slots before the first tick, outside sessions, or inside ``mask`` are
    undefined.  The grid starts at the session boundary at or before the first
    tick so that grids for nesting ``dt`` values share their slots.
    """
    dt = int(dt)
    if dt <= 0:
        raise ValueError("dt must be a positive number of seconds")
    if len(ticks) == 0:
        return PriceSeries(ticks.asset_id, dt, 0, np.empty(0), np.empty(0, bool))
    ts = ticks.timestamps
    t0, t1 = int(ts[0]), int(ts[-1])
    grid_start = cal.session_start_at_or_before(t0)
    step = dt * 1000
    n_slots = (t1 - grid_start) // step + 1
    slot_times = grid_start + np.arange(n_slots, dtype=np.int64) * step

    idx = np.searchsorted(ts, slot_times, side="right") - 1
    defined = idx >= 0
    prices = np.zeros(n_slots)
    tick_prices = ticks.prices(price_basis)
    prices[defined] = tick_prices[idx[defined]]

    defined &= cal.contains(slot_times)
    if mask is not None:
        defined &= ~mask.contains(slot_times)
    prices[~defined] = 0.0
    return PriceSeries(ticks.asset_id, dt, grid_start, prices, defined)


def log_returns(prices: PriceSeries) -> RawReturns:
    """One raw return per adjacent defined slot pair, labelled by the start slot.

    Pairs that are not one grid step apart (session gaps, excised windows,
    undefined leading slots) produce no return.
    """
    m = prices.defined_mask
    if np.count_nonzero(m) < 2:
        return RawReturns(prices.asset_id, prices.dt,
                          np.empty(0, np.int64), np.empty(0))
    pair = m[:-1] & m[1:]
    k = np.flatnonzero(pair)
    logp = np.log(prices.prices, out=np.zeros(len(prices)), where=m)
    values = logp[k + 1] - logp[k]
    slot_times = prices.grid_start + k.astype(np.int64) * (prices.dt * 1000)
    return RawReturns(prices.asset_id, prices.dt, slot_times, values)


def normalize(raw: RawReturns) -> ReturnSeries:
    """Center and scale raw returns to zero mean and unit (population) std."""
    if len(raw) < 2:
        raise ValueError("need at least 2 raw returns to normalize")
    if np.min(raw.values) == np.max(raw.values):
        raise NormalizationError("all raw returns are equal; normalization undefined")
    mu = float(np.mean(raw.values))
    sigma = float(np.std(raw.values))
    values = (raw.values - mu) / sigma
    return ReturnSeries(raw.asset_id, raw.dt, mu, sigma, values, raw.slot_times,
                        zero_mask=(raw.values == 0.0))


def excise(series, mask: PeriodMask):
    """Drop the elements of ``series`` that fall inside the masked windows.

    Works on tick, price, and return containers.  For price series the masked
    slots become undefined, so no return is later formed across an excised
    boundary; re-run ``log_returns`` after tick- or price-level excision
    rather than excising normalized returns.
    """
    if isinstance(series, TickSeries):
        return series.restrict(~mask.contains(series.timestamps))
    if isinstance(series, PriceSeries):
        inside = mask.contains(series.slot_times)
        defined = series.defined_mask & ~inside
        prices = np.where(defined, series.prices, 0.0)
        return _replace_price_series(series, prices, defined)
    if isinstance(series, RawReturns):
        keep = ~mask.contains(series.slot_times)
        return RawReturns(series.asset_id, series.dt, series.slot_times[keep],
                          series.values[keep])
    if isinstance(series, ReturnSeries):
        keep = ~mask.contains(series.slot_times)
        return ReturnSeries(series.asset_id, series.dt, series.raw_mean,
                            series.raw_std, series.values[keep],
                            series.slot_times[keep], series.zero_mask[keep])
    raise TypeError(f"cannot excise {type(series).__name__}")


def _replace_price_series(series, prices, defined):
    cls = type(series)
    kwargs = {}
    if hasattr(series, "constituent_ids"):
        kwargs["constituent_ids"] = series.constituent_ids
    return cls(asset_id=series.asset_id, dt=series.dt, grid_start=series.grid_start,
               prices=prices, defined_mask=defined, **kwargs)


def returns_at(ticks: TickSeries, dt: int, cal: TradingCalendar,
               mask: PeriodMask | None = None, price_basis="mid") -> ReturnSeries:
    """Convenience: sample, difference, and normalize in one step."""
    return normalize(log_returns(sample_prices(ticks, dt, cal, mask, price_basis)))
