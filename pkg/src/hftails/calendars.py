"""Trading calendars: weekly sessions in a civil timezone, materialized as UTC intervals.

A calendar lists half-open sessions ``[open, close)`` per weekday, expressed in a
named timezone, plus full-day holidays.  Session membership tests and grid
construction work on the materialized UTC interval list, so daylight-saving
transitions follow the timezone database.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from zoneinfo import ZoneInfo

import numpy as np

__all__ = ["TradingCalendar", "load_calendar", "parse_calendar_text"]

_DAY_NAMES = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"]

MS_PER_DAY = 86_400_000


def _parse_minutes(text):
    """'HH:MM' -> minutes since midnight; '24:00' is a valid close."""
    m = re.fullmatch(r"(\d{1,2}):(\d{2})", text.strip())
    if not m:
        raise ValueError(f"bad time of day: {text!r}")
    hh, mm = int(m.group(1)), int(m.group(2))
    minutes = hh * 60 + mm
    if minutes > 1440 or mm > 59:
        raise ValueError(f"bad time of day: {text!r}")
    return minutes


@dataclass(frozen=True)
class TradingCalendar:
    """Weekly trading sessions in a civil timezone.

    ``weekly_sessions`` holds ``(weekday, open_minutes, close_minutes)`` with
    weekday 0 = Monday and minutes measured from local midnight; a close of
    1440 means end of day.  Sessions on one weekday must not overlap.
    """

    timezone_name: str = "UTC"
    weekly_sessions: tuple = ()
    holidays: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        ZoneInfo(self.timezone_name)  # fail fast on unknown zones
        per_day = {}
        for wd, op, cl in self.weekly_sessions:
            if not (0 <= wd <= 6):
                raise ValueError(f"weekday out of range: {wd}")
            if not (0 <= op < cl <= 1440):
                raise ValueError(f"bad session interval: {op}..{cl}")
            per_day.setdefault(wd, []).append((op, cl))
        for wd, spans in per_day.items():
            spans.sort()
            for (o1, c1), (o2, _) in zip(spans, spans[1:]):
                if o2 < c1:
                    raise ValueError(f"overlapping sessions on weekday {wd}")

    @classmethod
    def always_open(cls):
        """24/7 calendar (UTC, every day 00:00-24:00)."""
        return cls("UTC", tuple((wd, 0, 1440) for wd in range(7)))

    @classmethod
    def weekdays(cls, open_hhmm="00:00", close_hhmm="24:00", timezone_name="UTC",
                 holidays=()):
        """Monday-Friday calendar with one session per day."""
        op, cl = _parse_minutes(open_hhmm), _parse_minutes(close_hhmm)
        return cls(timezone_name, tuple((wd, op, cl) for wd in range(5)),
                   frozenset(holidays))

    def utc_intervals(self, start_ms, end_ms, merge=True):
        """Session intervals as UTC millisecond arrays covering [start_ms, end_ms].

        Returns ``(starts, ends)`` sorted, half-open.  With ``merge`` (the
        default) contiguous sessions collapse, so membership tests on
        around-the-clock calendars see no phantom midnight gaps; unmerged
        intervals preserve the listed per-day session boundaries.
        """
        if not self.weekly_sessions or end_ms < start_ms:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        tz = ZoneInfo(self.timezone_name)
        # One day of slack on each side covers timezone offset skew.
        first = datetime.fromtimestamp(start_ms / 1000.0, tz).date() - timedelta(days=1)
        last = datetime.fromtimestamp(end_ms / 1000.0, tz).date() + timedelta(days=1)
        per_day = {}
        for wd, op, cl in self.weekly_sessions:
            per_day.setdefault(wd, []).append((op, cl))
        starts, ends = [], []
        day = first
        while day <= last:
            if day not in self.holidays:
                for op, cl in sorted(per_day.get(day.weekday(), ())):
                    t0 = datetime.combine(day, time(0), tz) + timedelta(minutes=op)
                    t1 = datetime.combine(day, time(0), tz) + timedelta(minutes=cl)
                    starts.append(round(t0.timestamp() * 1000))
                    ends.append(round(t1.timestamp() * 1000))
            day += timedelta(days=1)
        starts = np.asarray(starts, np.int64)
        ends = np.asarray(ends, np.int64)
        order = np.argsort(starts, kind="stable")
        starts, ends = starts[order], ends[order]
        if not merge:
            return starts, ends
        merged_s, merged_e = [], []
        for s, e in zip(starts, ends):
            if merged_e and s <= merged_e[-1]:
                merged_e[-1] = max(merged_e[-1], e)
            else:
                merged_s.append(s)
                merged_e.append(e)
        return np.asarray(merged_s, np.int64), np.asarray(merged_e, np.int64)

    def contains(self, timestamps_ms):
        """Vectorized membership: True where a UTC millisecond falls in a session."""
        ts = np.asarray(timestamps_ms, np.int64)
        if ts.size == 0:
            return np.zeros(0, bool)
        starts, ends = self.utc_intervals(int(ts.min()), int(ts.max()))
        if starts.size == 0:
            return np.zeros(ts.shape, bool)
        idx = np.searchsorted(starts, ts, side="right") - 1
        inside = idx >= 0
        inside[inside] = ts[inside] < ends[idx[inside]]
        return inside

    def session_start_at_or_before(self, ts_ms):
        """Start of the listed session containing ``ts_ms`` or of the latest
        one opening before it (per-day boundaries, not merged blocks)."""
        starts, _ = self.utc_intervals(ts_ms - 14 * MS_PER_DAY, ts_ms, merge=False)
        starts = starts[starts <= ts_ms]
        if starts.size == 0:
            raise ValueError("no session at or before the requested timestamp")
        return int(starts[-1])


def parse_calendar_text(text):
    """Parse the calendar file format.

    Line-oriented key/value text::

        timezone Europe/Berlin
        session mon-fri 09:00 17:30
        session sat 10:00 12:00
        holiday 2020-12-25

    Day ranges use the three-letter names mon..sun; '#' starts a comment.
    """
    tz = "UTC"
    sessions = []
    holidays = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0].lower()
        if kind == "timezone" and len(parts) == 2:
            tz = parts[1]
        elif kind == "session" and len(parts) == 4:
            days, op, cl = parts[1].lower(), _parse_minutes(parts[2]), _parse_minutes(parts[3])
            if "-" in days:
                d0, d1 = days.split("-", 1)
                i0, i1 = _DAY_NAMES.index(d0), _DAY_NAMES.index(d1)
                if i1 < i0:
                    raise ValueError(f"bad day range: {parts[1]!r}")
                span = range(i0, i1 + 1)
            else:
                span = [_DAY_NAMES.index(days)]
            sessions.extend((wd, op, cl) for wd in span)
        elif kind == "holiday" and len(parts) == 2:
            holidays.add(date.fromisoformat(parts[1]))
        else:
            raise ValueError(f"bad calendar line: {raw!r}")
    return TradingCalendar(tz, tuple(sessions), frozenset(holidays))


def load_calendar(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_calendar_text(fh.read())


def utc_ms(year, month, day, hour=0, minute=0, second=0):
    """Convenience epoch-millisecond constructor (UTC civil time)."""
    dt = datetime(year, month, day, hour, minute, second, tzinfo=timezone.utc)
    return int(dt.timestamp() * 1000)
