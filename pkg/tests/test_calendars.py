from datetime import date

import numpy as np
import pytest

import hftails as hf
from hftails.calendars import parse_calendar_text, utc_ms


def test_parse_calendar_text():
    cal = parse_calendar_text("""
        timezone Europe/Berlin
        session mon-fri 09:00 17:30
        holiday 2020-12-25   # Christmas
    """)
    assert cal.timezone_name == "Europe/Berlin"
    assert len(cal.weekly_sessions) == 5
    assert date(2020, 12, 25) in cal.holidays


def test_overlapping_sessions_rejected():
    with pytest.raises(ValueError):
        hf.TradingCalendar("UTC", ((0, 540, 1020), (0, 600, 700)))


def test_dst_transition_shifts_utc_open():
    # Berlin 09:00 is 08:00 UTC in winter, 07:00 UTC in summer
    cal = hf.TradingCalendar("Europe/Berlin", ((0, 540, 1050),))
    winter_open = utc_ms(2020, 1, 6, 8)    # Monday
    summer_open = utc_ms(2020, 6, 1, 7)    # Monday
    assert cal.contains([winter_open, winter_open - 1]).tolist() == [True, False]
    assert cal.contains([summer_open, summer_open - 1]).tolist() == [True, False]


def test_holiday_removes_sessions():
    cal = hf.TradingCalendar("UTC", ((0, 0, 1440),),
                             holidays=frozenset({date(2020, 1, 6)}))
    monday = utc_ms(2020, 1, 6, 12)
    next_monday = utc_ms(2020, 1, 13, 12)
    assert cal.contains([monday, next_monday]).tolist() == [False, True]


def test_session_start_anchors_to_listed_boundary():
    cal = hf.TradingCalendar.always_open()
    assert cal.session_start_at_or_before(utc_ms(2020, 1, 8, 13, 7)) == \
        utc_ms(2020, 1, 8)


def test_half_open_session_boundaries():
    cal = hf.TradingCalendar.weekdays("00:00", "23:00")
    close = utc_ms(2020, 1, 6, 23)
    assert cal.contains([close - 1, close]).tolist() == [True, False]


def test_calendar_file_roundtrip(tmp_path):
    text = "timezone UTC\nsession mon-sun 00:00 24:00\n"
    path = tmp_path / "cal.txt"
    path.write_text(text)
    cal = hf.load_calendar(path)
    assert np.all(cal.contains([utc_ms(2020, 5, 3, 1), utc_ms(2020, 5, 9, 23)]))
