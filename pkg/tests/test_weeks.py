from datetime import date, timedelta

import pytest
from epiweeks import Week

from hotspot_spread.exceptions import InvalidConfig
from hotspot_spread.weeks import EpiWeekCalendar, select_range, year_of


def test_first_week_contains_january_4th():
    calendar = EpiWeekCalendar("sunday")
    assert calendar.label_for(date(2013, 1, 4)) == "2013-W01"
    # 2012-12-30 是星期日，与 1 月 4 日同周
    assert calendar.label_for(date(2012, 12, 30)) == "2013-W01"
    assert calendar.label_for(date(2012, 12, 29)) == "2012-W52"


def test_label_for_mid_year():
    calendar = EpiWeekCalendar()
    assert calendar.label_for(date(2013, 6, 15)) == "2013-W24"
    assert calendar.start_of("2013-W24") == date(2013, 6, 9)


def test_monday_start_matches_iso_weeks():
    calendar = EpiWeekCalendar("monday")
    for day in (date(2015, 1, 1), date(2016, 1, 3), date(2020, 12, 31), date(2013, 6, 15)):
        iso_year, iso_week, _ = day.isocalendar()
        assert calendar.label_for(day) == f"{iso_year}-W{iso_week:02d}"


def test_shift_across_year_boundary():
    calendar = EpiWeekCalendar()
    last = calendar.label_for(date(2013, 12, 28))
    assert calendar.shift(last, 1) == "2014-W01"
    assert calendar.shift("2014-W01", -1) == last


def test_labels_between_has_no_gaps():
    calendar = EpiWeekCalendar()
    labels = calendar.labels_between(date(2013, 1, 1), date(2013, 3, 1))
    assert labels[0] == "2013-W01"
    assert all(calendar.shift(a, 1) == b for a, b in zip(labels, labels[1:]))


def test_invalid_inputs():
    with pytest.raises(InvalidConfig):
        EpiWeekCalendar("someday")
    with pytest.raises(InvalidConfig):
        EpiWeekCalendar().start_of("2013-24")
    with pytest.raises(InvalidConfig):
        EpiWeekCalendar().start_of("2013-W60")


def test_select_range():
    labels = ["2013-W01", "2013-W02", "2013-W03", "2014-W01"]
    assert select_range(labels, "2013-W02:2013-W03") == ["2013-W02", "2013-W03"]
    assert select_range(labels, ":2013-W02") == ["2013-W01", "2013-W02"]
    assert select_range(labels, "2013-W03:") == ["2013-W03", "2014-W01"]
    assert select_range(labels, None) == labels
    with pytest.raises(InvalidConfig):
        select_range(labels, "2013-W02")


def test_year_of():
    assert year_of("2013-W52") == 2013


def test_calendar_agrees_with_epiweeks():
    for week_start, system in (("sunday", "cdc"), ("monday", "iso")):
        calendar = EpiWeekCalendar(week_start)
        day = date(2012, 12, 1)
        while day < date(2015, 2, 1):
            week = Week.fromdate(day, system=system)
            assert calendar.label_for(day) == f"{week.year}-W{week.week:02d}"
            assert calendar.week_start_of(day) == week.startdate()
            day += timedelta(days=1)


def test_only_sunday_or_monday_starts():
    with pytest.raises(InvalidConfig):
        EpiWeekCalendar("tuesday")
    assert EpiWeekCalendar("Monday").system == "iso"
