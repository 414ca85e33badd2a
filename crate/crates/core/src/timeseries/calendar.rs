use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate, Weekday};

use super::{HourlyRecord, MultiSeries};

pub fn is_weekend(date: NaiveDate) -> bool {
    matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

pub(crate) fn set_flags(record: &mut HourlyRecord, holidays: &BTreeSet<NaiveDate>) {
    let date = record.date();
    record.is_holiday = holidays.contains(&date);
    record.is_weekend_or_holiday = record.is_holiday || is_weekend(date);
}

/// Sets both calendar flags from the weekday and the holiday set, and stores
/// the holiday set on the series.
pub fn merge_calendar(mut series: MultiSeries, holidays: &BTreeSet<NaiveDate>) -> MultiSeries {
    for record in &mut series.records {
        set_flags(record, holidays);
    }
    series.holidays = holidays.clone();
    series
}
