//! Calendar-year slicing over record timestamps, half-open in UTC.

use chrono::{TimeZone, Utc};

use crate::corpus::TweetRecord;

/// UTC epoch-second bounds of a calendar year: [Jan 1 year, Jan 1 year+1).
pub fn year_bounds(year: i32) -> (i64, i64) {
    let start = Utc
        .with_ymd_and_hms(year, 1, 1, 0, 0, 0)
        .single()
        .expect("valid year start")
        .timestamp();
    let end = Utc
        .with_ymd_and_hms(year + 1, 1, 1, 0, 0, 0)
        .single()
        .expect("valid year end")
        .timestamp();
    (start, end)
}

pub fn in_year(created_at: i64, year: i32) -> bool {
    let (start, end) = year_bounds(year);
    created_at >= start && created_at < end
}

pub fn slice_by_year<I>(records: I, year: i32) -> impl Iterator<Item = TweetRecord>
where
    I: IntoIterator<Item = TweetRecord>,
{
    records.into_iter().filter(move |r| in_year(r.created_at, year))
}
