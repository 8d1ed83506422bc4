//! Trading calendar: the strictly increasing sequence of dates shared by all
//! aligned series. Positions in the calendar (`usize` indices) are the
//! engine's notion of time; dates only matter at the I/O boundary and for
//! quarter bookkeeping.

use crate::error::{Error, Result};
use chrono::{Datelike, NaiveDate};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
}

impl TradingCalendar {
    /// Build a calendar from dates that must already be strictly increasing.
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self> {
        for pair in dates.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::data(format!(
                    "calendar dates not strictly increasing: {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(TradingCalendar { dates })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn date(&self, idx: usize) -> NaiveDate {
        self.dates[idx]
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// Exact position of `date`, if it is a trading day in this calendar.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// Position of the first trading day on or after `date`.
    pub fn index_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        match self.dates.binary_search(&date) {
            Ok(i) => Some(i),
            Err(i) if i < self.dates.len() => Some(i),
            Err(_) => None,
        }
    }

    /// Position of the last trading day on or before `date`.
    pub fn index_on_or_before(&self, date: NaiveDate) -> Option<usize> {
        match self.dates.binary_search(&date) {
            Ok(i) => Some(i),
            Err(0) => None,
            Err(i) => Some(i - 1),
        }
    }

    /// Indices that are the last trading day of a calendar quarter.
    ///
    /// A position qualifies only when the following trading day is observed
    /// to fall in a different quarter, so a dataset that stops mid-quarter
    /// does not produce a spurious final boundary.
    pub fn quarter_end_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for i in 0..self.dates.len().saturating_sub(1) {
            if quarter_key(self.dates[i]) != quarter_key(self.dates[i + 1]) {
                out.push(i);
            }
        }
        out
    }
}

fn quarter_key(d: NaiveDate) -> (i32, u32) {
    (d.year(), (d.month0()) / 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn rejects_unsorted_and_duplicate_dates() {
        assert!(TradingCalendar::new(vec![d("2020-01-02"), d("2020-01-02")]).is_err());
        assert!(TradingCalendar::new(vec![d("2020-01-03"), d("2020-01-02")]).is_err());
    }

    #[test]
    fn lookup_variants() {
        let cal =
            TradingCalendar::new(vec![d("2020-01-02"), d("2020-01-03"), d("2020-01-06")]).unwrap();
        assert_eq!(cal.index_of(d("2020-01-03")), Some(1));
        assert_eq!(cal.index_of(d("2020-01-04")), None);
        assert_eq!(cal.index_on_or_after(d("2020-01-04")), Some(2));
        assert_eq!(cal.index_on_or_before(d("2020-01-04")), Some(1));
        assert_eq!(cal.index_on_or_before(d("2020-01-01")), None);
        assert_eq!(cal.index_on_or_after(d("2020-01-07")), None);
    }

    #[test]
    fn quarter_ends_need_an_observed_boundary() {
        // Two Q1 days, two Q2 days, one Q3 day: boundaries after index 1 and 3.
        let cal = TradingCalendar::new(vec![
            d("2020-03-30"),
            d("2020-03-31"),
            d("2020-04-01"),
            d("2020-06-30"),
            d("2020-07-01"),
        ])
        .unwrap();
        assert_eq!(cal.quarter_end_indices(), vec![1, 3]);
    }

    #[test]
    fn dataset_ending_mid_quarter_has_no_final_boundary() {
        let cal = TradingCalendar::new(vec![d("2020-04-01"), d("2020-05-15")]).unwrap();
        assert!(cal.quarter_end_indices().is_empty());
    }
}
