//! Trading-day calendar.
//!
//! All daily series in this crate live on an explicit trading calendar:
//! weekdays between two bounds, minus an optional holiday list. The calendar
//! owns date-to-row alignment, gap measurement for forward filling, and the
//! next-trading-day convention used to time-stamp off-hours events.

use std::collections::HashMap;

use chrono::{Datelike, Duration, NaiveDate, Weekday};

use crate::error::{Error, Result};

/// An ordered set of trading days with O(1) date lookup.
#[derive(Debug, Clone)]
pub struct TradingCalendar {
    days: Vec<NaiveDate>,
    index: HashMap<NaiveDate, usize>,
}

impl TradingCalendar {
    /// Weekday calendar spanning `start..=end`, excluding `holidays`.
    pub fn weekdays(start: NaiveDate, end: NaiveDate, holidays: &[NaiveDate]) -> Result<Self> {
        if end < start {
            return Err(Error::config(format!(
                "calendar end {end} precedes start {start}"
            )));
        }
        let mut days = Vec::new();
        let mut d = start;
        while d <= end {
            if is_weekday(d) && !holidays.contains(&d) {
                days.push(d);
            }
            d += Duration::days(1);
        }
        Self::from_days(days)
    }

    /// Weekday calendar with exactly `n_days` trading days starting at `start`.
    pub fn weekdays_from(start: NaiveDate, n_days: usize, holidays: &[NaiveDate]) -> Result<Self> {
        let mut days = Vec::with_capacity(n_days);
        let mut d = start;
        while days.len() < n_days {
            if is_weekday(d) && !holidays.contains(&d) {
                days.push(d);
            }
            d += Duration::days(1);
        }
        Self::from_days(days)
    }

    /// Build from an explicit, strictly increasing list of days.
    pub fn from_days(days: Vec<NaiveDate>) -> Result<Self> {
        if days.is_empty() {
            return Err(Error::config("calendar must contain at least one day"));
        }
        for w in days.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::config(format!(
                    "calendar days must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        let index = days.iter().copied().enumerate().map(|(i, d)| (d, i)).collect();
        Ok(Self { days, index })
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn first(&self) -> NaiveDate {
        self.days[0]
    }

    pub fn last(&self) -> NaiveDate {
        *self.days.last().expect("calendar is non-empty")
    }

    /// Row index of `date`, if it is a trading day on this calendar.
    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.index.get(&date).copied()
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.index.contains_key(&date)
    }

    pub fn day(&self, idx: usize) -> NaiveDate {
        self.days[idx]
    }

    /// First trading day at or after `date` (identity for trading days).
    pub fn on_or_after(&self, date: NaiveDate) -> Option<NaiveDate> {
        match self.days.binary_search(&date) {
            Ok(i) => Some(self.days[i]),
            Err(i) => self.days.get(i).copied(),
        }
    }

    /// First trading day strictly after `date`.
    pub fn next_after(&self, date: NaiveDate) -> Option<NaiveDate> {
        match self.days.binary_search(&date) {
            Ok(i) => self.days.get(i + 1).copied(),
            Err(i) => self.days.get(i).copied(),
        }
    }
}

pub fn is_weekday(d: NaiveDate) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Shorthand used by tests and generators.
pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}
