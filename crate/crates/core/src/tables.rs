//! Shared data tables: the daily market panel, the event catalog, and the
//! derived estimation panels (stacked event windows, monthly aggregates).
//!
//! These types are deliberately dumb containers with validated constructors.
//! Generation lives in [`crate::datagen`], file I/O in [`crate::ingest`], and
//! estimation in [`crate::econ`].

use chrono::{Datelike, NaiveDate};
use indexmap::IndexMap;

use crate::calendar::TradingCalendar;
use crate::error::{Error, Result};

/// Daily market panel: a trading calendar plus named numeric columns.
///
/// Missing values are represented as `NaN`. Core market columns are expected
/// to be complete after alignment/forward-filling; columns that legitimately
/// keep holes (e.g. raw rate series feeding the listwise-deletion
/// difference-in-differences panel) may carry `NaN`.
#[derive(Debug, Clone)]
pub struct MarketPanel {
    calendar: TradingCalendar,
    columns: IndexMap<String, Vec<f64>>,
}

impl MarketPanel {
    pub fn new(calendar: TradingCalendar) -> Self {
        Self { calendar, columns: IndexMap::new() }
    }

    /// Insert a column; its length must match the calendar.
    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.calendar.len() {
            return Err(Error::data(format!(
                "column '{}' has {} values for a {}-day calendar",
                name,
                values.len(),
                self.calendar.len()
            )));
        }
        if self.columns.contains_key(&name) {
            return Err(Error::data(format!("duplicate column '{name}'")));
        }
        self.columns.insert(name, values);
        Ok(())
    }

    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        self.calendar.days()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::data(format!("panel has no column '{name}'")))
    }

    /// Column names in insertion order (stable across runs).
    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Value of `column` on `date`, if the date is on the calendar.
    pub fn value_on(&self, name: &str, date: NaiveDate) -> Result<Option<f64>> {
        let col = self.column(name)?;
        Ok(self.calendar.position(date).map(|i| col[i]))
    }

    /// Error if any of `names` contains a non-finite entry.
    pub fn require_complete(&self, names: &[&str]) -> Result<()> {
        for name in names {
            let col = self.column(name)?;
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::data(format!(
                    "column '{}' has a missing/non-finite value on {}",
                    name,
                    self.calendar.day(i)
                )));
            }
        }
        Ok(())
    }

    /// Replace an existing column's values (length-checked).
    pub fn replace(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.calendar.len() {
            return Err(Error::data(format!(
                "column '{}' has {} values for a {}-day calendar",
                name,
                values.len(),
                self.calendar.len()
            )));
        }
        match self.columns.get_mut(name) {
            Some(slot) => {
                *slot = values;
                Ok(())
            }
            None => Err(Error::data(format!("panel has no column '{name}'"))),
        }
    }
}

/// One attack/exploit event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    /// Occurrence date, already aligned to a trading day.
    pub date: NaiveDate,
    pub protocol: String,
    pub chain: String,
    /// Attack loss in USD (> 0).
    pub loss_usd: f64,
    /// Protocol TVL at the event in USD (≥ loss).
    pub tvl_usd: f64,
    /// Gas price observed at the event, in Gwei (≥ 0).
    pub gas_gwei: f64,
}

impl EventRecord {
    fn validate(&self) -> Result<()> {
        if !self.loss_usd.is_finite() || self.loss_usd <= 0.0 {
            return Err(Error::data(format!(
                "event {} ({}): loss_usd must be positive, got {}",
                self.date, self.protocol, self.loss_usd
            )));
        }
        if !self.tvl_usd.is_finite() || self.tvl_usd <= 0.0 {
            return Err(Error::data(format!(
                "event {} ({}): tvl_usd must be positive, got {}",
                self.date, self.protocol, self.tvl_usd
            )));
        }
        if self.loss_usd > self.tvl_usd {
            return Err(Error::data(format!(
                "event {} ({}): loss {} exceeds TVL {}",
                self.date, self.protocol, self.loss_usd, self.tvl_usd
            )));
        }
        if !self.gas_gwei.is_finite() || self.gas_gwei < 0.0 {
            return Err(Error::data(format!(
                "event {} ({}): gas_gwei must be non-negative, got {}",
                self.date, self.protocol, self.gas_gwei
            )));
        }
        Ok(())
    }
}

/// A validated, date-sorted list of events. May be empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventCatalog {
    events: Vec<EventRecord>,
}

impl EventCatalog {
    pub fn new(mut events: Vec<EventRecord>) -> Result<Self> {
        for ev in &events {
            ev.validate()?;
        }
        events.sort_by_key(|e| e.date); // stable: same-day events keep input order
        Ok(Self { events })
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.events.iter().map(|e| e.date)
    }
}

/// One row of a stacked event-window panel.
#[derive(Debug, Clone)]
pub struct StackedRow {
    /// Event index (the cluster key).
    pub event: usize,
    pub date: NaiveDate,
    /// Day relative to the event, `k = -1` being the baseline.
    pub rel_day: i32,
    pub outcome: f64,
    /// Outcome on the previous trading day, for difference specifications.
    pub outcome_prev: f64,
    pub controls: Vec<f64>,
    /// Asset index for multi-asset (difference-in-differences) stacks.
    pub asset: Option<usize>,
    /// Treatment flag; `true` in single-series stacks.
    pub treated: bool,
}

/// Long-form stacked panel of event windows.
///
/// Overlapping events duplicate calendar days — one row per (event, day) —
/// which is exactly what the stacked design calls for.
#[derive(Debug, Clone)]
pub struct StackedPanel {
    pub window: (i32, i32),
    pub control_names: Vec<String>,
    /// Asset labels for DiD stacks; empty for single-series stacks.
    pub assets: Vec<String>,
    pub rows: Vec<StackedRow>,
}

impl StackedPanel {
    pub fn n_events(&self) -> usize {
        self.rows.iter().map(|r| r.event).max().map_or(0, |m| m + 1)
    }

    /// Relative days in the window, ascending.
    pub fn rel_days(&self) -> Vec<i32> {
        (self.window.0..=self.window.1).collect()
    }
}

/// Month key, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn of(date: NaiveDate) -> Self {
        Self { year: date.year(), month: date.month() }
    }

    /// The immediately preceding calendar month.
    pub fn prev(self) -> Self {
        if self.month == 1 {
            Self { year: self.year - 1, month: 12 }
        } else {
            Self { year: self.year, month: self.month - 1 }
        }
    }
}

impl std::fmt::Display for YearMonth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// One month of the state-dependence panel.
#[derive(Debug, Clone)]
pub struct MonthlyRow {
    pub month: YearMonth,
    /// Mean spread (bps) over the month's event-window days.
    pub spread_bps: f64,
    /// Month-over-month change, absent for the first included month.
    pub spread_change_bps: Option<f64>,
    pub hack_month: bool,
    /// Prime CP holdings share, standardized over included months.
    pub prime_share_z: f64,
    pub controls: Vec<f64>,
}

/// Monthly state-dependence panel.
#[derive(Debug, Clone)]
pub struct MonthlyPanel {
    pub rows: Vec<MonthlyRow>,
    pub control_names: Vec<String>,
    /// Set when the prime-share series had zero variance and the z-scores
    /// were forced to zero instead of dividing by zero.
    pub prime_share_degenerate: bool,
}
