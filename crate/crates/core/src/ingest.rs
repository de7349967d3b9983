//! File ingestion: CSV parsing, calendar alignment, cleaning, and the
//! matching writers.
//!
//! All files are UTF-8, comma-delimited CSV with a mandatory header row and
//! ISO-8601 (`YYYY-MM-DD`) dates. Two raw-series layouts are supported:
//! FRED-style exports whose missing marker is a literal `.`, and plain CSVs
//! where missing values are empty cells. Parsed series are aligned onto a
//! shared trading calendar with bounded forward filling, events are aligned
//! to trading days using their session flag, and winsorization provides the
//! standard outlier clipping. Writers round-trip exactly: writing a
//! [`MarketPanel`] or [`EventCatalog`] and parsing the file back reproduces
//! the original bit for bit.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::calendar::TradingCalendar;
use crate::error::{Error, Result};
use crate::tables::{EventCatalog, EventRecord, MarketPanel};

/// Raw-series file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    /// FRED export: `DATE,VALUE` with `.` (or an empty cell) marking missing.
    FredCsv,
    /// Plain two-column CSV: numeric values, empty cell marking missing.
    PlainCsv,
}

impl FromStr for SeriesFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fred_csv" => Ok(SeriesFormat::FredCsv),
            "plain_csv" => Ok(SeriesFormat::PlainCsv),
            other => Err(Error::config(format!(
                "unknown series format '{other}' (expected fred_csv or plain_csv)"
            ))),
        }
    }
}

/// A single parsed time series before calendar alignment.
///
/// Rows are sorted by date; duplicate dates are rejected at construction.
/// `None` values are in-file missing markers awaiting forward fill.
#[derive(Debug, Clone)]
pub struct RawSeries {
    name: String,
    source: String,
    rows: Vec<(NaiveDate, Option<f64>)>,
}

impl RawSeries {
    pub fn new(
        name: impl Into<String>,
        source: impl Into<String>,
        mut rows: Vec<(NaiveDate, Option<f64>)>,
    ) -> Result<Self> {
        rows.sort_by_key(|r| r.0);
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::data(format!("duplicate date {} in series", w[0].0)));
            }
        }
        Ok(Self { name: name.into(), source: source.into(), rows })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Where the series came from (file path or synthetic tag).
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn rows(&self) -> &[(NaiveDate, Option<f64>)] {
        &self.rows
    }

    /// First and last dates carrying an actual value.
    fn observed_span(&self) -> Option<(NaiveDate, NaiveDate)> {
        let mut present = self.rows.iter().filter(|(_, v)| v.is_some());
        let first = present.next()?.0;
        let last = self.rows.iter().rev().find(|(_, v)| v.is_some())?.0;
        Some((first, last))
    }
}

/// Parse a two-column `date,value` CSV into a [`RawSeries`].
///
/// The series takes its name from the second header field and its source tag
/// from the file path. Errors carry 1-based line numbers (the header is
/// line 1).
pub fn parse_series(path: &Path, format: SeriesFormat) -> Result<RawSeries> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.len() != 2 {
        return Err(Error::data(format!(
            "{}: series file must have exactly two columns (date,value), found {}",
            path.display(),
            headers.len()
        )));
    }
    let name = headers[1].trim().to_string();
    if name.is_empty() {
        return Err(Error::data(format!("{}: value column has an empty header", path.display())));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let date = parse_date(&record[0], line)?;
        let raw = record[1].trim();
        let value = match (format, raw) {
            (_, "") | (SeriesFormat::FredCsv, ".") => None,
            _ => Some(parse_value(raw, line)?),
        };
        rows.push((date, value));
    }
    RawSeries::new(name, path.display().to_string(), rows)
}

/// Align raw series onto a trading calendar, forward-filling short gaps.
///
/// The output panel covers the stretch of `calendar` where every series has
/// started and not yet stopped reporting: from the latest first observation
/// to the earliest last observation. Within that span, a day with no value
/// (absent row or missing marker) inherits the most recent value, and a run
/// of more than `max_gap` consecutive value-less trading days is an error.
/// Observations falling off the calendar (weekends, holidays) are ignored.
///
/// Errors if any series is empty, if a series name repeats, or if the common
/// span misses the calendar entirely.
pub fn align_and_fill(
    series: &[RawSeries],
    calendar: &TradingCalendar,
    max_gap: usize,
) -> Result<MarketPanel> {
    if series.is_empty() {
        return Err(Error::data("align_and_fill needs at least one series"));
    }
    let mut span_start = calendar.first();
    let mut span_end = calendar.last();
    for s in series {
        let (first, last) = s.observed_span().ok_or_else(|| {
            Error::data(format!("series '{}' has no observed values", s.name()))
        })?;
        span_start = span_start.max(first);
        span_end = span_end.min(last);
    }
    let days: Vec<NaiveDate> = calendar
        .days()
        .iter()
        .copied()
        .filter(|d| (span_start..=span_end).contains(d))
        .collect();
    if days.is_empty() {
        return Err(Error::data(format!(
            "series date ranges do not overlap the calendar \
             (common observed span {span_start}..={span_end})"
        )));
    }

    let mut panel = MarketPanel::new(TradingCalendar::from_days(days.clone())?);
    for s in series {
        let by_date: HashMap<NaiveDate, f64> = s
            .rows()
            .iter()
            .filter_map(|&(d, v)| v.map(|v| (d, v)))
            .collect();
        // Seed with the freshest value at or before the span start, so a
        // series that began reporting earlier starts the walk already filled.
        let mut last: Option<f64> = s
            .rows()
            .iter()
            .rev()
            .find(|&&(d, v)| d <= days[0] && v.is_some())
            .and_then(|&(_, v)| v);
        let mut gap_start: Option<NaiveDate> = None;
        let mut gap_len = 0usize;
        let mut values = Vec::with_capacity(days.len());
        for &day in &days {
            match by_date.get(&day) {
                Some(&v) => {
                    last = Some(v);
                    gap_start = None;
                    gap_len = 0;
                    values.push(v);
                }
                None => {
                    gap_len += 1;
                    let start = *gap_start.get_or_insert(day);
                    if gap_len > max_gap {
                        return Err(Error::data(format!(
                            "series '{}': gap of more than {} trading days starting {}",
                            s.name(),
                            max_gap,
                            start
                        )));
                    }
                    match last {
                        Some(v) => values.push(v),
                        None => {
                            return Err(Error::data(format!(
                                "series '{}': no value available to fill {}",
                                s.name(),
                                day
                            )))
                        }
                    }
                }
            }
        }
        panel.insert(s.name(), values)?;
    }
    Ok(panel)
}

/// Add a spread column as the elementwise difference `minuend − subtrahend`.
///
/// Units follow the inputs: percent yields give a percent spread, basis-point
/// columns give a basis-point spread. Missing values propagate.
pub fn derive_spread(
    panel: &mut MarketPanel,
    minuend: &str,
    subtrahend: &str,
    output: &str,
) -> Result<()> {
    let diff: Vec<f64> = panel
        .column(minuend)?
        .iter()
        .zip(panel.column(subtrahend)?)
        .map(|(a, b)| a - b)
        .collect();
    panel.insert(output, diff)
}

/// Clip values to the empirical `[lower_pct, upper_pct]` percentile band.
///
/// Percentiles interpolate linearly between order statistics: percentile `p`
/// of a sorted sample `x[0..n]` sits at rank `r = p/100·(n−1)`, blending
/// `x[⌊r⌋]` and `x[⌈r⌉]`. Applying the same bounds twice is a no-op.
pub fn winsorize(values: &[f64], lower_pct: f64, upper_pct: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::data("cannot winsorize an empty sample"));
    }
    if !(0.0..=100.0).contains(&lower_pct)
        || !(0.0..=100.0).contains(&upper_pct)
        || lower_pct >= upper_pct
    {
        return Err(Error::config(format!(
            "winsorize bounds must satisfy 0 <= lower < upper <= 100, got ({lower_pct}, {upper_pct})"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("cannot winsorize non-finite values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let lo = percentile(&sorted, lower_pct);
    let hi = percentile(&sorted, upper_pct);
    Ok(values.iter().map(|&v| v.clamp(lo, hi)).collect())
}

/// Linear-interpolation percentile of an already-sorted sample.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Parse an event CSV into a validated, trading-day-aligned [`EventCatalog`].
///
/// Required columns: `date`, `protocol`, `chain`, `loss_usd`, `tvl_usd`,
/// `gas_gwei`, `session`; optional: `disclosure_date`. The session flag times
/// the event on the calendar:
///
/// * `regular` — the date must already be a trading day;
/// * `after_hours` / `weekend` — the event shifts to the next trading day
///   strictly after the recorded date (markets react at the next open).
///
/// A non-empty `disclosure_date` overrides the occurrence date as day zero;
/// it rolls forward to the first trading day at or after it, and the session
/// flag (which describes the attack, not the announcement) is not applied.
/// Alignment never produces a date off the calendar — events that would fall
/// past its end are errors.
pub fn parse_events(path: &Path, calendar: &TradingCalendar) -> Result<EventCatalog> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
            Error::data(format!("{}: missing required column '{name}'", path.display()))
        })
    };
    let c_date = col("date")?;
    let c_protocol = col("protocol")?;
    let c_chain = col("chain")?;
    let c_loss = col("loss_usd")?;
    let c_tvl = col("tvl_usd")?;
    let c_gas = col("gas_gwei")?;
    let c_session = col("session")?;
    let c_disclosure = headers.iter().position(|h| h.trim() == "disclosure_date");

    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let occurred = parse_date(&record[c_date], line)?;
        let session = record[c_session].trim();
        let disclosure = match c_disclosure.map(|i| record[i].trim()) {
            Some("") | None => None,
            Some(raw) => Some(parse_date(raw, line)?),
        };

        let date = match disclosure {
            Some(d) => calendar.on_or_after(d).ok_or_else(|| {
                Error::data(format!(
                    "line {line}: disclosure date {d} falls after the calendar ends"
                ))
            })?,
            None => match session {
                "regular" => {
                    if !calendar.contains(occurred) {
                        return Err(Error::data(format!(
                            "line {line}: regular-session event dated {occurred}, \
                             which is not a trading day"
                        )));
                    }
                    occurred
                }
                "after_hours" | "weekend" => {
                    calendar.next_after(occurred).ok_or_else(|| {
                        Error::data(format!(
                            "line {line}: event on {occurred} has no next trading day \
                             on the calendar"
                        ))
                    })?
                }
                other => {
                    return Err(Error::data(format!(
                        "line {line}: unknown session '{other}' \
                         (expected regular, after_hours, or weekend)"
                    )))
                }
            },
        };

        events.push(EventRecord {
            date,
            protocol: record[c_protocol].trim().to_string(),
            chain: record[c_chain].trim().to_string(),
            loss_usd: parse_value(record[c_loss].trim(), line)?,
            tvl_usd: parse_value(record[c_tvl].trim(), line)?,
            gas_gwei: parse_value(record[c_gas].trim(), line)?,
        });
    }
    EventCatalog::new(events)
}

/// Write a panel as `date,<column>,...` CSV; `NaN` becomes an empty cell.
///
/// [`read_panel_csv`] inverts this exactly: floats print in shortest
/// round-trip form.
pub fn write_panel_csv(panel: &MarketPanel, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    let names: Vec<&str> = panel.column_names().collect();
    let mut header = vec!["date"];
    header.extend(&names);
    writer.write_record(&header).map_err(csv_error)?;
    let columns: Vec<&[f64]> = names
        .iter()
        .map(|n| panel.column(n).expect("listed column exists"))
        .collect();
    for (i, day) in panel.dates().iter().enumerate() {
        let mut row = vec![day.to_string()];
        for col in &columns {
            row.push(format_cell(col[i]));
        }
        writer.write_record(&row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a panel written by [`write_panel_csv`]; empty cells become `NaN`.
///
/// The calendar is taken verbatim from the date column, which must be
/// strictly increasing.
pub fn read_panel_csv(path: &Path) -> Result<MarketPanel> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || headers[0].trim() != "date" {
        return Err(Error::data(format!(
            "{}: panel file must start with a 'date' column",
            path.display()
        )));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut dates = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        dates.push(parse_date(&record[0], line)?);
        for (j, cell) in record.iter().skip(1).enumerate() {
            let cell = cell.trim();
            let v = if cell.is_empty() { f64::NAN } else { parse_value(cell, line)? };
            columns[j].push(v);
        }
    }
    let mut panel = MarketPanel::new(TradingCalendar::from_days(dates)?);
    for (name, values) in names.into_iter().zip(columns) {
        panel.insert(name, values)?;
    }
    Ok(panel)
}

/// Write an event catalog in the layout [`parse_events`] reads.
///
/// Catalog dates are already trading-day aligned, so rows carry
/// `session=regular` and an empty `disclosure_date`; parsing the file back
/// against the same calendar reproduces the catalog exactly.
pub fn write_events_csv(catalog: &EventCatalog, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    writer
        .write_record([
            "date",
            "protocol",
            "chain",
            "loss_usd",
            "tvl_usd",
            "gas_gwei",
            "session",
            "disclosure_date",
        ])
        .map_err(csv_error)?;
    for ev in catalog.events() {
        writer
            .write_record([
                ev.date.to_string(),
                ev.protocol.clone(),
                ev.chain.clone(),
                format_cell(ev.loss_usd),
                format_cell(ev.tvl_usd),
                format_cell(ev.gas_gwei),
                "regular".to_string(),
                String::new(),
            ])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(csv_error)
}

fn csv_error(err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::data(format!("csv error: {other:?}")),
    }
}

fn parse_date(raw: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d")
        .map_err(|_| Error::data(format!("line {line}: unparseable date '{}'", raw.trim())))
}

fn parse_value(raw: &str, line: u64) -> Result<f64> {
    f64::from_str(raw)
        .map_err(|_| Error::data(format!("line {line}: unparseable value '{raw}'")))
}

/// Shortest-round-trip float formatting; `NaN` maps to the empty cell.
fn format_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}
