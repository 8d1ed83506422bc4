//! Aligned data container: one shared trading calendar plus named daily
//! columns. Missing values are explicit (`None`) so burn-in gaps and sparse
//! curve days stay visible instead of being silently imputed.

use crate::calendar::TradingCalendar;
use crate::error::{Error, Result};

/// Column naming scheme used throughout the engine.
///
/// * `px:<asset>` — close price level, strictly positive where present
/// * `slope:<curve>` — fitted daily term-structure slope
/// * `short:<curve>` / `long:<curve>` — mean level of the short / long end
pub mod col {
    pub fn price(asset: &str) -> String {
        format!("px:{asset}")
    }
    pub fn slope(curve: &str) -> String {
        format!("slope:{curve}")
    }
    pub fn short(curve: &str) -> String {
        format!("short:{curve}")
    }
    pub fn long(curve: &str) -> String {
        format!("long:{curve}")
    }
    pub fn is_price(name: &str) -> bool {
        name.starts_with("px:")
    }
}

#[derive(Debug, Clone)]
pub struct TimeSeriesFrame {
    calendar: TradingCalendar,
    names: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
}

impl TimeSeriesFrame {
    pub fn new(calendar: TradingCalendar) -> Self {
        TimeSeriesFrame {
            calendar,
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn len(&self) -> usize {
        self.calendar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calendar.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Add a column. Price columns (`px:*`) must be strictly positive where
    /// present; every column must match the calendar length.
    pub fn add_column(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        let name = name.into();
        if values.len() != self.calendar.len() {
            return Err(Error::data(format!(
                "column {name}: {} values for a calendar of {} days",
                values.len(),
                self.calendar.len()
            )));
        }
        if self.names.iter().any(|n| *n == name) {
            return Err(Error::data(format!("duplicate column {name}")));
        }
        for (i, v) in values.iter().enumerate() {
            if let Some(x) = v {
                if !x.is_finite() {
                    return Err(Error::data(format!(
                        "column {name}: non-finite value on {}",
                        self.calendar.date(i)
                    )));
                }
                if col::is_price(&name) && *x <= 0.0 {
                    return Err(Error::data(format!(
                        "column {name}: non-positive price {x} on {}",
                        self.calendar.date(i)
                    )));
                }
            }
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        let idx = self.names.iter().position(|n| n == name)?;
        Some(&self.columns[idx])
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }
}

/// Read-only view over a slice of daily values that refuses to serve
/// anything after its cut-off. Model fitting and selection go through views
/// so a forecast made at `t` physically cannot touch data dated after `t`.
#[derive(Clone, Copy)]
pub struct GuardedSeries<'a> {
    values: &'a [Option<f64>],
    limit: usize,
}

impl<'a> GuardedSeries<'a> {
    pub fn new(values: &'a [Option<f64>], limit: usize) -> Self {
        GuardedSeries { values, limit }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    /// Value at `idx`; panics if the caller reaches past the cut-off,
    /// because that is a bug in the engine rather than a data condition.
    pub fn at(&self, idx: usize) -> Option<f64> {
        assert!(
            idx <= self.limit,
            "look-ahead violation: index {idx} requested with cut-off {}",
            self.limit
        );
        self.values.get(idx).copied().flatten()
    }
}
