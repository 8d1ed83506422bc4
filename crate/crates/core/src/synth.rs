//! Deterministic synthetic market generators.
//!
//! Used by the test suites and handy for smoke-running the pipeline without
//! real data. Everything is seeded ChaCha so identical seeds give identical
//! series on every platform.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::calendar::TradingCalendar;
use crate::frame::{col, TimeSeriesFrame};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` consecutive weekdays starting on or after `start`.
pub fn weekday_calendar(start: NaiveDate, n: usize) -> TradingCalendar {
    let mut dates = Vec::with_capacity(n);
    let mut d = start;
    while dates.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    TradingCalendar::new(dates).expect("weekday calendar is increasing")
}

/// Stationary AR(1) around `mean`: x_t = mean + phi (x_{t-1} - mean) + sigma eps.
pub fn ar1_series(rng: &mut ChaCha8Rng, n: usize, mean: f64, phi: f64, sigma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut prev = mean;
    for _ in 0..n {
        let eps: f64 = StandardNormal.sample(rng);
        let x = mean + phi * (prev - mean) + sigma * eps;
        out.push(x);
        prev = x;
    }
    out
}

/// IID normal daily log returns with a mean shift at `break_at`.
pub fn mean_break_returns(
    rng: &mut ChaCha8Rng,
    n: usize,
    break_at: usize,
    mu_before: f64,
    mu_after: f64,
    sigma: f64,
) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let mu = if i < break_at { mu_before } else { mu_after };
            let eps: f64 = StandardNormal.sample(rng);
            mu + sigma * eps
        })
        .collect()
}

/// Price path from daily log returns: p_t = p_{t-1} exp(r_t).
pub fn prices_from_log_returns(p0: f64, returns: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.len() + 1);
    let mut p = p0;
    out.push(p);
    for r in returns {
        p *= r.exp();
        out.push(p);
    }
    out
}

/// Geometric-Brownian-ish daily prices.
pub fn gbm_prices(rng: &mut ChaCha8Rng, n: usize, p0: f64, drift: f64, vol: f64) -> Vec<f64> {
    let returns: Vec<f64> = (0..n.saturating_sub(1))
        .map(|_| {
            let eps: f64 = StandardNormal.sample(rng);
            drift + vol * eps
        })
        .collect();
    prices_from_log_returns(p0, &returns)
}

/// A small self-consistent market: equity price columns, a mean-reverting
/// "fear" index with a 4-tenor curve, and a slow-moving 5-tenor yield curve.
/// The frame carries every engine column so all model families enumerate.
pub fn synthetic_frame(seed: u64, n: usize, equities: &[&str]) -> TimeSeriesFrame {
    let mut r = rng(seed);
    let calendar = weekday_calendar(NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(), n);
    let mut frame = TimeSeriesFrame::new(calendar);

    for (i, asset) in equities.iter().enumerate() {
        let prices = gbm_prices(&mut r, n, 100.0 * (i + 1) as f64, 0.0003, 0.01);
        frame
            .add_column(col::price(asset), prices.into_iter().map(Some).collect())
            .unwrap();
    }

    // Fear index level and its futures curve: contango that steepens with
    // the level's distance from its mean.
    let vix_level = ar1_series(&mut r, n, 18.0, 0.97, 0.8);
    frame
        .add_column(
            col::price("vix"),
            vix_level.iter().map(|v| Some(v.max(5.0))).collect(),
        )
        .unwrap();
    let vix_tenors = [0.0, 1.0, 3.0, 6.0];
    let vix_rows: Vec<Vec<Option<f64>>> = vix_level
        .iter()
        .map(|lvl| {
            let lvl = lvl.max(5.0);
            vix_tenors
                .iter()
                .map(|m| Some(lvl + (20.0 - lvl) * 0.08 * m))
                .collect()
        })
        .collect();
    add_curve_columns(&mut frame, "vix", &vix_tenors, &vix_rows, 3.0);

    let yield_short = ar1_series(&mut r, n, 1.5, 0.995, 0.02);
    let yield_spread = ar1_series(&mut r, n, 1.2, 0.995, 0.015);
    let yield_tenors: [f64; 5] = [3.0, 12.0, 24.0, 60.0, 120.0];
    let yield_rows: Vec<Vec<Option<f64>>> = yield_short
        .iter()
        .zip(&yield_spread)
        .map(|(s, sp)| {
            yield_tenors
                .iter()
                .map(|&m| Some(s + sp * (m / 120.0).sqrt()))
                .collect()
        })
        .collect();
    add_curve_columns(&mut frame, "yield", &yield_tenors, &yield_rows, 24.0);

    frame
}

fn add_curve_columns(
    frame: &mut TimeSeriesFrame,
    kind: &str,
    tenors: &[f64],
    rows: &[Vec<Option<f64>>],
    cutoff: f64,
) {
    let slope: Vec<Option<f64>> = rows
        .iter()
        .map(|row| crate::ingest::estimate_slope(tenors, row))
        .collect();
    let (short, long): (Vec<_>, Vec<_>) = rows
        .iter()
        .map(|row| crate::ingest::short_long_split(cutoff, tenors, row))
        .unzip();
    frame.add_column(col::slope(kind), slope).unwrap();
    frame.add_column(col::short(kind), short).unwrap();
    frame.add_column(col::long(kind), long).unwrap();
}

/// Write a `date,close` CSV next to tests that drive the CLI.
pub fn price_csv_string(calendar: &TradingCalendar, prices: &[f64]) -> String {
    let mut out = String::from("date,close\n");
    for (i, p) in prices.iter().enumerate() {
        out.push_str(&format!("{},{}\n", calendar.date(i).format("%Y-%m-%d"), p));
    }
    out
}

/// Write a `date,m<x>,...` CSV for a curve given per-date rows.
pub fn curve_csv_string(
    calendar: &TradingCalendar,
    tenors: &[f64],
    rows: &[Vec<Option<f64>>],
) -> String {
    let mut out = String::from("date");
    for t in tenors {
        out.push_str(&format!(",m{t}"));
    }
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        out.push_str(&calendar.date(i).format("%Y-%m-%d").to_string());
        for v in row {
            match v {
                Some(v) => out.push_str(&format!(",{v}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Deterministic market bundle for CLI-level tests: equity + vix prices and
/// both curves as CSV strings.
pub struct CsvMarket {
    pub calendar: TradingCalendar,
    pub equity: String,
    pub vix: String,
    pub vix_curve: String,
    pub yield_curve: String,
}

pub fn csv_market(seed: u64, n: usize) -> CsvMarket {
    let mut r = rng(seed);
    let calendar = weekday_calendar(NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(), n);
    let equity = gbm_prices(&mut r, n, 100.0, 0.0003, 0.01);
    let vix_level: Vec<f64> = ar1_series(&mut r, n, 18.0, 0.97, 0.8)
        .into_iter()
        .map(|v| v.max(5.0))
        .collect();
    let vix_tenors = [0.0, 1.0, 3.0, 6.0];
    let vix_rows: Vec<Vec<Option<f64>>> = vix_level
        .iter()
        .map(|lvl| {
            vix_tenors
                .iter()
                .map(|m| Some(lvl + (20.0 - lvl) * 0.08 * m))
                .collect()
        })
        .collect();
    let yield_short = ar1_series(&mut r, n, 1.5, 0.995, 0.02);
    let yield_spread = ar1_series(&mut r, n, 1.2, 0.995, 0.015);
    let yield_tenors: [f64; 5] = [3.0, 12.0, 24.0, 60.0, 120.0];
    let yield_rows: Vec<Vec<Option<f64>>> = yield_short
        .iter()
        .zip(&yield_spread)
        .map(|(s, sp)| {
            yield_tenors
                .iter()
                .map(|&m| Some(s + sp * (m / 120.0).sqrt()))
                .collect()
        })
        .collect();
    CsvMarket {
        equity: price_csv_string(&calendar, &equity),
        vix: price_csv_string(&calendar, &vix_level),
        vix_curve: curve_csv_string(&calendar, &vix_tenors, &vix_rows),
        yield_curve: curve_csv_string(&calendar, &yield_tenors, &yield_rows),
        calendar,
    }
}
