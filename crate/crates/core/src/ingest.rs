//! Input loading and alignment: price and term-structure CSV files in,
//! a single aligned [`TimeSeriesFrame`] out.
//!
//! Price files carry a `date,close` header. Curve files carry
//! `date,m<x>,...` where `<x>` is the tenor in months (`m0` is allowed for a
//! spot level). Cells may be empty (missing); anything else must parse.
//! Rows may arrive in any order and are sorted by date; duplicate dates are
//! an error.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar::TradingCalendar;
use crate::error::{Error, Result};
use crate::frame::{col, TimeSeriesFrame};

/// Term-structure families the model classes know how to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CurveKind {
    Vix,
    Yield,
}

impl CurveKind {
    pub const ALL: [CurveKind; 2] = [CurveKind::Vix, CurveKind::Yield];

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Vix => "vix",
            CurveKind::Yield => "yield",
        }
    }

    pub fn parse(s: &str) -> Option<CurveKind> {
        match s {
            "vix" => Some(CurveKind::Vix),
            "yield" => Some(CurveKind::Yield),
            _ => None,
        }
    }

    /// Tenors up to and including this many months count as the short end.
    pub fn short_cutoff_months(self) -> f64 {
        match self {
            CurveKind::Vix => 3.0,
            CurveKind::Yield => 24.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PriceSeries {
    pub asset: String,
    /// Sorted by date; close present on every row kept.
    pub rows: BTreeMap<NaiveDate, f64>,
}

#[derive(Debug, Clone)]
pub struct CurveTable {
    pub kind: CurveKind,
    /// Tenors in months, strictly increasing.
    pub maturities: Vec<f64>,
    /// Sorted by date; one value slot per tenor.
    pub rows: BTreeMap<NaiveDate, Vec<Option<f64>>>,
}

fn parse_date(file: &str, row: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| Error::DataRow {
        file: file.to_string(),
        row,
        message: format!("malformed date {s:?} (expected YYYY-MM-DD)"),
    })
}

fn parse_cell(file: &str, row: usize, name: &str, s: &str) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::DataRow {
            file: file.to_string(),
            row,
            message: format!("non-numeric {name} cell {s:?}"),
        }),
    }
}

/// Load a `date,close` file. Prices must be strictly positive; empty close
/// cells are dropped (the date simply does not count as observed).
pub fn load_price_csv(path: impl AsRef<Path>, asset: &str) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::data(format!("{file}: {e}")))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("{file}: {e}")))?
        .clone();
    let fields: Vec<&str> = headers.iter().collect();
    if fields != ["date", "close"] {
        return Err(Error::data(format!(
            "{file}: expected header `date,close`, found {:?}",
            fields.join(",")
        )));
    }

    let mut rows = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // header is row 1
        let record = record.map_err(|e| Error::DataRow {
            file: file.clone(),
            row,
            message: e.to_string(),
        })?;
        let date = parse_date(&file, row, &record[0])?;
        let close = parse_cell(&file, row, "close", &record[1])?;
        if let Some(px) = close {
            if px <= 0.0 {
                return Err(Error::DataRow {
                    file: file.clone(),
                    row,
                    message: format!("non-positive close {px}"),
                });
            }
            if rows.insert(date, px).is_some() {
                return Err(Error::DataRow {
                    file: file.clone(),
                    row,
                    message: format!("duplicate date {date}"),
                });
            }
        }
    }
    Ok(PriceSeries {
        asset: asset.to_string(),
        rows,
    })
}

/// Load a `date,m<x>,...` term-structure file. Columns are reordered by
/// tenor if needed; duplicate tenors or dates are errors.
pub fn load_curve_csv(path: impl AsRef<Path>, kind: CurveKind) -> Result<CurveTable> {
    let path = path.as_ref();
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::data(format!("{file}: {e}")))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("{file}: {e}")))?
        .clone();
    let fields: Vec<String> = headers.iter().map(|s| s.to_string()).collect();
    if fields.first().map(String::as_str) != Some("date") || fields.len() < 2 {
        return Err(Error::data(format!(
            "{file}: expected header `date,m<months>,...`"
        )));
    }
    let mut tenor_cols: Vec<(f64, usize)> = Vec::new();
    for (j, name) in fields.iter().enumerate().skip(1) {
        let months = name
            .strip_prefix('m')
            .and_then(|m| m.parse::<f64>().ok())
            .filter(|m| m.is_finite() && *m >= 0.0)
            .ok_or_else(|| {
                Error::data(format!(
                    "{file}: bad tenor column {name:?} (expected m<months>)"
                ))
            })?;
        if tenor_cols.iter().any(|(m, _)| *m == months) {
            return Err(Error::data(format!("{file}: duplicate tenor {name}")));
        }
        tenor_cols.push((months, j));
    }
    tenor_cols.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let maturities: Vec<f64> = tenor_cols.iter().map(|(m, _)| *m).collect();

    let mut rows: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::DataRow {
            file: file.clone(),
            row,
            message: e.to_string(),
        })?;
        let date = parse_date(&file, row, &record[0])?;
        let mut values = Vec::with_capacity(tenor_cols.len());
        for (months, j) in &tenor_cols {
            values.push(parse_cell(&file, row, &format!("m{months}"), &record[*j])?);
        }
        if rows.insert(date, values).is_some() {
            return Err(Error::DataRow {
                file: file.clone(),
                row,
                message: format!("duplicate date {date}"),
            });
        }
    }
    Ok(CurveTable {
        kind,
        maturities,
        rows,
    })
}

/// k-day log return stamped on the end date: `out[t] = ln p[t] - ln p[t-k]`.
/// Entries without both prices are missing.
pub fn log_return(prices: &[Option<f64>], k: usize) -> Vec<Option<f64>> {
    assert!(k >= 1, "log_return needs a horizon of at least one day");
    let mut out = vec![None; prices.len()];
    for t in k..prices.len() {
        if let (Some(p1), Some(p0)) = (prices[t], prices[t - k]) {
            out[t] = Some(p1.ln() - p0.ln());
        }
    }
    out
}

/// Least-squares slope of curve levels on tenor (months). Needs at least two
/// present points with distinct tenors.
pub fn estimate_slope(maturities: &[f64], values: &[Option<f64>]) -> Option<f64> {
    let points: Vec<(f64, f64)> = maturities
        .iter()
        .zip(values)
        .filter_map(|(m, v)| v.map(|v| (*m, v)))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Mean level of the short end (tenor <= cutoff, inclusive) and the long end
/// (tenor > cutoff). A side with no present values is missing.
pub fn short_long_split(
    cutoff_months: f64,
    maturities: &[f64],
    values: &[Option<f64>],
) -> (Option<f64>, Option<f64>) {
    let mut short = (0.0, 0usize);
    let mut long = (0.0, 0usize);
    for (m, v) in maturities.iter().zip(values) {
        if let Some(v) = v {
            if *m <= cutoff_months {
                short.0 += v;
                short.1 += 1;
            } else {
                long.0 += v;
                long.1 += 1;
            }
        }
    }
    let mean = |(s, n): (f64, usize)| if n > 0 { Some(s / n as f64) } else { None };
    (mean(short), mean(long))
}

/// Inner-join all inputs on dates and derive the engine columns.
///
/// The calendar is the intersection of every input's observed dates. With
/// `forward_fill_curves` a curve counts as observing every price date from
/// its first row onward, each tenor carrying its last known value forward;
/// without it, only dates where the curve has a row survive the join.
pub fn align_inner(
    prices: &[PriceSeries],
    curves: &[CurveTable],
    forward_fill_curves: bool,
) -> Result<TimeSeriesFrame> {
    if prices.is_empty() {
        return Err(Error::data("alignment needs at least one price series"));
    }

    let mut dates: Vec<NaiveDate> = prices[0].rows.keys().copied().collect();
    for p in &prices[1..] {
        dates.retain(|d| p.rows.contains_key(d));
    }
    for c in curves {
        if forward_fill_curves {
            if let Some(first) = c.rows.keys().next() {
                dates.retain(|d| d >= first);
            } else {
                dates.clear();
            }
        } else {
            dates.retain(|d| c.rows.contains_key(d));
        }
    }
    if dates.is_empty() {
        return Err(Error::data(
            "inner join of inputs produced an empty calendar",
        ));
    }

    let calendar = TradingCalendar::new(dates.clone())?;
    let mut frame = TimeSeriesFrame::new(calendar);

    for p in prices {
        let series: Vec<Option<f64>> = dates.iter().map(|d| p.rows.get(d).copied()).collect();
        frame.add_column(col::price(&p.asset), series)?;
    }

    for c in curves {
        let sampled = sample_curve(c, &dates, forward_fill_curves);
        let slope: Vec<Option<f64>> = sampled
            .iter()
            .map(|row| estimate_slope(&c.maturities, row))
            .collect();
        let cutoff = c.kind.short_cutoff_months();
        let (short, long): (Vec<_>, Vec<_>) = sampled
            .iter()
            .map(|row| short_long_split(cutoff, &c.maturities, row))
            .unzip();
        frame.add_column(col::slope(c.kind.name()), slope)?;
        frame.add_column(col::short(c.kind.name()), short)?;
        frame.add_column(col::long(c.kind.name()), long)?;
    }

    Ok(frame)
}

/// Curve row per aligned date, optionally carrying each tenor's last known
/// value forward.
fn sample_curve(
    curve: &CurveTable,
    dates: &[NaiveDate],
    forward_fill: bool,
) -> Vec<Vec<Option<f64>>> {
    let n_tenors = curve.maturities.len();
    if !forward_fill {
        return dates
            .iter()
            .map(|d| {
                curve
                    .rows
                    .get(d)
                    .cloned()
                    .unwrap_or_else(|| vec![None; n_tenors])
            })
            .collect();
    }
    let mut out = Vec::with_capacity(dates.len());
    let mut carried: Vec<Option<f64>> = vec![None; n_tenors];
    let mut rows = curve.rows.iter().peekable();
    for d in dates {
        while let Some((rd, values)) = rows.peek() {
            if *rd > d {
                break;
            }
            for (slot, v) in carried.iter_mut().zip(values.iter()) {
                if v.is_some() {
                    *slot = *v;
                }
            }
            rows.next();
        }
        out.push(carried.clone());
    }
    out
}

/// Write an aligned frame to CSV (`date` plus one column per series; empty
/// cells mark missing values).
pub fn write_frame_csv(frame: &TimeSeriesFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::data(format!("{e}")))?;
    let mut header = vec!["date".to_string()];
    header.extend(frame.names().iter().cloned());
    w.write_record(&header)
        .map_err(|e| Error::data(format!("{e}")))?;
    let columns: Vec<&[Option<f64>]> = frame
        .names()
        .iter()
        .map(|n| frame.column(n).unwrap())
        .collect();
    for i in 0..frame.len() {
        let mut rec = vec![frame.calendar().date(i).format("%Y-%m-%d").to_string()];
        for c in &columns {
            rec.push(match c[i] {
                Some(v) => format!("{v}"),
                None => String::new(),
            });
        }
        w.write_record(&rec).map_err(|e| Error::data(format!("{e}")))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Read a frame previously written by [`write_frame_csv`].
pub fn read_frame_csv(path: impl AsRef<Path>) -> Result<TimeSeriesFrame> {
    let path = path.as_ref();
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::data(format!("{file}: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("{file}: {e}")))?
        .clone();
    let names: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
    if headers.iter().next() != Some("date") || names.is_empty() {
        return Err(Error::data(format!(
            "{file}: expected header `date,<column>,...`"
        )));
    }

    let mut dates = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::DataRow {
            file: file.clone(),
            row,
            message: e.to_string(),
        })?;
        let date = parse_date(&file, row, &record[0])?;
        if dates.last().is_some_and(|last| *last == date) {
            return Err(Error::DataRow {
                file: file.clone(),
                row,
                message: format!("duplicate date {date}"),
            });
        }
        dates.push(date);
        for (j, name) in names.iter().enumerate() {
            columns[j].push(parse_cell(&file, row, name, &record[j + 1])?);
        }
    }
    let mut sorted: Vec<usize> = (0..dates.len()).collect();
    sorted.sort_by_key(|&i| dates[i]);
    let calendar = TradingCalendar::new(sorted.iter().map(|&i| dates[i]).collect())?;
    let mut frame = TimeSeriesFrame::new(calendar);
    for (name, column) in names.iter().zip(columns) {
        let reordered: Vec<Option<f64>> = sorted.iter().map(|&i| column[i]).collect();
        frame.add_column(name.clone(), reordered)?;
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_day_log_return_matches_direct_computation() {
        let prices = vec![Some(100.0), Some(110.0), Some(121.0)];
        let r = log_return(&prices, 2);
        assert_eq!(r[0], None);
        assert_eq!(r[1], None);
        let expected = (121.0f64 / 100.0).ln(); // 0.19062...
        assert_relative_eq!(r[2].unwrap(), expected, max_relative = 1e-15);
        assert_relative_eq!(r[2].unwrap(), 0.19062035960864987, max_relative = 1e-12);
    }

    #[test]
    fn log_return_skips_missing_prices() {
        let prices = vec![Some(100.0), None, Some(121.0), Some(130.0)];
        let r = log_return(&prices, 1);
        assert_eq!(r[1], None);
        assert_eq!(r[2], None);
        assert!(r[3].is_some());
    }

    #[test]
    fn slope_of_three_point_curve() {
        // Hand-solved least squares: slope 3.5, since mean tenor is 2 and
        // sum (x-2)(y-13) = 7 over sum (x-2)^2 = 2.
        let m = [1.0, 2.0, 3.0];
        let v = [Some(10.0), Some(12.0), Some(17.0)];
        assert_relative_eq!(estimate_slope(&m, &v).unwrap(), 3.5, max_relative = 1e-15);
    }

    #[test]
    fn slope_needs_two_distinct_tenors() {
        assert_eq!(estimate_slope(&[1.0], &[Some(10.0)]), None);
        assert_eq!(
            estimate_slope(&[2.0, 2.0], &[Some(10.0), Some(11.0)]),
            None
        );
        assert_eq!(estimate_slope(&[1.0, 2.0], &[Some(10.0), None]), None);
    }

    #[test]
    fn short_long_split_inclusive_cutoff() {
        let m = [1.0, 3.0, 5.0, 7.0];
        let v = [Some(18.0), Some(20.0), Some(24.0), Some(26.0)];
        let (short, long) = short_long_split(3.0, &m, &v);
        assert_eq!(short, Some(19.0));
        assert_eq!(long, Some(25.0));
    }

    #[test]
    fn short_long_split_empty_side_is_missing() {
        let (short, long) = short_long_split(3.0, &[5.0, 7.0], &[Some(1.0), Some(2.0)]);
        assert_eq!(short, None);
        assert_eq!(long, Some(1.5));
    }

    proptest::proptest! {
        #[test]
        fn log_return_is_scale_invariant(
            scale in 0.5f64..100.0,
            raw in proptest::collection::vec(1.0f64..500.0, 3..40),
            k in 1usize..4,
        ) {
            let p1: Vec<Option<f64>> = raw.iter().map(|v| Some(*v)).collect();
            let p2: Vec<Option<f64>> = raw.iter().map(|v| Some(*v * scale)).collect();
            for (a, b) in log_return(&p1, k).iter().zip(log_return(&p2, k)) {
                match (a, b) {
                    (Some(x), Some(y)) => proptest::prop_assert!((x - y).abs() <= 1e-12),
                    (None, None) => {}
                    _ => proptest::prop_assert!(false, "presence mismatch"),
                }
            }
        }

        #[test]
        fn slope_is_level_shift_invariant(
            shift in -50.0f64..50.0,
            ys in proptest::collection::vec(-20.0f64..20.0, 3..9),
        ) {
            let m: Vec<f64> = (0..ys.len()).map(|i| (i + 1) as f64).collect();
            let v1: Vec<Option<f64>> = ys.iter().map(|y| Some(*y)).collect();
            let v2: Vec<Option<f64>> = ys.iter().map(|y| Some(*y + shift)).collect();
            let s1 = estimate_slope(&m, &v1).unwrap();
            let s2 = estimate_slope(&m, &v2).unwrap();
            proptest::prop_assert!((s1 - s2).abs() <= 1e-10 * (1.0 + s1.abs()));
        }
    }

    #[test]
    fn price_loader_validates_rows() {
        let ok = write_tmp("date,close\n2020-01-02,100.5\n2020-01-01,99.0\n");
        let series = load_price_csv(ok.path(), "a").unwrap();
        // Rows arrive unsorted and come back ordered by date.
        let dates: Vec<_> = series.rows.keys().collect();
        assert!(dates[0] < dates[1]);

        let dup = write_tmp("date,close\n2020-01-02,100.5\n2020-01-02,99.0\n");
        let err = load_price_csv(dup.path(), "a").unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        assert!(err.to_string().contains("duplicate"), "{err}");

        let bad_date = write_tmp("date,close\n01/02/2020,100.5\n");
        let err = load_price_csv(bad_date.path(), "a").unwrap_err();
        assert!(err.to_string().contains("malformed date"), "{err}");

        let bad_cell = write_tmp("date,close\n2020-01-02,abc\n");
        let err = load_price_csv(bad_cell.path(), "a").unwrap_err();
        assert!(err.to_string().contains("non-numeric"), "{err}");

        let bad_header = write_tmp("date,px\n2020-01-02,100.5\n");
        assert!(load_price_csv(bad_header.path(), "a").is_err());

        let negative = write_tmp("date,close\n2020-01-02,-3\n");
        assert!(load_price_csv(negative.path(), "a").is_err());
    }

    #[test]
    fn curve_loader_sorts_tenors_and_flags_duplicates() {
        let f = write_tmp("date,m12,m3\n2020-01-02,2.0,1.0\n");
        let curve = load_curve_csv(f.path(), CurveKind::Yield).unwrap();
        assert_eq!(curve.maturities, vec![3.0, 12.0]);
        let row = curve.rows.values().next().unwrap();
        assert_eq!(row, &vec![Some(1.0), Some(2.0)]);

        let dup = write_tmp("date,m3,m3\n2020-01-02,2.0,1.0\n");
        assert!(load_curve_csv(dup.path(), CurveKind::Yield).is_err());

        let bad = write_tmp("date,x3\n2020-01-02,2.0\n");
        assert!(load_curve_csv(bad.path(), CurveKind::Yield).is_err());
    }

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn price(asset: &str, rows: &[(&str, f64)]) -> PriceSeries {
        PriceSeries {
            asset: asset.to_string(),
            rows: rows.iter().map(|(s, v)| (d(s), *v)).collect(),
        }
    }

    #[test]
    fn inner_join_keeps_only_common_dates() {
        let a = price("a", &[("2020-01-01", 1.0), ("2020-01-02", 2.0), ("2020-01-03", 3.0)]);
        let b = price("b", &[("2020-01-02", 5.0), ("2020-01-03", 6.0), ("2020-01-04", 7.0)]);
        let frame = align_inner(&[a, b], &[], false).unwrap();
        assert_eq!(frame.len(), 2);
        assert_eq!(frame.calendar().date(0), d("2020-01-02"));
        assert_eq!(frame.column("px:a").unwrap()[0], Some(2.0));
        assert_eq!(frame.column("px:b").unwrap()[1], Some(6.0));
    }

    #[test]
    fn curve_join_without_fill_drops_gap_days() {
        let a = price("a", &[("2020-01-01", 1.0), ("2020-01-02", 2.0), ("2020-01-03", 3.0)]);
        let mut rows = BTreeMap::new();
        rows.insert(d("2020-01-01"), vec![Some(10.0), Some(12.0)]);
        rows.insert(d("2020-01-03"), vec![Some(11.0), Some(15.0)]);
        let curve = CurveTable {
            kind: CurveKind::Vix,
            maturities: vec![1.0, 4.0],
            rows,
        };
        let frame = align_inner(&[a.clone()], &[curve.clone()], false).unwrap();
        assert_eq!(frame.len(), 2);

        let filled = align_inner(&[a], &[curve], true).unwrap();
        assert_eq!(filled.len(), 3);
        // Gap day carries the previous slope forward.
        let slope = filled.column("slope:vix").unwrap();
        assert_relative_eq!(slope[0].unwrap(), 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(slope[1].unwrap(), slope[0].unwrap(), max_relative = 1e-15);
        assert_relative_eq!(slope[2].unwrap(), 4.0 / 3.0, max_relative = 1e-12);
        // Short end is the 1-month tenor, long end the 4-month tenor.
        assert_eq!(filled.column("short:vix").unwrap()[2], Some(11.0));
        assert_eq!(filled.column("long:vix").unwrap()[2], Some(15.0));
    }

    #[test]
    fn empty_intersection_is_an_error() {
        let a = price("a", &[("2020-01-01", 1.0)]);
        let b = price("b", &[("2020-01-02", 5.0)]);
        assert!(align_inner(&[a, b], &[], false).is_err());
    }

    #[test]
    fn frame_csv_roundtrip_is_lossless() {
        let a = price("a", &[("2020-01-01", 1.5), ("2020-01-02", 2.25)]);
        let frame = align_inner(&[a], &[], false).unwrap();
        let tmp = tempfile::NamedTempFile::new().unwrap();
        write_frame_csv(&frame, tmp.path()).unwrap();
        let back = read_frame_csv(tmp.path()).unwrap();
        assert_eq!(back.names(), frame.names());
        assert_eq!(back.column("px:a").unwrap(), frame.column("px:a").unwrap());
        assert_eq!(back.calendar().dates(), frame.calendar().dates());
    }
}
