//! Forecast-driven holding weights, daily P&L, and performance metrics.
//!
//! The trading rule is deliberately simple so that any edge comes from the
//! forecasts, not the execution layer: each day the book holds a long-only
//! weight built from the signs of the `k` forecasts currently in flight
//! (those made on the last `k` days, each targeting a future date), and
//! earns that weight times the next day's simple return. A cross-asset
//! variant adds a volatility-index leg sized from the same signals.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Sign of a forecast: +1 long-signal, −1 short-signal, 0 for an exact zero
/// or a missing forecast (both contribute nothing to the weight).
pub fn sign_indicator(forecast: Option<f64>) -> i8 {
    match forecast {
        Some(f) if f > 0.0 => 1,
        Some(f) if f < 0.0 => -1,
        _ => 0,
    }
}

/// Long-only holding weight from `k` sign indicators:
/// `w = 1/2 + (1/2k)·Σ(sign)`, so `w ∈ [0, 1]` and deviations from 1/2 come
/// in steps of `1/(2k)`.
pub fn holding_weight(signals: &[i8]) -> f64 {
    let k = signals.len();
    assert!(k >= 1, "holding_weight needs at least one signal");
    let sum: i32 = signals.iter().map(|&s| s as i32).sum();
    0.5 + sum as f64 / (2.0 * k as f64)
}

/// Hedge sizing for the cross-asset strategy: the hedge horizon `k*` is a
/// fixed multiple of the forecast horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KStar {
    ThreeK,
    SixK,
}

impl KStar {
    pub fn multiplier(self) -> usize {
        match self {
            KStar::ThreeK => 3,
            KStar::SixK => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KStar::ThreeK => "3k",
            KStar::SixK => "6k",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "3k" => Ok(KStar::ThreeK),
            "6k" => Ok(KStar::SixK),
            other => Err(Error::config(format!(
                "unknown k* choice {other:?} (expected \"3k\" or \"6k\")"
            ))),
        }
    }
}

/// Cross-asset weights from the equity forecasts' signs only:
/// `w_S = 1/2 + (1/2k)·Σ𝟙[ŷ>0]` (never below the 1/2 baseline) and
/// `w_V = Σ𝟙[ŷ>0] / k*` on the volatility index.
pub fn cas_weights(signals: &[i8], k_star: KStar) -> (f64, f64) {
    let k = signals.len();
    assert!(k >= 1, "cas_weights needs at least one signal");
    let positive = signals.iter().filter(|&&s| s > 0).count();
    let w_s = 0.5 + positive as f64 / (2.0 * k as f64);
    let w_v = positive as f64 / (k_star.multiplier() * k) as f64;
    (w_s, w_v)
}

/// Simple return from one price to the next.
fn simple_return(prev: f64, next: f64) -> f64 {
    (next - prev) / prev
}

fn price_at(prices: &[Option<f64>], t: usize, what: &str) -> Result<f64> {
    prices
        .get(t)
        .copied()
        .flatten()
        .ok_or_else(|| Error::data(format!("{what} price missing at index {t}")))
}

/// P&L of a weight stream: `weights_at[t]` is the weight decided on date
/// `t`; it earns that weight times the simple return realised over
/// `(t, t+1]`. Returns one π per date in the inclusive `range`, so the
/// decision series must extend one day before the range.
pub fn pnl_from_decided_weights(
    weights_at: &[Option<f64>],
    prices: &[Option<f64>],
    range: (usize, usize),
) -> Result<Vec<f64>> {
    let (s, e) = range;
    if s == 0 || s > e {
        return Err(Error::config(format!(
            "p&l range {range:?} is empty or has no room for a prior-day weight"
        )));
    }
    let mut pnl = Vec::with_capacity(e - s + 1);
    for t in s..=e {
        let w = weights_at
            .get(t - 1)
            .copied()
            .flatten()
            .ok_or_else(|| Error::data(format!("no weight decided at index {}", t - 1)))?;
        let prev = price_at(prices, t - 1, "asset")?;
        let next = price_at(prices, t, "asset")?;
        pnl.push(w * simple_return(prev, next));
    }
    Ok(pnl)
}

/// How the maximum drawdown is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MddMode {
    /// Peak-to-trough of the cumulative-wealth curve `W_t = Π(1+π_τ)`,
    /// with the pre-trade baseline `W_0 = 1` included in the running peak.
    CumulativeWealth,
    /// The per-period form `min_t((π_t+1)/max_{τ≤t}(π_τ+1) − 1)`, applied
    /// to the raw daily returns.
    PerPeriod,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n−1 divisor); 0 for fewer than two points.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Annualised return: 252 × mean daily π.
pub fn annualized_return(pnl: &[f64]) -> f64 {
    TRADING_DAYS_PER_YEAR * mean(pnl)
}

/// Annualised Sharpe ratio `√252·m/s`; `None` when the series is shorter
/// than two days or has zero variance (an undefined score, not a zero one).
pub fn sharpe_ratio(pnl: &[f64]) -> Option<f64> {
    if pnl.len() < 2 {
        return None;
    }
    let s = sample_std(pnl);
    if s == 0.0 {
        return None;
    }
    Some(TRADING_DAYS_PER_YEAR.sqrt() * mean(pnl) / s)
}

/// Order Sharpe ratios with undefined scores below every finite one; the
/// single ordering used everywhere a ranking happens.
pub fn compare_sr(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Greater,
        (None, Some(_)) => Ordering::Less,
        (None, None) => Ordering::Equal,
    }
}

/// Maximum drawdown; ≤ 0, and 0 exactly when nothing ever dips below a
/// previous peak.
pub fn max_drawdown(pnl: &[f64], mode: MddMode) -> f64 {
    let mut worst = 0.0f64;
    match mode {
        MddMode::CumulativeWealth => {
            let mut wealth = 1.0f64;
            let mut peak = 1.0f64;
            for &p in pnl {
                wealth *= 1.0 + p;
                peak = peak.max(wealth);
                worst = worst.min(wealth / peak - 1.0);
            }
        }
        MddMode::PerPeriod => {
            let mut peak = f64::NEG_INFINITY;
            for &p in pnl {
                let level = p + 1.0;
                peak = peak.max(level);
                worst = worst.min(level / peak - 1.0);
            }
        }
    }
    worst
}

/// Cumulative wealth curve, one point per π (baseline of 1 not included).
pub fn cumulative_wealth(pnl: &[f64]) -> Vec<f64> {
    let mut wealth = 1.0;
    pnl.iter()
        .map(|&p| {
            wealth *= 1.0 + p;
            wealth
        })
        .collect()
}

/// Summary of a π series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sr: Option<f64>,
    pub anr: f64,
    pub mdd: f64,
    pub n_days: usize,
}

pub fn metrics(pnl: &[f64], mode: MddMode) -> Metrics {
    Metrics {
        sr: sharpe_ratio(pnl),
        anr: annualized_return(pnl),
        mdd: max_drawdown(pnl, mode),
        n_days: pnl.len(),
    }
}

/// A strategy's realised path over an evaluation range: the weight held on
/// each date (decided the previous trading day), the optional hedge-leg
/// weight, and the daily π. `start_idx` is the global calendar index of the
/// first entry, so records slice cleanly against the shared calendar.
#[derive(Debug, Clone)]
pub struct StrategyRecord {
    pub id: String,
    pub asset: String,
    pub horizon: usize,
    pub method: String,
    pub start_idx: usize,
    pub weight: Vec<f64>,
    pub weight_vix: Option<Vec<f64>>,
    pub pnl: Vec<f64>,
    /// Sign panels that had at least one missing forecast (contributed 0).
    pub missing_signals: usize,
}

impl StrategyRecord {
    pub fn len(&self) -> usize {
        self.pnl.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pnl.is_empty()
    }

    /// Inclusive global range covered by the record.
    pub fn range(&self) -> (usize, usize) {
        (self.start_idx, self.start_idx + self.pnl.len() - 1)
    }

    pub fn pnl_at(&self, t: usize) -> Option<f64> {
        t.checked_sub(self.start_idx)
            .and_then(|i| self.pnl.get(i))
            .copied()
    }

    pub fn weight_at(&self, t: usize) -> Option<f64> {
        t.checked_sub(self.start_idx)
            .and_then(|i| self.weight.get(i))
            .copied()
    }

    pub fn weight_vix_at(&self, t: usize) -> Option<f64> {
        let v = self.weight_vix.as_ref()?;
        t.checked_sub(self.start_idx).and_then(|i| v.get(i)).copied()
    }

    /// π over an inclusive global sub-range, if fully covered.
    pub fn pnl_slice(&self, range: (usize, usize)) -> Option<&[f64]> {
        let (s, e) = range;
        if s > e || s < self.start_idx {
            return None;
        }
        let lo = s - self.start_idx;
        let hi = e - self.start_idx;
        if hi >= self.pnl.len() {
            return None;
        }
        Some(&self.pnl[lo..=hi])
    }

    pub fn metrics(&self, mode: MddMode) -> Metrics {
        metrics(&self.pnl, mode)
    }
}

/// Sign panel for a decision at date `t`: the forecasts made on dates
/// `t, t−1, …, t−k+1` (each still targeting a future date). Returns the
/// signals plus whether any forecast was missing.
fn sign_panel(forecast_at: &[Option<f64>], t: usize, k: usize) -> (Vec<i8>, bool) {
    let mut signals = Vec::with_capacity(k);
    let mut missing = false;
    for j in 0..k {
        let f = t
            .checked_sub(j)
            .and_then(|origin| forecast_at.get(origin).copied().flatten());
        if f.is_none() {
            missing = true;
        }
        signals.push(sign_indicator(f));
    }
    (signals, missing)
}

/// Build the long-only record for one asset and horizon. `forecast_at[t]`
/// is the adapted forecast decided at date `t`; π is produced for every
/// date in the inclusive `range`, which therefore needs decisions back to
/// `range.0 − k` (an error otherwise, to keep warm-up bugs loud).
pub fn long_only_record(
    id: impl Into<String>,
    asset: impl Into<String>,
    method: impl Into<String>,
    horizon: usize,
    forecast_at: &[Option<f64>],
    prices: &[Option<f64>],
    range: (usize, usize),
) -> Result<StrategyRecord> {
    let (s, e) = range;
    if s > e {
        return Err(Error::config(format!("empty evaluation range {range:?}")));
    }
    if s < horizon {
        return Err(Error::config(format!(
            "range starts at {s} but the first sign panel needs forecasts from index {}",
            s as i64 - horizon as i64
        )));
    }
    let mut weights = vec![None; e]; // decisions for dates s−1 .. e−1
    let mut missing_signals = 0;
    for t in s - 1..e {
        let (signals, missing) = sign_panel(forecast_at, t, horizon);
        if missing {
            missing_signals += 1;
        }
        weights[t] = Some(holding_weight(&signals));
    }
    let pnl = pnl_from_decided_weights(&weights, prices, range)?;
    let held: Vec<f64> = (s - 1..e).map(|t| weights[t].unwrap()).collect();
    Ok(StrategyRecord {
        id: id.into(),
        asset: asset.into(),
        horizon,
        method: method.into(),
        start_idx: s,
        weight: held,
        weight_vix: None,
        pnl,
        missing_signals,
    })
}

/// Build the cross-asset hedged record: equity leg sized like the long-only
/// rule but floored at 1/2, plus a volatility-index leg earning the index's
/// own simple return.
pub fn cas_record(
    id: impl Into<String>,
    asset: impl Into<String>,
    method: impl Into<String>,
    horizon: usize,
    k_star: KStar,
    forecast_at: &[Option<f64>],
    prices: &[Option<f64>],
    vix_prices: &[Option<f64>],
    range: (usize, usize),
) -> Result<StrategyRecord> {
    let (s, e) = range;
    if s > e {
        return Err(Error::config(format!("empty evaluation range {range:?}")));
    }
    if s < horizon {
        return Err(Error::config(format!(
            "range starts at {s} but the first sign panel needs forecasts from index {}",
            s as i64 - horizon as i64
        )));
    }
    let mut missing_signals = 0;
    let mut held = Vec::with_capacity(e - s + 1);
    let mut held_vix = Vec::with_capacity(e - s + 1);
    let mut pnl = Vec::with_capacity(e - s + 1);
    for t in s..=e {
        let (signals, missing) = sign_panel(forecast_at, t - 1, horizon);
        if missing {
            missing_signals += 1;
        }
        let (w_s, w_v) = cas_weights(&signals, k_star);
        let eq = w_s * simple_return(price_at(prices, t - 1, "asset")?, price_at(prices, t, "asset")?);
        let vix = w_v
            * simple_return(
                price_at(vix_prices, t - 1, "hedge index")?,
                price_at(vix_prices, t, "hedge index")?,
            );
        held.push(w_s);
        held_vix.push(w_v);
        pnl.push(eq + vix);
    }
    Ok(StrategyRecord {
        id: id.into(),
        asset: asset.into(),
        horizon,
        method: method.into(),
        start_idx: s,
        weight: held,
        weight_vix: Some(held_vix),
        pnl,
        missing_signals,
    })
}

/// Benchmark: a constant 1/2 holding of one asset.
pub fn benchmark_half_record(
    asset: impl Into<String>,
    prices: &[Option<f64>],
    range: (usize, usize),
) -> Result<StrategyRecord> {
    let asset = asset.into();
    let (s, e) = range;
    if s == 0 || s > e {
        return Err(Error::config(format!("empty or too-early range {range:?}")));
    }
    let weights = vec![Some(0.5); e];
    let pnl = pnl_from_decided_weights(&weights, prices, range)?;
    Ok(StrategyRecord {
        id: format!("bench_half_{asset}"),
        asset,
        horizon: 0,
        method: "benchmark".into(),
        start_idx: s,
        weight: vec![0.5; pnl.len()],
        weight_vix: None,
        pnl,
        missing_signals: 0,
    })
}

/// Benchmark: constant 1/2 equity plus a constant 1/6 volatility-index
/// hedge.
pub fn benchmark_hedged_record(
    asset: impl Into<String>,
    prices: &[Option<f64>],
    vix_prices: &[Option<f64>],
    range: (usize, usize),
) -> Result<StrategyRecord> {
    let asset = asset.into();
    let (s, e) = range;
    if s == 0 || s > e {
        return Err(Error::config(format!("empty or too-early range {range:?}")));
    }
    let n = e - s + 1;
    let eq_weights = vec![Some(0.5); e];
    let eq = pnl_from_decided_weights(&eq_weights, prices, range)?;
    let hedge_weights = vec![Some(1.0 / 6.0); e];
    let hedge = pnl_from_decided_weights(&hedge_weights, vix_prices, range)?;
    let pnl: Vec<f64> = eq.iter().zip(&hedge).map(|(a, b)| a + b).collect();
    Ok(StrategyRecord {
        id: format!("bench_hedged_{asset}"),
        asset,
        horizon: 0,
        method: "benchmark".into(),
        start_idx: s,
        weight: vec![0.5; n],
        weight_vix: Some(vec![1.0 / 6.0; n]),
        pnl,
        missing_signals: 0,
    })
}

/// Equal-weight portfolio of records covering the same range: daily π is
/// the mean of the members' π (and likewise for the held weights).
pub fn portfolio_mean(id: impl Into<String>, records: &[&StrategyRecord]) -> Result<StrategyRecord> {
    let first = records
        .first()
        .ok_or_else(|| Error::config("cannot average an empty set of records"))?;
    let range = first.range();
    for r in records {
        if r.range() != range {
            return Err(Error::config(format!(
                "record {} covers {:?} but {} covers {:?}",
                r.id,
                r.range(),
                first.id,
                range
            )));
        }
    }
    let n = first.len();
    let m = records.len() as f64;
    let mut pnl = vec![0.0; n];
    let mut weight = vec![0.0; n];
    let mut weight_vix = vec![0.0; n];
    let mut any_vix = false;
    for r in records {
        for i in 0..n {
            pnl[i] += r.pnl[i] / m;
            weight[i] += r.weight[i] / m;
            if let Some(v) = &r.weight_vix {
                weight_vix[i] += v[i] / m;
            }
        }
        any_vix |= r.weight_vix.is_some();
    }
    Ok(StrategyRecord {
        id: id.into(),
        asset: "portfolio".into(),
        horizon: 0,
        method: "mean".into(),
        start_idx: range.0,
        weight,
        weight_vix: any_vix.then_some(weight_vix),
        pnl,
        missing_signals: records.iter().map(|r| r.missing_signals).sum(),
    })
}
