//! Quarterly dynamic allocation across a universe of strategy records.
//!
//! At the last trading day of each calendar quarter every strategy in the
//! universe is scored by its Sharpe ratio over the trailing 252 trading
//! days. The top performers are selected and their holding weights are
//! averaged over the following quarter:
//!
//! * **uncapped** pools everything and takes the best `N = K·|assets|`
//!   overall — the composite may concentrate in one asset;
//! * **capped** takes the best `K` per asset and then averages across
//!   assets, so no asset's composite weight can exceed `1/|assets|`.
//!
//! Scores are recomputed from the full universe every quarter, so a
//! strategy that was dropped can be selected again later. A quarter in
//! which nothing has a defined score falls back to the constant-half
//! benchmark and is recorded as such.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::strategy::{compare_sr, sharpe_ratio, StrategyRecord};

/// Length of the scoring window: one trading year.
pub const TRAILING_DAYS: usize = 252;

/// Sharpe ratio over exactly the [`TRAILING_DAYS`] daily returns ending at
/// global index `q` (inclusive). `None` when the record does not cover that
/// window or the window has zero variance.
pub fn trailing_sharpe(record: &StrategyRecord, q: usize) -> Option<f64> {
    let start = q.checked_sub(TRAILING_DAYS - 1)?;
    let window = record.pnl_slice((start, q))?;
    sharpe_ratio(window)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapMode {
    Uncapped,
    Capped,
}

impl CapMode {
    pub fn name(self) -> &'static str {
        match self {
            CapMode::Uncapped => "uncapped",
            CapMode::Capped => "capped",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uncapped" => Ok(CapMode::Uncapped),
            "capped" => Ok(CapMode::Capped),
            other => Err(Error::config(format!(
                "unknown cap mode {other:?} (expected \"capped\" or \"uncapped\")"
            ))),
        }
    }
}

/// One strategy's score at a quarter boundary.
#[derive(Debug, Clone)]
pub struct ScoredCandidate<'a> {
    /// Index into the record universe.
    pub index: usize,
    pub id: &'a str,
    pub sr: Option<f64>,
}

/// Top `n` defined scores, best first; ties broken by id order. Fewer than
/// `n` defined scores selects all of them; zero selects nothing.
pub fn select_top(candidates: &[ScoredCandidate<'_>], n: usize) -> Vec<usize> {
    let mut defined: Vec<&ScoredCandidate<'_>> =
        candidates.iter().filter(|c| c.sr.is_some()).collect();
    defined.sort_by(|a, b| compare_sr(b.sr, a.sr).then_with(|| a.id.cmp(b.id)));
    defined.into_iter().take(n).map(|c| c.index).collect()
}

/// One exported scoreboard line: every scored strategy at every quarter,
/// selected or not.
#[derive(Debug, Clone)]
pub struct AllocationRow {
    pub quarter_end_idx: usize,
    pub strategy_id: String,
    pub asset: String,
    pub horizon: usize,
    pub method: String,
    pub sr_trailing: Option<f64>,
    pub selected: bool,
}

/// What one quarter decided and where it applies.
#[derive(Debug, Clone)]
pub struct QuarterPlan {
    /// Evaluation date (global index, the quarter's last trading day).
    pub q_idx: usize,
    /// Inclusive global range the selection is held over.
    pub apply: (usize, usize),
    /// Selected record indices, best score first (all assets pooled).
    pub selected: Vec<usize>,
    /// Assets that had no defined score and fell back to the benchmark
    /// (capped mode per asset; uncapped lists every asset when the whole
    /// quarter fell back).
    pub benchmark_assets: Vec<String>,
    pub rows: Vec<AllocationRow>,
}

pub struct DaaInputs<'a> {
    /// Scored universe; every record must cover the full `range`.
    pub records: &'a [StrategyRecord],
    /// Constant-half benchmark per asset, used for fallback quarters.
    pub benchmarks: &'a BTreeMap<String, StrategyRecord>,
    pub assets: &'a [String],
    /// Per-asset selection depth K; uncapped selects `K·|assets|` pooled.
    pub k: usize,
    pub mode: CapMode,
    /// Observed quarter-boundary indices over the whole calendar.
    pub quarter_ends: &'a [usize],
    /// Inclusive global range the composite is produced over.
    pub range: (usize, usize),
}

pub struct DaaOutput {
    pub plans: Vec<QuarterPlan>,
    pub composite: StrategyRecord,
    /// Composite exposure to each asset per day, aligned with the range.
    pub per_asset_weight: BTreeMap<String, Vec<f64>>,
}

fn coverage_check(record: &StrategyRecord, range: (usize, usize)) -> Result<()> {
    let (lo, hi) = record.range();
    if lo > range.0 || hi < range.1 {
        return Err(Error::config(format!(
            "record {} covers [{lo}, {hi}] but the allocation range is {range:?}",
            record.id
        )));
    }
    Ok(())
}

/// The quarter boundaries that drive a range: the last boundary strictly
/// before it (the initial selection happens before trading starts) plus
/// every boundary inside it short of the final day.
fn schedule(quarter_ends: &[usize], range: (usize, usize)) -> Result<Vec<usize>> {
    let q1 = quarter_ends
        .iter()
        .copied()
        .filter(|&q| q < range.0)
        .next_back()
        .ok_or_else(|| {
            Error::config("no quarter boundary observed before the allocation range")
        })?;
    let mut qs = vec![q1];
    qs.extend(
        quarter_ends
            .iter()
            .copied()
            .filter(|&q| q >= range.0 && q < range.1),
    );
    Ok(qs)
}

pub fn run_daa(inputs: &DaaInputs<'_>) -> Result<DaaOutput> {
    let (rs, re) = inputs.range;
    if rs > re {
        return Err(Error::config(format!("empty allocation range {:?}", inputs.range)));
    }
    if inputs.records.is_empty() {
        return Err(Error::config("empty strategy universe"));
    }
    if inputs.k == 0 {
        return Err(Error::config("selection depth K must be positive"));
    }
    for r in inputs.records {
        coverage_check(r, inputs.range)?;
    }
    for asset in inputs.assets {
        let bench = inputs.benchmarks.get(asset).ok_or_else(|| {
            Error::config(format!("no benchmark record for asset {asset:?}"))
        })?;
        coverage_check(bench, inputs.range)?;
    }

    let qs = schedule(inputs.quarter_ends, inputs.range)?;
    let n_days = re - rs + 1;
    let n_assets = inputs.assets.len() as f64;
    let mut pnl = vec![0.0; n_days];
    let mut weight = vec![0.0; n_days];
    let mut weight_vix = vec![0.0; n_days];
    let mut any_vix = false;
    let mut per_asset: BTreeMap<String, Vec<f64>> = inputs
        .assets
        .iter()
        .map(|a| (a.clone(), vec![0.0; n_days]))
        .collect();
    let mut plans = Vec::with_capacity(qs.len());

    for (j, &q) in qs.iter().enumerate() {
        let apply = (
            (q + 1).max(rs),
            if j + 1 < qs.len() { qs[j + 1] } else { re },
        );
        let scored: Vec<ScoredCandidate<'_>> = inputs
            .records
            .iter()
            .enumerate()
            .map(|(index, r)| ScoredCandidate {
                index,
                id: &r.id,
                sr: trailing_sharpe(r, q),
            })
            .collect();

        let (selected, benchmark_assets) = match inputs.mode {
            CapMode::Uncapped => {
                let picked = select_top(&scored, inputs.k * inputs.assets.len());
                let fallback = if picked.is_empty() {
                    inputs.assets.to_vec()
                } else {
                    Vec::new()
                };
                (picked, fallback)
            }
            CapMode::Capped => {
                let mut picked = Vec::new();
                let mut fallback = Vec::new();
                for asset in inputs.assets {
                    let group: Vec<ScoredCandidate<'_>> = scored
                        .iter()
                        .filter(|c| &inputs.records[c.index].asset == asset)
                        .cloned()
                        .collect();
                    let sel = select_top(&group, inputs.k);
                    if sel.is_empty() {
                        fallback.push(asset.clone());
                    }
                    picked.extend(sel);
                }
                (picked, fallback)
            }
        };

        let selected_set: Vec<bool> = {
            let mut flags = vec![false; inputs.records.len()];
            for &i in &selected {
                flags[i] = true;
            }
            flags
        };
        let rows: Vec<AllocationRow> = scored
            .iter()
            .map(|c| {
                let r = &inputs.records[c.index];
                AllocationRow {
                    quarter_end_idx: q,
                    strategy_id: r.id.clone(),
                    asset: r.asset.clone(),
                    horizon: r.horizon,
                    method: r.method.clone(),
                    sr_trailing: c.sr,
                    selected: selected_set[c.index],
                }
            })
            .collect();

        // Accumulate the composite over the application window.
        for t in apply.0..=apply.1 {
            let i = t - rs;
            match inputs.mode {
                CapMode::Uncapped => {
                    if selected.is_empty() {
                        for asset in inputs.assets {
                            let b = &inputs.benchmarks[asset];
                            let w = b.weight_at(t).unwrap() / n_assets;
                            pnl[i] += b.pnl_at(t).unwrap() / n_assets;
                            weight[i] += w;
                            per_asset.get_mut(asset).unwrap()[i] += w;
                        }
                    } else {
                        let m = selected.len() as f64;
                        for &h in &selected {
                            let r = &inputs.records[h];
                            let w = r.weight_at(t).unwrap() / m;
                            pnl[i] += r.pnl_at(t).unwrap() / m;
                            weight[i] += w;
                            per_asset.get_mut(&r.asset).unwrap()[i] += w;
                            if let Some(v) = r.weight_vix_at(t) {
                                weight_vix[i] += v / m;
                                any_vix = true;
                            }
                        }
                    }
                }
                CapMode::Capped => {
                    for asset in inputs.assets {
                        let group: Vec<usize> = selected
                            .iter()
                            .copied()
                            .filter(|&h| &inputs.records[h].asset == asset)
                            .collect();
                        let (asset_pnl, asset_w, asset_v) = if group.is_empty() {
                            let b = &inputs.benchmarks[asset];
                            (b.pnl_at(t).unwrap(), b.weight_at(t).unwrap(), 0.0)
                        } else {
                            let g = group.len() as f64;
                            let mut p = 0.0;
                            let mut w = 0.0;
                            let mut v = 0.0;
                            for &h in &group {
                                let r = &inputs.records[h];
                                p += r.pnl_at(t).unwrap() / g;
                                w += r.weight_at(t).unwrap() / g;
                                if let Some(vx) = r.weight_vix_at(t) {
                                    v += vx / g;
                                    any_vix = true;
                                }
                            }
                            (p, w, v)
                        };
                        pnl[i] += asset_pnl / n_assets;
                        weight[i] += asset_w / n_assets;
                        weight_vix[i] += asset_v / n_assets;
                        per_asset.get_mut(asset).unwrap()[i] += asset_w / n_assets;
                    }
                }
            }
        }

        plans.push(QuarterPlan {
            q_idx: q,
            apply,
            selected,
            benchmark_assets,
            rows,
        });
    }

    let composite = StrategyRecord {
        id: format!("daa_{}", inputs.mode.name()),
        asset: "portfolio".into(),
        horizon: 0,
        method: format!("daa_{}", inputs.mode.name()),
        start_idx: rs,
        weight,
        weight_vix: any_vix.then_some(weight_vix),
        pnl,
        missing_signals: 0,
    };
    Ok(DaaOutput {
        plans,
        composite,
        per_asset_weight: per_asset,
    })
}
