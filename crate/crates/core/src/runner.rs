//! End-to-end experiment orchestration.
//!
//! A run proceeds through fixed stages: load and align data, resolve the
//! validation/testing windows onto the trading calendar, sweep every
//! candidate model once per (asset, horizon) unit, evaluate the
//! hyperparameter grid on the validation window, then produce testing
//! records for the chosen configurations plus baselines and benchmarks.
//! Three modes share that machinery:
//!
//! * **backtest** — validation-selected (ex-post) hyperparameters per
//!   (asset, horizon), plus the frozen best fixed candidate and benchmarks;
//! * **daa** — the whole grid becomes a strategy universe reallocated
//!   quarterly by trailing Sharpe ratio (ex-ante);
//! * **cas** — the hedged cross-asset strategy for one asset, driven by the
//!   validation-selected forecasts.
//!
//! Everything is deterministic: parallel workers only fill pre-sized slots,
//! exports are written by one writer in sorted order, and the manifest
//! records content digests of the inputs so identical runs are
//! byte-identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calendar::TradingCalendar;
use crate::config::{BenchmarkKind, DataConfig, ExperimentConfig};
use crate::daa::{run_daa, CapMode, DaaInputs};
use crate::error::{Error, Result};
use crate::frame::{col, TimeSeriesFrame};
use crate::ingest;
use crate::loss::{ForecastStore, LossFamily, LossParams};
use crate::models::{enumerate_specs, ModelSpec, RunSeries};
use crate::report::{self, ChosenDoc, RunSummary};
use crate::selection::{
    build_method, populate_store, select_series, MethodParams, SelectionTrace,
};
use crate::strategy::{
    benchmark_half_record, benchmark_hedged_record, cas_record, long_only_record, portfolio_mean,
    sharpe_ratio, KStar, StrategyRecord,
};

/// What a run produces and how to reproduce it. Identical manifests imply
/// byte-identical output files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub mode: String,
    /// Digest of the fully resolved configuration (defaults applied).
    pub config_digest: String,
    /// Content digest per input file.
    pub data_digests: BTreeMap<String, String>,
    pub first_tradable_date: String,
    /// Files written to the output directory, sorted.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("{}: invalid manifest JSON: {e}", path.display())))
    }
}

/// How `run_experiment` is driven.
#[derive(Debug, Clone)]
pub enum RunMode {
    Backtest {
        /// Restrict to one selection method ("dms", "ae" or "fixed").
        method_filter: Option<String>,
        /// Also dump per-candidate losses for each chosen configuration.
        loss_debug: bool,
    },
    Daa {
        cap: CapMode,
    },
    Cas {
        kstar: KStar,
        asset: String,
    },
}

impl RunMode {
    fn name(&self) -> String {
        match self {
            RunMode::Backtest { .. } => "backtest".into(),
            RunMode::Daa { cap } => format!("daa_{}", cap.name()),
            RunMode::Cas { kstar, asset } => format!("cas_{}_{asset}", kstar.name()),
        }
    }
}

/// Index geometry of a run on the shared calendar.
#[derive(Debug, Clone, Copy)]
pub struct Timeline {
    /// Validation window (inclusive); selection starts here, P&L one later.
    pub vs: usize,
    pub ve: usize,
    /// Testing window (inclusive).
    pub ts: usize,
    pub te: usize,
}

pub fn resolve_timeline(cal: &TradingCalendar, cfg: &ExperimentConfig) -> Result<Timeline> {
    let locate = |what: &str, r: (chrono::NaiveDate, chrono::NaiveDate)| -> Result<(usize, usize)> {
        let s = cal.index_on_or_after(r.0).ok_or_else(|| {
            Error::config(format!("{what} range starts after the data ends ({})", r.0))
        })?;
        let e = cal.index_on_or_before(r.1).ok_or_else(|| {
            Error::config(format!("{what} range ends before the data starts ({})", r.1))
        })?;
        if s > e {
            return Err(Error::config(format!(
                "{what} range {}..{} holds no trading days",
                r.0, r.1
            )));
        }
        Ok((s, e))
    };
    let (vs, ve) = locate("validation", cfg.validation)?;
    let (ts, te) = locate("testing", cfg.testing)?;
    if ve + 1 > ts {
        return Err(Error::config(
            "validation and testing overlap on the trading calendar",
        ));
    }
    if ve <= vs {
        return Err(Error::config(
            "validation range needs at least two trading days (P&L starts one day in)",
        ));
    }
    Ok(Timeline { vs, ve, ts, te })
}

/// Load the aligned frame named by the config.
pub fn load_frame(data: &DataConfig) -> Result<TimeSeriesFrame> {
    match data {
        DataConfig::Frame(path) => ingest::read_frame_csv(path),
        DataConfig::Raw {
            prices,
            curves,
            forward_fill,
        } => {
            let ps = prices
                .iter()
                .map(|(asset, path)| ingest::load_price_csv(path, asset))
                .collect::<Result<Vec<_>>>()?;
            let cs = curves
                .iter()
                .map(|(kind, path)| ingest::load_curve_csv(path, *kind))
                .collect::<Result<Vec<_>>>()?;
            ingest::align_inner(&ps, &cs, *forward_fill)
        }
    }
}

/// Assets a run covers: the configured list, or every price column except
/// instruments that only exist as hedge/curve underlyings.
pub fn resolve_assets(frame: &TimeSeriesFrame, cfg: &ExperimentConfig) -> Result<Vec<String>> {
    if !cfg.assets.is_empty() {
        for a in &cfg.assets {
            if !frame.has_column(&col::price(a)) {
                return Err(Error::config(format!(
                    "asset {a:?} has no price column in the data"
                )));
            }
        }
        return Ok(cfg.assets.clone());
    }
    let curve_names = ["vix", "yield"];
    let assets: Vec<String> = frame
        .names()
        .iter()
        .filter(|n| col::is_price(n))
        .map(|n| n["px:".len()..].to_string())
        .filter(|a| !curve_names.contains(&a.as_str()))
        .collect();
    if assets.is_empty() {
        return Err(Error::config("no tradable price columns in the data"));
    }
    Ok(assets)
}

/// One point of the hyperparameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridKey {
    pub family: LossFamily,
    pub lambda: f64,
    pub p: f64,
    pub method: String,
}

impl GridKey {
    pub fn fragment(&self) -> String {
        format!(
            "{}_{}_l{}_p{}",
            self.method,
            self.family.name(),
            self.lambda,
            self.p
        )
    }
}

/// Grid points in canonical order: family, then λ ascending, then p
/// ascending, then method in config order — the order validation ties are
/// broken in.
fn grid_keys(cfg: &ExperimentConfig, methods: &[String]) -> Vec<GridKey> {
    let mut keys = Vec::new();
    for (family, lambda, p) in cfg.grid.points() {
        for m in methods {
            keys.push(GridKey {
                family,
                lambda,
                p,
                method: m.clone(),
            });
        }
    }
    keys
}

/// One (asset, horizon) work unit: the model sweep is done once here and
/// every grid point re-uses it.
pub struct Unit {
    pub asset: String,
    pub k: usize,
    pub series: RunSeries,
    pub specs: Vec<ModelSpec>,
    pub store: ForecastStore,
    /// Inclusive range selection runs over: far enough before validation to
    /// warm up the first sign panel, through the end of testing.
    pub sel_range: (usize, usize),
    pub prices: Vec<Option<f64>>,
}

impl Unit {
    pub fn build(
        frame: &TimeSeriesFrame,
        asset: &str,
        k: usize,
        cfg: &ExperimentConfig,
        tl: Timeline,
    ) -> Result<Unit> {
        let series = RunSeries::from_frame(frame, asset, k)?;
        let specs = enumerate_specs(&cfg.windows, &series);
        if specs.is_empty() {
            return Err(Error::config("no candidate models (empty window list)"));
        }
        let max_window = cfg.windows.iter().copied().max().unwrap_or(0) as usize;
        let burn_in = max_window + cfg.v + k;
        let panel_warmup = k - 1;
        if tl.vs < burn_in + panel_warmup {
            return Err(Error::config(format!(
                "validation starts at trading day {} of the data but horizon {k} needs {} days \
                 of burn-in (largest window {max_window} + loss window {} + horizon + sign panel); \
                 provide earlier history or a later validation start",
                tl.vs,
                burn_in + panel_warmup,
                cfg.v
            )));
        }
        let sel_range = (tl.vs - panel_warmup, tl.te);
        let store = populate_store(&series, &specs, k, tl.te)?;
        let prices = frame
            .column(&col::price(asset))
            .ok_or_else(|| Error::config(format!("asset {asset:?} has no price column")))?
            .to_vec();
        Ok(Unit {
            asset: asset.to_string(),
            k,
            series,
            specs,
            store,
            sel_range,
            prices,
        })
    }

    fn loss_params(&self, key: &GridKey) -> LossParams {
        LossParams {
            family: key.family,
            lambda: key.lambda,
            p: key.p,
            horizon: self.k,
        }
    }

    /// Run one grid point's selection; returns per-origin adapted forecasts
    /// (global indexing) and the day-by-day traces.
    pub fn select(
        &self,
        key: &GridKey,
        cfg: &ExperimentConfig,
    ) -> Result<(Vec<Option<f64>>, Vec<SelectionTrace>)> {
        let params = MethodParams {
            v: cfg.v,
            v0: cfg.v0,
            v1: cfg.v1,
            fixed_spec: None,
        };
        let method = build_method(&key.method, &params)?;
        let traces = select_series(
            &self.store,
            &self.series,
            &self.specs,
            method.as_ref(),
            self.loss_params(key),
            self.sel_range,
        );
        let mut forecast_at = vec![None; self.series.len()];
        for tr in &traces {
            forecast_at[tr.t] = tr.forecast;
        }
        Ok((forecast_at, traces))
    }

    /// Forecasts of one frozen candidate (global indexing).
    pub fn fixed_forecasts(&self, spec_idx: usize) -> Vec<Option<f64>> {
        (0..self.series.len())
            .map(|t| self.store.forecast_at(spec_idx, t, self.k))
            .collect()
    }
}

/// The hyperparameters validation picked for one unit.
#[derive(Debug, Clone)]
pub struct ChosenConfig {
    pub key: GridKey,
    pub validation_sr: Option<f64>,
    pub defaulted: bool,
}

/// Validation-select over pre-computed grid results: the key with the best
/// Sharpe ratio over the validation window, ties going to the earlier grid
/// point. With no defined score anywhere, the documented default (single
/// loss, λ = 1, p = 2, first method) is used and flagged.
pub fn validate_select(
    keys: &[GridKey],
    validation_srs: &[Option<f64>],
    fallback_method: &str,
) -> ChosenConfig {
    let mut best: Option<(usize, f64)> = None;
    for (i, sr) in validation_srs.iter().enumerate() {
        if let Some(s) = sr {
            let better = match best {
                None => true,
                Some((_, b)) => *s > b,
            };
            if better {
                best = Some((i, *s));
            }
        }
    }
    match best {
        Some((i, s)) => ChosenConfig {
            key: keys[i].clone(),
            validation_sr: Some(s),
            defaulted: false,
        },
        None => ChosenConfig {
            key: GridKey {
                family: LossFamily::Single,
                lambda: 1.0,
                p: 2.0,
                method: fallback_method.to_string(),
            },
            validation_sr: None,
            defaulted: true,
        },
    }
}

/// A grid point's full-span strategy record (and, when asked for, the
/// forecasts that produced it).
struct GridEntry {
    key: GridKey,
    record: StrategyRecord,
    forecasts: Option<Vec<Option<f64>>>,
}

/// Everything one unit contributes to a run.
struct UnitOutput {
    asset: String,
    k: usize,
    specs: Vec<ModelSpec>,
    chosen: Option<ChosenConfig>,
    chosen_forecasts: Option<Vec<Option<f64>>>,
    chosen_traces: Vec<SelectionTrace>,
    /// Chosen configuration's record over the testing window.
    testing: Option<StrategyRecord>,
    /// Frozen best fixed candidate over the testing window.
    fm_testing: Option<StrategyRecord>,
    fm_spec: Option<ModelSpec>,
    /// Whole-grid records over the full span (ex-ante universe).
    grid: Vec<GridEntry>,
    /// Rendered per-candidate loss dump, when asked for.
    loss_csv: Option<String>,
}

struct UnitPlan<'a> {
    cfg: &'a ExperimentConfig,
    cal: &'a TradingCalendar,
    tl: Timeline,
    adaptive_methods: Vec<String>,
    want_fm: bool,
    keep_grid: bool,
    keep_grid_forecasts: bool,
    loss_debug: bool,
}

fn record_id(asset: &str, k: usize, tag: &str) -> String {
    format!("{asset}_k{k}_{tag}")
}

fn run_unit(unit: &Unit, plan: &UnitPlan<'_>) -> Result<UnitOutput> {
    let tl = plan.tl;
    let full_range = (tl.vs + 1, tl.te);
    let val_range = (tl.vs + 1, tl.ve);
    let test_range = (tl.ts, tl.te);
    let keys = grid_keys(plan.cfg, &plan.adaptive_methods);

    let mut grid = Vec::with_capacity(keys.len());
    let mut validation_srs = Vec::with_capacity(keys.len());
    for key in &keys {
        let (forecasts, _) = unit.select(key, plan.cfg)?;
        let record = long_only_record(
            record_id(&unit.asset, unit.k, &key.fragment()),
            &unit.asset,
            &key.method,
            unit.k,
            &forecasts,
            &unit.prices,
            full_range,
        )?;
        let sr = record
            .pnl_slice(val_range)
            .and_then(sharpe_ratio);
        validation_srs.push(sr);
        grid.push(GridEntry {
            key: key.clone(),
            record,
            forecasts: plan.keep_grid_forecasts.then_some(forecasts),
        });
    }

    let (chosen, chosen_forecasts, chosen_traces, testing) = if keys.is_empty() {
        (None, None, Vec::new(), None)
    } else {
        let chosen = validate_select(&keys, &validation_srs, &plan.adaptive_methods[0]);
        // Re-derive the chosen configuration's path (identical by
        // determinism; the default fallback may lie outside the grid).
        let (forecasts, traces) = unit.select(&chosen.key, plan.cfg)?;
        let testing = long_only_record(
            record_id(&unit.asset, unit.k, "selected"),
            &unit.asset,
            &chosen.key.method,
            unit.k,
            &forecasts,
            &unit.prices,
            test_range,
        )?;
        (Some(chosen), Some(forecasts), traces, Some(testing))
    };

    let loss_csv = match (&chosen, plan.loss_debug) {
        (Some(c), true) => Some(report::loss_debug_csv(
            &unit.store,
            &unit.series.y,
            unit.loss_params(&c.key),
            plan.cfg.v,
            &unit.specs,
            unit.sel_range,
            plan.cal,
        )),
        _ => None,
    };

    let (fm_testing, fm_spec) = if plan.want_fm {
        let mut best: Option<(usize, f64)> = None;
        for idx in 0..unit.specs.len() {
            let forecasts = unit.fixed_forecasts(idx);
            let record = long_only_record(
                "fm_val",
                &unit.asset,
                "fixed",
                unit.k,
                &forecasts,
                &unit.prices,
                val_range,
            )?;
            if let Some(sr) = sharpe_ratio(&record.pnl) {
                let better = best.is_none_or(|(_, b)| sr > b);
                if better {
                    best = Some((idx, sr));
                }
            }
        }
        // With no defined score anywhere, freeze the conservative fallback
        // candidate instead.
        let idx = best.map(|(i, _)| i).unwrap_or_else(|| {
            crate::selection::fallback_spec_index(&unit.specs).unwrap_or(0)
        });
        let forecasts = unit.fixed_forecasts(idx);
        let record = long_only_record(
            record_id(&unit.asset, unit.k, "fm"),
            &unit.asset,
            "fixed",
            unit.k,
            &forecasts,
            &unit.prices,
            test_range,
        )?;
        (Some(record), Some(unit.specs[idx]))
    } else {
        (None, None)
    };

    Ok(UnitOutput {
        asset: unit.asset.clone(),
        k: unit.k,
        specs: unit.specs.clone(),
        chosen,
        chosen_forecasts,
        chosen_traces,
        testing,
        fm_testing,
        fm_spec,
        grid: if plan.keep_grid { grid } else { Vec::new() },
        loss_csv,
    })
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn data_digests(data: &DataConfig) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    match data {
        DataConfig::Frame(path) => {
            out.insert(path.display().to_string(), sha256_file(path)?);
        }
        DataConfig::Raw { prices, curves, .. } => {
            for path in prices.values().chain(curves.values()) {
                out.insert(path.display().to_string(), sha256_file(path)?);
            }
        }
    }
    Ok(out)
}

fn config_digest(cfg: &ExperimentConfig, mode: &RunMode) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{cfg:?}|{mode:?}").as_bytes());
    hex(&hasher.finalize())
}

/// Gathers files to write, then flushes them in sorted order.
struct OutputSet {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutputSet {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.insert(name.into(), content);
    }

    fn flush(&self) -> Result<Vec<String>> {
        for (name, content) in &self.files {
            let path = self.dir.join(name);
            std::fs::write(&path, content)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        Ok(self.files.keys().cloned().collect())
    }
}

/// Run a full experiment in the given mode, writing all exports plus
/// `summary.json` and `manifest.json` under the config's output directory.
pub fn run_experiment(cfg: &ExperimentConfig, mode: &RunMode) -> Result<RunManifest> {
    let frame = load_frame(&cfg.data)?;
    let cal = frame.calendar().clone();
    let tl = resolve_timeline(&cal, cfg)?;
    let assets = resolve_assets(&frame, cfg)?;

    // Which methods drive the adaptive grid in this mode.
    let configured_adaptive: Vec<String> = cfg
        .methods
        .iter()
        .filter(|m| m.as_str() != "fixed")
        .cloned()
        .collect();
    let (adaptive_methods, want_fm) = match mode {
        RunMode::Backtest {
            method_filter: Some(m),
            ..
        } if m == "fixed" => (Vec::new(), true),
        RunMode::Backtest {
            method_filter: Some(m),
            ..
        } => (vec![m.clone()], false),
        RunMode::Backtest {
            method_filter: None,
            ..
        } => (configured_adaptive, true),
        RunMode::Daa { .. } | RunMode::Cas { .. } => (configured_adaptive, false),
    };
    if adaptive_methods.is_empty() && !want_fm {
        return Err(Error::config(
            "no selection methods to run (methods list is empty)",
        ));
    }

    let cas_target = match mode {
        RunMode::Cas { asset, .. } => {
            if !assets.contains(asset) {
                return Err(Error::config(format!(
                    "cross-asset run asks for {asset:?} which is not among the run's assets"
                )));
            }
            Some(asset.clone())
        }
        RunMode::Daa { .. } => cfg.cas_asset.clone(),
        RunMode::Backtest { .. } => None,
    };

    let plan_for = |asset: &str| UnitPlan {
        cfg,
        cal: &cal,
        tl,
        adaptive_methods: adaptive_methods.clone(),
        want_fm,
        keep_grid: matches!(mode, RunMode::Daa { .. }),
        keep_grid_forecasts: matches!(mode, RunMode::Daa { .. })
            && cas_target.as_deref() == Some(asset),
        loss_debug: matches!(
            mode,
            RunMode::Backtest {
                loss_debug: true,
                ..
            }
        ),
    };

    // Build and evaluate every (asset, horizon) unit in parallel; results
    // land in enumeration order.
    let unit_keys: Vec<(String, usize)> = match mode {
        RunMode::Cas { asset, .. } => (1..=cfg.k_max).map(|k| (asset.clone(), k)).collect(),
        _ => assets
            .iter()
            .flat_map(|a| (1..=cfg.k_max).map(move |k| (a.clone(), k)))
            .collect(),
    };
    let outputs: Vec<UnitOutput> = unit_keys
        .par_iter()
        .map(|(asset, k)| {
            let unit = Unit::build(&frame, asset, *k, cfg, tl)?;
            run_unit(&unit, &plan_for(asset))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = OutputSet::new(&cfg.output)?;
    let mut summary = RunSummary {
        mode: mode.name(),
        metrics: BTreeMap::new(),
        chosen: Vec::new(),
    };
    let record_metric = |summary: &mut RunSummary, rec: &StrategyRecord| {
        summary
            .metrics
            .insert(rec.id.clone(), report::metrics_doc(rec, &cal, cfg.mdd_mode));
    };

    let test_range = (tl.ts, tl.te);
    let full_range = (tl.vs + 1, tl.te);

    // Benchmarks (always over the testing window).
    let mut bench_half: BTreeMap<String, StrategyRecord> = BTreeMap::new();
    for asset in &assets {
        let prices = frame.column(&col::price(asset)).unwrap();
        bench_half.insert(
            asset.clone(),
            benchmark_half_record(asset.clone(), prices, test_range)?,
        );
    }
    let vix_prices = frame.column(&col::price("vix"));

    match mode {
        RunMode::Backtest { .. } => {
            for u in &outputs {
                if let (Some(chosen), Some(testing)) = (&u.chosen, &u.testing) {
                    out.add(
                        format!("trace_{}_k{}.csv", u.asset, u.k),
                        report::trace_csv(&u.chosen_traces, &u.specs, &cal),
                    );
                    out.add(
                        format!("strategy_{}.csv", testing.id),
                        report::strategy_csv(testing, &cal),
                    );
                    out.add(
                        format!("metrics_{}.json", testing.id),
                        report::to_json_pretty(&report::metrics_doc(
                            testing,
                            &cal,
                            cfg.mdd_mode,
                        ))?,
                    );
                    record_metric(&mut summary, testing);
                    summary.chosen.push(ChosenDoc {
                        asset: u.asset.clone(),
                        k: u.k,
                        method: chosen.key.method.clone(),
                        family: chosen.key.family.name().to_string(),
                        lambda: Some(chosen.key.lambda),
                        p: Some(chosen.key.p),
                        validation_sr: chosen.validation_sr,
                        defaulted: chosen.defaulted,
                        fm_spec: u.fm_spec.map(|s| s.id_string()),
                    });
                    if let Some(csv) = &u.loss_csv {
                        out.add(format!("loss_{}_k{}.csv", u.asset, u.k), csv.clone());
                    }
                } else if u.chosen.is_none() && u.fm_testing.is_none() {
                    return Err(Error::runtime(format!(
                        "unit {}-k{} produced nothing",
                        u.asset, u.k
                    )));
                }
                if let Some(fm) = &u.fm_testing {
                    out.add(format!("strategy_{}.csv", fm.id), report::strategy_csv(fm, &cal));
                    out.add(
                        format!("metrics_{}.json", fm.id),
                        report::to_json_pretty(&report::metrics_doc(fm, &cal, cfg.mdd_mode))?,
                    );
                    record_metric(&mut summary, fm);
                    if u.chosen.is_none() {
                        summary.chosen.push(ChosenDoc {
                            asset: u.asset.clone(),
                            k: u.k,
                            method: "fixed".into(),
                            family: String::new(),
                            lambda: None,
                            p: None,
                            validation_sr: None,
                            defaulted: false,
                            fm_spec: u.fm_spec.map(|s| s.id_string()),
                        });
                    }
                }
            }

            // Per-asset means across horizons, then the equal-weight
            // portfolio across assets.
            for (tag, pick) in [("selected", true), ("fm", false)] {
                let mut per_asset: Vec<StrategyRecord> = Vec::new();
                for asset in &assets {
                    let members: Vec<&StrategyRecord> = outputs
                        .iter()
                        .filter(|u| &u.asset == asset)
                        .filter_map(|u| {
                            if pick {
                                u.testing.as_ref()
                            } else {
                                u.fm_testing.as_ref()
                            }
                        })
                        .collect();
                    if !members.is_empty() {
                        per_asset
                            .push(portfolio_mean(format!("{asset}_{tag}_mean"), &members)?);
                    }
                }
                if per_asset.is_empty() {
                    continue;
                }
                for rec in &per_asset {
                    record_metric(&mut summary, rec);
                    out.add(
                        format!("strategy_{}.csv", rec.id),
                        report::strategy_csv(rec, &cal),
                    );
                }
                let refs: Vec<&StrategyRecord> = per_asset.iter().collect();
                let portfolio = portfolio_mean(format!("portfolio_{tag}"), &refs)?;
                out.add(
                    format!("strategy_{}.csv", portfolio.id),
                    report::strategy_csv(&portfolio, &cal),
                );
                out.add(
                    format!("metrics_{}.json", portfolio.id),
                    report::to_json_pretty(&report::metrics_doc(
                        &portfolio,
                        &cal,
                        cfg.mdd_mode,
                    ))?,
                );
                record_metric(&mut summary, &portfolio);
            }

            out.add("selected_configs.csv", report::chosen_csv(&summary.chosen));
        }

        RunMode::Daa { cap } => {
            // The universe: every grid record, plus hedged variants of the
            // configured cross-asset target when one is set.
            let mut universe: Vec<StrategyRecord> = Vec::new();
            for u in &outputs {
                for entry in &u.grid {
                    universe.push(entry.record.clone());
                    if let (Some(target), Some(forecasts)) =
                        (cas_target.as_deref(), entry.forecasts.as_ref())
                    {
                        let vix = vix_prices.ok_or_else(|| {
                            Error::config(
                                "cross-asset units need a vix price column (price.vix)",
                            )
                        })?;
                        let prices = frame.column(&col::price(target)).unwrap();
                        universe.push(cas_record(
                            format!(
                                "{}_cas{}",
                                entry.record.id,
                                cfg.cas_kstar.name()
                            ),
                            target.to_string(),
                            entry.key.method.clone(),
                            u.k,
                            cfg.cas_kstar,
                            forecasts,
                            prices,
                            vix,
                            full_range,
                        )?);
                    }
                }
            }
            if universe.is_empty() {
                return Err(Error::config(
                    "the allocation universe is empty (no adaptive methods configured)",
                ));
            }

            // Benchmarks over the full span so trailing windows reach back
            // before the testing range.
            let mut bench_full: BTreeMap<String, StrategyRecord> = BTreeMap::new();
            for asset in &assets {
                let prices = frame.column(&col::price(asset)).unwrap();
                bench_full.insert(
                    asset.clone(),
                    benchmark_half_record(asset.clone(), prices, full_range)?,
                );
            }

            let daa = run_daa(&DaaInputs {
                records: &universe,
                benchmarks: &bench_full,
                assets: &assets,
                k: cfg.k_max,
                mode: *cap,
                quarter_ends: &cal.quarter_end_indices(),
                range: test_range,
            })?;
            out.add(
                format!("allocation_{}.csv", cap.name()),
                report::allocation_csv(&daa.plans, &cal),
            );
            out.add(
                format!("strategy_{}.csv", daa.composite.id),
                report::strategy_csv(&daa.composite, &cal),
            );
            out.add(
                format!("metrics_{}.json", daa.composite.id),
                report::to_json_pretty(&report::metrics_doc(
                    &daa.composite,
                    &cal,
                    cfg.mdd_mode,
                ))?,
            );
            out.add(
                format!("daa_weights_{}.csv", cap.name()),
                report::asset_weights_csv(&daa.per_asset_weight, tl.ts, &cal),
            );
            record_metric(&mut summary, &daa.composite);
        }

        RunMode::Cas { kstar, asset } => {
            let vix = vix_prices.ok_or_else(|| {
                Error::config("cross-asset runs need a vix price column (price.vix)")
            })?;
            let prices = frame.column(&col::price(asset)).unwrap();
            let mut members = Vec::new();
            for u in &outputs {
                let chosen = u.chosen.as_ref().ok_or_else(|| {
                    Error::runtime("cross-asset run produced no chosen configuration")
                })?;
                let forecasts = u.chosen_forecasts.as_ref().unwrap();
                let rec = cas_record(
                    record_id(asset, u.k, &format!("cas{}", kstar.name())),
                    asset.clone(),
                    chosen.key.method.clone(),
                    u.k,
                    *kstar,
                    forecasts,
                    prices,
                    vix,
                    test_range,
                )?;
                out.add(format!("strategy_{}.csv", rec.id), report::strategy_csv(&rec, &cal));
                out.add(
                    format!("metrics_{}.json", rec.id),
                    report::to_json_pretty(&report::metrics_doc(&rec, &cal, cfg.mdd_mode))?,
                );
                record_metric(&mut summary, &rec);
                summary.chosen.push(ChosenDoc {
                    asset: asset.clone(),
                    k: u.k,
                    method: chosen.key.method.clone(),
                    family: chosen.key.family.name().to_string(),
                    lambda: Some(chosen.key.lambda),
                    p: Some(chosen.key.p),
                    validation_sr: chosen.validation_sr,
                    defaulted: chosen.defaulted,
                    fm_spec: None,
                });
                members.push(rec);
            }
            let refs: Vec<&StrategyRecord> = members.iter().collect();
            let composite = portfolio_mean(format!("{asset}_cas{}_mean", kstar.name()), &refs)?;
            out.add(
                format!("strategy_{}.csv", composite.id),
                report::strategy_csv(&composite, &cal),
            );
            out.add(
                format!("metrics_{}.json", composite.id),
                report::to_json_pretty(&report::metrics_doc(&composite, &cal, cfg.mdd_mode))?,
            );
            record_metric(&mut summary, &composite);

            // The hedged benchmark this strategy is judged against.
            let hedged = benchmark_hedged_record(asset.clone(), prices, vix, test_range)?;
            out.add(
                format!("strategy_{}.csv", hedged.id),
                report::strategy_csv(&hedged, &cal),
            );
            record_metric(&mut summary, &hedged);
        }
    }

    // Benchmark exports common to all modes.
    if cfg.benchmarks.contains(&BenchmarkKind::ConstantHalfEqual) {
        for rec in bench_half.values() {
            out.add(format!("strategy_{}.csv", rec.id), report::strategy_csv(rec, &cal));
            record_metric(&mut summary, rec);
        }
        let refs: Vec<&StrategyRecord> = bench_half.values().collect();
        let portfolio = portfolio_mean("portfolio_bench_half", &refs)?;
        out.add(
            format!("strategy_{}.csv", portfolio.id),
            report::strategy_csv(&portfolio, &cal),
        );
        out.add(
            format!("metrics_{}.json", portfolio.id),
            report::to_json_pretty(&report::metrics_doc(&portfolio, &cal, cfg.mdd_mode))?,
        );
        record_metric(&mut summary, &portfolio);
    }
    if cfg.benchmarks.contains(&BenchmarkKind::AlwaysHedged) {
        let vix = vix_prices.ok_or_else(|| {
            Error::config("the always-hedged benchmark needs a vix price column (price.vix)")
        })?;
        for asset in &assets {
            let prices = frame.column(&col::price(asset)).unwrap();
            let rec = benchmark_hedged_record(asset.clone(), prices, vix, test_range)?;
            out.add(format!("strategy_{}.csv", rec.id), report::strategy_csv(&rec, &cal));
            record_metric(&mut summary, &rec);
        }
    }

    out.add("summary.json", report::to_json_pretty(&summary)?);
    let mut outputs_list = out.flush()?;
    outputs_list.sort();

    let manifest = RunManifest {
        mode: mode.name(),
        config_digest: config_digest(cfg, mode),
        data_digests: data_digests(&cfg.data)?,
        first_tradable_date: cal.date(tl.ts).to_string(),
        outputs: outputs_list,
    };
    let manifest_path = cfg.output.join("manifest.json");
    std::fs::write(&manifest_path, report::to_json_pretty(&manifest)?)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    Ok(manifest)
}

/// Implementation of the `report` command: verify a manifest's outputs are
/// present and render the stored summary.
pub fn render_run_report(manifest_path: &Path, format: report::ReportFormat) -> Result<String> {
    let manifest = RunManifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    for name in &manifest.outputs {
        let path = dir.join(name);
        if !path.exists() {
            return Err(Error::data(format!(
                "run output {} is missing (expected next to the manifest)",
                path.display()
            )));
        }
    }
    let summary = report::load_summary(&dir.join("summary.json"))?;
    report::render_report(&summary, format)
}
