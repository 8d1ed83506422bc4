//! Deterministic export writers: per-strategy CSVs, metrics JSON, selection
//! traces, allocation scoreboards, and the run summary consumed by the
//! `report` command.
//!
//! Every writer builds the full file as a `String` so output is written in
//! one shot by a single writer, and floats go through Rust's shortest
//! round-trip formatting — rerunning a run produces byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calendar::TradingCalendar;
use crate::daa::QuarterPlan;
use crate::error::{Error, Result};
use crate::loss::{ForecastStore, LossEvaluator, LossParams};
use crate::models::ModelSpec;
use crate::selection::SelectionTrace;
use crate::strategy::{cumulative_wealth, MddMode, StrategyRecord};

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Daily path of one strategy: `date,weight,weight_vix,pnl,cum_wealth`.
pub fn strategy_csv(record: &StrategyRecord, cal: &TradingCalendar) -> String {
    let mut out = String::from("date,weight,weight_vix,pnl,cum_wealth\n");
    let wealth = cumulative_wealth(&record.pnl);
    for i in 0..record.len() {
        let t = record.start_idx + i;
        let vix = record
            .weight_vix
            .as_ref()
            .map(|v| v[i].to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            cal.date(t),
            record.weight[i],
            vix,
            record.pnl[i],
            wealth[i]
        ));
    }
    out
}

/// Metrics document exported next to each strategy CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub sr: Option<f64>,
    pub anr: f64,
    pub mdd: f64,
    pub n_days: usize,
    pub first_date: String,
    pub last_date: String,
}

pub fn metrics_doc(record: &StrategyRecord, cal: &TradingCalendar, mode: MddMode) -> MetricsDoc {
    let m = record.metrics(mode);
    let (s, e) = record.range();
    MetricsDoc {
        sr: m.sr,
        anr: m.anr,
        mdd: m.mdd,
        n_days: m.n_days,
        first_date: cal.date(s).to_string(),
        last_date: cal.date(e).to_string(),
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::runtime(format!("serialising JSON: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// What the selector picked each day:
/// `date,method,chosen_spec_or_topweight,model_class,window,forecast`.
/// For ensemble rows the spec columns describe the top-weight candidate.
pub fn trace_csv(traces: &[SelectionTrace], specs: &[ModelSpec], cal: &TradingCalendar) -> String {
    let mut out = String::from("date,method,chosen_spec_or_topweight,model_class,window,forecast\n");
    for tr in traces {
        let (id, class, window) = match tr.top {
            Some(i) => {
                let s = &specs[i];
                (s.id_string(), s.class.name().to_string(), s.window.to_string())
            }
            None => (String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cal.date(tr.t),
            tr.method,
            id,
            class,
            window,
            fmt_opt(tr.forecast)
        ));
    }
    out
}

/// Full quarterly scoreboard:
/// `quarter_end,strategy_id,asset,k,method,sr_trailing,selected`.
pub fn allocation_csv(plans: &[QuarterPlan], cal: &TradingCalendar) -> String {
    let mut out = String::from("quarter_end,strategy_id,asset,k,method,sr_trailing,selected\n");
    for plan in plans {
        for row in &plan.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                cal.date(row.quarter_end_idx),
                row.strategy_id,
                row.asset,
                row.horizon,
                row.method,
                fmt_opt(row.sr_trailing),
                row.selected
            ));
        }
    }
    out
}

/// Composite exposure to each asset per day: `date,<asset>,...` columns in
/// asset order.
pub fn asset_weights_csv(
    per_asset: &BTreeMap<String, Vec<f64>>,
    start_idx: usize,
    cal: &TradingCalendar,
) -> String {
    let mut out = String::from("date");
    for asset in per_asset.keys() {
        out.push(',');
        out.push_str(asset);
    }
    out.push('\n');
    let n = per_asset.values().next().map_or(0, |v| v.len());
    for i in 0..n {
        out.push_str(&cal.date(start_idx + i).to_string());
        for series in per_asset.values() {
            out.push(',');
            out.push_str(&series[i].to_string());
        }
        out.push('\n');
    }
    out
}

/// Debug dump of every candidate's discounted loss per date:
/// `date,spec_id,loss` (only dates where the loss is comparable).
pub fn loss_debug_csv(
    store: &ForecastStore,
    y: &[Option<f64>],
    params: LossParams,
    v: usize,
    specs: &[ModelSpec],
    range: (usize, usize),
    cal: &TradingCalendar,
) -> String {
    let eval = LossEvaluator::with_cache(store, y, params);
    let mut out = String::from("date,spec_id,loss\n");
    for t in range.0..=range.1 {
        for (i, spec) in specs.iter().enumerate() {
            if let Some(loss) = eval.loss_at(i, t, v) {
                out.push_str(&format!("{},{},{}\n", cal.date(t), spec.id_string(), loss));
            }
        }
    }
    out
}

/// The hyperparameters validation picked for one (asset, horizon) unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChosenDoc {
    pub asset: String,
    pub k: usize,
    pub method: String,
    pub family: String,
    /// Absent for the fixed baseline, which has no loss hyperparameters.
    pub lambda: Option<f64>,
    pub p: Option<f64>,
    pub validation_sr: Option<f64>,
    /// No configuration had a defined validation Sharpe; the documented
    /// default was used instead.
    pub defaulted: bool,
    /// Best fixed candidate frozen for the baseline, when one was run.
    pub fm_spec: Option<String>,
}

/// `selected_configs.csv` companion for the summary's `chosen` list.
pub fn chosen_csv(rows: &[ChosenDoc]) -> String {
    let mut out =
        String::from("asset,k,method,family,lambda,p,validation_sr,defaulted,fm_spec\n");
    for c in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.asset,
            c.k,
            c.method,
            c.family,
            fmt_opt(c.lambda),
            fmt_opt(c.p),
            fmt_opt(c.validation_sr),
            c.defaulted,
            c.fm_spec.clone().unwrap_or_default()
        ));
    }
    out
}

/// Everything the `report` command needs, written once per run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: String,
    /// Record id → metrics, sorted by id.
    pub metrics: BTreeMap<String, MetricsDoc>,
    pub chosen: Vec<ChosenDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::config(format!(
                "unknown report format {other:?} (expected csv or json)"
            ))),
        }
    }
}

/// Render the run summary in the asked format.
pub fn render_report(summary: &RunSummary, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => to_json_pretty(summary),
        ReportFormat::Csv => {
            let mut out = String::from("id,sr,anr,mdd,n_days,first_date,last_date\n");
            for (id, m) in &summary.metrics {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    id,
                    fmt_opt(m.sr),
                    m.anr,
                    m.mdd,
                    m.n_days,
                    m.first_date,
                    m.last_date
                ));
            }
            Ok(out)
        }
    }
}

pub fn load_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("{}: invalid summary JSON: {e}", path.display())))
}
