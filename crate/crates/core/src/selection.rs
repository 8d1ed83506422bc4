//! Per-date model selection and the walk-forward driver.
//!
//! Three selection methods live behind [`SelectionMethod`] and are built by
//! name ("dms", "ae", "fixed"):
//!
//! * **dms** ranks every candidate by discounted loss over the trailing `v`
//!   dates and trusts the cheapest one outright.
//! * **ae** re-runs that ranking for each of the last `v0` dates using a
//!   shorter `v1`-window loss, gives each sub-window's winner weight `1/v0`,
//!   and forecasts with the weighted ensemble.
//! * **fixed** always uses one frozen candidate (the no-adaptation
//!   baseline).
//!
//! Whenever the loss cannot pick a usable candidate, the engine falls back
//! to the most conservative model in the zoo — the constant model on the
//! largest window — and flags the step as a fallback.

use crate::error::{Error, Result};
use crate::loss::{ForecastStore, LossEvaluator, LossParams};
use crate::models::{enumerate_specs, run_model_sweep, ModelClass, ModelSpec, RunSeries};

/// Ensemble weights as exact integer counts over candidates; weight of
/// candidate `i` is `count_i / total`, so the simplex constraint holds by
/// construction and every weight is an integer multiple of `1/total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleWeight {
    /// (candidate index, count), sorted by candidate, counts positive.
    pub counts: Vec<(usize, u32)>,
    pub total: u32,
}

impl EnsembleWeight {
    fn from_winners(winners: &[usize]) -> Self {
        let mut counts: Vec<(usize, u32)> = Vec::new();
        for &w in winners {
            match counts.binary_search_by_key(&w, |(spec, _)| *spec) {
                Ok(i) => counts[i].1 += 1,
                Err(i) => counts.insert(i, (w, 1)),
            }
        }
        EnsembleWeight {
            counts,
            total: winners.len() as u32,
        }
    }

    pub fn weight_of(&self, spec: usize) -> f64 {
        self.counts
            .iter()
            .find(|(s, _)| *s == spec)
            .map(|(_, c)| *c as f64 / self.total as f64)
            .unwrap_or(0.0)
    }

    /// Heaviest candidate; ties go to the earlier one.
    pub fn top(&self) -> Option<usize> {
        self.counts
            .iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(spec, _)| *spec)
    }
}

/// What one selection step decided.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub t: usize,
    pub method: &'static str,
    /// Candidate whose forecast was used (dms/fixed) or the ensemble's
    /// top-weight candidate (ae). `None` when no forecast could be produced.
    pub top: Option<usize>,
    /// The adapted forecast of the target `horizon` days ahead.
    pub forecast: Option<f64>,
    /// The loss could not pick anyone with a usable forecast and the
    /// conservative fallback candidate was consulted instead.
    pub fallback: bool,
    /// Ensemble mass had to be renormalised over candidates that actually
    /// produced a forecast.
    pub redistributed: bool,
    /// Constructed ensemble weights (ae only), before renormalisation.
    pub weights: Option<EnsembleWeight>,
}

impl SelectionTrace {
    fn empty(t: usize, method: &'static str) -> Self {
        SelectionTrace {
            t,
            method,
            top: None,
            forecast: None,
            fallback: false,
            redistributed: false,
            weights: None,
        }
    }
}

/// Everything a selection step may look at: the loss evaluator (which owns
/// the store and realised series) and the fallback candidate.
pub struct StepInputs<'a> {
    pub eval: &'a LossEvaluator<'a>,
    pub store: &'a ForecastStore,
    pub n_specs: usize,
    pub horizon: usize,
    pub fallback_spec: Option<usize>,
}

/// A selection rule applied date by date.
pub trait SelectionMethod: Send + Sync {
    /// Registry / config / export name.
    fn name(&self) -> &'static str;

    /// Decide at date `t` using information up to `t` only.
    fn step(&self, inputs: &StepInputs<'_>, t: usize) -> SelectionTrace;

    /// Run over an inclusive date range. The default just loops `step`;
    /// methods with reusable intermediate state may override it, but must
    /// produce identical traces.
    fn run(&self, inputs: &StepInputs<'_>, range: (usize, usize)) -> Vec<SelectionTrace> {
        (range.0..=range.1).map(|t| self.step(inputs, t)).collect()
    }
}

/// Loss-minimising selection over the trailing `v` dates.
pub struct DmsMethod {
    pub v: usize,
}

/// Ensemble over the winners of `v0` staggered sub-windows, each scored
/// with a `v1`-window loss.
pub struct AeMethod {
    pub v0: usize,
    pub v1: usize,
}

/// One frozen candidate; no adaptation, no fallback.
pub struct FixedMethod {
    pub spec_index: usize,
}

impl SelectionMethod for DmsMethod {
    fn name(&self) -> &'static str {
        "dms"
    }

    fn step(&self, inputs: &StepInputs<'_>, t: usize) -> SelectionTrace {
        dms_step(inputs, t, self.v)
    }
}

impl SelectionMethod for AeMethod {
    fn name(&self) -> &'static str {
        "ae"
    }

    fn step(&self, inputs: &StepInputs<'_>, t: usize) -> SelectionTrace {
        ae_step(inputs, t, self.v0, self.v1)
    }

    fn run(&self, inputs: &StepInputs<'_>, range: (usize, usize)) -> Vec<SelectionTrace> {
        // The sub-window winner at a given date never changes, so keep a
        // rolling buffer instead of re-ranking v0 windows per step.
        let mut winners: std::collections::VecDeque<Option<usize>> =
            std::collections::VecDeque::with_capacity(self.v0);
        let warm_start = range.0.saturating_sub(self.v0 - 1);
        for tau in warm_start..range.0 {
            winners.push_back(subwindow_winner(inputs, tau, self.v1));
        }
        let mut traces = Vec::with_capacity(range.1 - range.0 + 1);
        for t in range.0..=range.1 {
            winners.push_back(subwindow_winner(inputs, t, self.v1));
            while winners.len() > self.v0.min(t + 1) {
                winners.pop_front();
            }
            let flat: Vec<Option<usize>> = winners.iter().copied().collect();
            traces.push(assemble_ensemble(inputs, t, &flat));
        }
        traces
    }
}

impl SelectionMethod for FixedMethod {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn step(&self, inputs: &StepInputs<'_>, t: usize) -> SelectionTrace {
        let mut trace = SelectionTrace::empty(t, self.name());
        trace.top = Some(self.spec_index);
        trace.forecast = inputs
            .store
            .forecast_at(self.spec_index, t, inputs.horizon);
        trace
    }
}

pub const METHOD_NAMES: [&str; 3] = ["dms", "ae", "fixed"];

/// Per-run knobs the method builders draw from.
#[derive(Debug, Clone, Copy)]
pub struct MethodParams {
    /// Full loss window (dms).
    pub v: usize,
    /// Sub-window count and sub-window loss length (ae).
    pub v0: usize,
    pub v1: usize,
    /// Candidate index for the fixed method.
    pub fixed_spec: Option<usize>,
}

/// Build a registered selection method by name.
pub fn build_method(name: &str, params: &MethodParams) -> Result<Box<dyn SelectionMethod>> {
    match name {
        "dms" => Ok(Box::new(DmsMethod { v: params.v })),
        "ae" => {
            if params.v0 == 0 || params.v1 == 0 {
                return Err(Error::config("ae needs positive v0 and v1"));
            }
            Ok(Box::new(AeMethod {
                v0: params.v0,
                v1: params.v1,
            }))
        }
        "fixed" => {
            let spec_index = params
                .fixed_spec
                .ok_or_else(|| Error::config("fixed method needs a candidate"))?;
            Ok(Box::new(FixedMethod { spec_index }))
        }
        other => Err(Error::config(format!(
            "unknown selection method {other:?} (expected one of {METHOD_NAMES:?})"
        ))),
    }
}

/// One plain selection step: rank by loss over `v` trailing dates, take the
/// cheapest candidate's forecast; fall back to the conservative candidate
/// when the winner (or everyone) has nothing usable to say.
pub fn dms_step(inputs: &StepInputs<'_>, t: usize, v: usize) -> SelectionTrace {
    let mut trace = SelectionTrace::empty(t, "dms");
    let ranked = inputs.eval.rank(inputs.n_specs, t, v);
    if let Some(&(best, _)) = ranked.first() {
        if let Some(f) = inputs.store.forecast_at(best, t, inputs.horizon) {
            trace.top = Some(best);
            trace.forecast = Some(f);
            return trace;
        }
    }
    trace.fallback = true;
    if let Some(fb) = inputs.fallback_spec {
        trace.top = Some(fb);
        trace.forecast = inputs.store.forecast_at(fb, t, inputs.horizon);
    }
    trace
}

fn subwindow_winner(inputs: &StepInputs<'_>, tau: usize, v1: usize) -> Option<usize> {
    inputs
        .eval
        .rank(inputs.n_specs, tau, v1)
        .first()
        .map(|&(spec, _)| spec)
        .or(inputs.fallback_spec)
}

fn assemble_ensemble(
    inputs: &StepInputs<'_>,
    t: usize,
    winners: &[Option<usize>],
) -> SelectionTrace {
    let mut trace = SelectionTrace::empty(t, "ae");
    let resolved: Vec<usize> = winners.iter().copied().flatten().collect();
    if resolved.is_empty() {
        trace.fallback = true;
        if let Some(fb) = inputs.fallback_spec {
            trace.top = Some(fb);
            trace.forecast = inputs.store.forecast_at(fb, t, inputs.horizon);
        }
        return trace;
    }
    let weights = EnsembleWeight::from_winners(&resolved);

    let mut num = 0.0;
    let mut avail: u32 = 0;
    for &(spec, count) in &weights.counts {
        if let Some(f) = inputs.store.forecast_at(spec, t, inputs.horizon) {
            num += count as f64 * f;
            avail += count;
        }
    }
    trace.top = weights.top();
    if avail > 0 {
        trace.redistributed = avail < weights.total;
        trace.forecast = Some(num / avail as f64);
    } else {
        trace.fallback = true;
        if let Some(fb) = inputs.fallback_spec {
            trace.top = Some(fb);
            trace.forecast = inputs.store.forecast_at(fb, t, inputs.horizon);
        }
    }
    trace.weights = Some(weights);
    trace
}

/// One ensemble step: winners of the `v0` sub-windows ending at `t`, each
/// scored over `v1` dates, blended with weight `1/v0` apiece. Mass on
/// candidates without a forecast at `t` is renormalised over those with
/// one; if nobody has a forecast the step falls back like `dms_step`.
pub fn ae_step(inputs: &StepInputs<'_>, t: usize, v0: usize, v1: usize) -> SelectionTrace {
    let lowest = t.saturating_sub(v0 - 1);
    let winners: Vec<Option<usize>> = (lowest..=t)
        .map(|tau| subwindow_winner(inputs, tau, v1))
        .collect();
    assemble_ensemble(inputs, t, &winners)
}

/// Conservative fallback candidate: the constant model fitted on the
/// largest window present in the candidate set.
pub fn fallback_spec_index(specs: &[ModelSpec]) -> Option<usize> {
    specs
        .iter()
        .enumerate()
        .filter(|(_, s)| s.class == ModelClass::Ar && s.lag == 0)
        .max_by_key(|(_, s)| s.window)
        .map(|(i, _)| i)
}

/// Walk-forward run scope: one asset, one horizon, one loss shape, one
/// selection method.
#[derive(Debug, Clone)]
pub struct WalkForwardConfig {
    /// Maximum horizon forecasts are stored for (every step appends
    /// forecasts for horizons `1..=k_max` so later multi-valued losses can
    /// be evaluated).
    pub k_max: usize,
    pub windows: Vec<u32>,
    pub loss: LossParams,
    /// Full loss window; also fixes the burn-in requirement.
    pub v: usize,
    /// Inclusive selection-date range.
    pub range: (usize, usize),
}

impl WalkForwardConfig {
    pub fn burn_in(&self) -> usize {
        let max_window = self.windows.iter().copied().max().unwrap_or(0) as usize;
        max_window + self.v + self.k_max
    }
}

#[derive(Debug)]
pub struct WalkForwardRun {
    pub specs: Vec<ModelSpec>,
    pub store: ForecastStore,
    pub fallback_spec: Option<usize>,
    pub traces: Vec<SelectionTrace>,
}

/// Sweep every candidate across all origins `0..=through`, appending each
/// origin's forecasts for horizons `1..=k_max`. Origins too early to fit
/// simply contribute nothing.
pub fn populate_store(
    series: &RunSeries,
    specs: &[ModelSpec],
    k_max: usize,
    through: usize,
) -> Result<ForecastStore> {
    let mut store = ForecastStore::new(specs.len(), series.len(), k_max);
    for origin in 0..=through.min(series.len().saturating_sub(1)) {
        let sweep = run_model_sweep(series, specs, origin, k_max);
        store.insert_sweep(origin, &sweep)?;
    }
    Ok(store)
}

/// Selection pass over a populated store. Pure with respect to its inputs:
/// the same store, series, and parameters always give the same traces.
pub fn select_series(
    store: &ForecastStore,
    series: &RunSeries,
    specs: &[ModelSpec],
    method: &dyn SelectionMethod,
    loss: LossParams,
    range: (usize, usize),
) -> Vec<SelectionTrace> {
    let eval = LossEvaluator::with_cache(store, &series.y, loss);
    let inputs = StepInputs {
        eval: &eval,
        store,
        n_specs: specs.len(),
        horizon: loss.horizon,
        fallback_spec: fallback_spec_index(specs),
    };
    method.run(&inputs, range)
}

/// Full walk-forward: enumerate candidates, sweep forecasts through the end
/// of the range, then select date by date.
pub fn walk_forward(
    series: &RunSeries,
    cfg: &WalkForwardConfig,
    method: &dyn SelectionMethod,
) -> Result<WalkForwardRun> {
    if cfg.loss.horizon != series.horizon {
        return Err(Error::config(format!(
            "loss horizon {} does not match the run's target horizon {}",
            cfg.loss.horizon, series.horizon
        )));
    }
    if cfg.range.0 > cfg.range.1 || cfg.range.1 >= series.len() {
        return Err(Error::config(format!(
            "selection range {:?} outside the data (len {})",
            cfg.range,
            series.len()
        )));
    }
    let burn_in = cfg.burn_in();
    if cfg.range.0 < burn_in {
        return Err(Error::config(format!(
            "selection range starts at {} but burn-in needs {} days (largest window + loss window + max horizon)",
            cfg.range.0, burn_in
        )));
    }
    let specs = enumerate_specs(&cfg.windows, series);
    if specs.is_empty() {
        return Err(Error::config("no candidates: empty window list"));
    }
    let store = populate_store(series, &specs, cfg.k_max, cfg.range.1)?;
    let traces = select_series(&store, series, &specs, method, cfg.loss, cfg.range);
    Ok(WalkForwardRun {
        fallback_spec: fallback_spec_index(&specs),
        specs,
        store,
        traces,
    })
}
