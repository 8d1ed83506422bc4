//! Forecast bookkeeping and the discounted loss used to compare candidates.
//!
//! Losses look back over a window of `v` evaluation dates ending at the
//! decision date `t`, weighting the error at date `tau` by `lambda^(t-tau)`.
//! The single-valued family scores only the forecast made a full horizon
//! ahead of each evaluation date; the multi-valued family scores the whole
//! stack of forecasts that targeted it (made 1, 2, .., k days before).
//! Dates where a term cannot be evaluated are skipped, and a candidate with
//! fewer than half the window evaluable is treated as incomparable rather
//! than scored on thin evidence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelSpec;

/// Append-only container of point forecasts keyed by candidate, forecast
/// origin, and target date. Dense storage: one slot per (spec, origin,
/// horizon) with NaN marking "never produced".
#[derive(Debug, Clone)]
pub struct ForecastStore {
    n_specs: usize,
    n_dates: usize,
    k_max: usize,
    values: Vec<f64>,
}

impl ForecastStore {
    pub fn new(n_specs: usize, n_dates: usize, k_max: usize) -> Self {
        ForecastStore {
            n_specs,
            n_dates,
            k_max,
            values: vec![f64::NAN; n_specs * n_dates * k_max],
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn n_dates(&self) -> usize {
        self.n_dates
    }

    pub fn n_specs(&self) -> usize {
        self.n_specs
    }

    fn slot(&self, spec: usize, origin: usize, target: usize) -> Option<usize> {
        if spec >= self.n_specs || origin >= self.n_dates || target <= origin {
            return None;
        }
        let horizon = target - origin;
        if horizon > self.k_max {
            return None;
        }
        Some((spec * self.n_dates + origin) * self.k_max + horizon - 1)
    }

    /// Record one forecast. Duplicate keys are an error: the store is a log
    /// of decisions already made, never a place to revise them.
    pub fn insert(&mut self, spec: usize, origin: usize, target: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::runtime(format!(
                "non-finite forecast for spec {spec} at origin {origin}"
            )));
        }
        let slot = self.slot(spec, origin, target).ok_or_else(|| {
            Error::runtime(format!(
                "forecast key out of range: spec {spec}, origin {origin}, target {target}"
            ))
        })?;
        if !self.values[slot].is_nan() {
            return Err(Error::runtime(format!(
                "duplicate forecast for spec {spec}, origin {origin}, target {target}"
            )));
        }
        self.values[slot] = value;
        Ok(())
    }

    /// Record a sweep step: forecasts per spec for horizons `1..=k_max`.
    pub fn insert_sweep(&mut self, origin: usize, sweep: &[Vec<Option<f64>>]) -> Result<()> {
        for (spec, horizons) in sweep.iter().enumerate() {
            for (h0, value) in horizons.iter().enumerate() {
                if let Some(v) = value {
                    self.insert(spec, origin, origin + h0 + 1, *v)?;
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, spec: usize, origin: usize, target: usize) -> Option<f64> {
        let slot = self.slot(spec, origin, target)?;
        let v = self.values[slot];
        (!v.is_nan()).then_some(v)
    }

    /// Forecast made at `origin` for `origin + horizon`.
    pub fn forecast_at(&self, spec: usize, origin: usize, horizon: usize) -> Option<f64> {
        self.get(spec, origin, origin + horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossFamily {
    Single,
    Multi,
}

impl LossFamily {
    pub fn name(self) -> &'static str {
        match self {
            LossFamily::Single => "single",
            LossFamily::Multi => "multi",
        }
    }

    pub fn parse(s: &str) -> Option<LossFamily> {
        match s {
            "single" => Some(LossFamily::Single),
            "multi" => Some(LossFamily::Multi),
            _ => None,
        }
    }
}

/// Shape of the discounted loss: family, discount, exponent, and the
/// forecast horizon the run is scoped to. The look-back window length is a
/// per-evaluation argument because the ensemble method scores sub-windows
/// of a different length than the plain selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    pub family: LossFamily,
    pub lambda: f64,
    pub p: f64,
    pub horizon: usize,
}

/// |e|^p with exact fast paths for the exponents the grid actually uses.
#[inline]
fn pow_p(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else if p == 1.5 {
        x * x.sqrt()
    } else {
        x.powf(p)
    }
}

/// Evaluates candidate losses against a store and the realised target
/// series, optionally through a precomputed per-date term cache (the cached
/// and direct paths share the same arithmetic and give identical results).
pub struct LossEvaluator<'a> {
    store: &'a ForecastStore,
    y: &'a [Option<f64>],
    params: LossParams,
    /// cache[spec][tau]: the undiscounted term at tau, NaN when not evaluable.
    cache: Option<Vec<Vec<f64>>>,
}

impl<'a> LossEvaluator<'a> {
    pub fn new(store: &'a ForecastStore, y: &'a [Option<f64>], params: LossParams) -> Self {
        LossEvaluator {
            store,
            y,
            params,
            cache: None,
        }
    }

    /// Precompute every candidate's per-date term once; worthwhile when the
    /// same evaluator serves a whole walk-forward pass.
    pub fn with_cache(
        store: &'a ForecastStore,
        y: &'a [Option<f64>],
        params: LossParams,
    ) -> Self {
        let n = y.len().min(store.n_dates());
        let cache = (0..store.n_specs())
            .map(|spec| {
                (0..n)
                    .map(|tau| local_term(store, y, &params, spec, tau).unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        LossEvaluator {
            store,
            y,
            params,
            cache: Some(cache),
        }
    }

    pub fn params(&self) -> &LossParams {
        &self.params
    }

    #[inline]
    fn term(&self, spec: usize, tau: usize) -> Option<f64> {
        match &self.cache {
            Some(cache) => {
                let v = *cache.get(spec)?.get(tau)?;
                (!v.is_nan()).then_some(v)
            }
            None => local_term(self.store, self.y, &self.params, spec, tau),
        }
    }

    /// Discounted loss of `spec` at decision date `t` over a window of `v`
    /// evaluation dates. `None` means incomparable: fewer than half the
    /// window's terms could be evaluated.
    pub fn loss_at(&self, spec: usize, t: usize, v: usize) -> Option<f64> {
        debug_assert!(v >= 1);
        let lambda = self.params.lambda;
        let mut weight = 1.0;
        let mut acc = 0.0;
        let mut evaluable = 0usize;
        let lowest = t.saturating_sub(v - 1);
        for tau in (lowest..=t).rev() {
            if let Some(term) = self.term(spec, tau) {
                acc += weight * term;
                evaluable += 1;
            }
            weight *= lambda;
        }
        (2 * evaluable >= v).then_some(acc)
    }

    /// All comparable candidates at `t`, cheapest loss first, ties broken by
    /// candidate order (the spec tie-break order when specs are enumerated).
    pub fn rank(&self, n_specs: usize, t: usize, v: usize) -> Vec<(usize, f64)> {
        let mut ranked: Vec<(usize, f64)> = (0..n_specs)
            .filter_map(|spec| self.loss_at(spec, t, v).map(|l| (spec, l)))
            .collect();
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        ranked
    }
}

/// Undiscounted term at evaluation date `tau`: the p-th power error of the
/// horizon-k forecast (single family) or the summed p-th power errors of
/// every forecast that targeted `tau` (multi family, components with no
/// stored forecast skipped).
fn local_term(
    store: &ForecastStore,
    y: &[Option<f64>],
    params: &LossParams,
    spec: usize,
    tau: usize,
) -> Option<f64> {
    let actual = (*y.get(tau)?)?;
    match params.family {
        LossFamily::Single => {
            if tau < params.horizon {
                return None;
            }
            let forecast = store.get(spec, tau - params.horizon, tau)?;
            Some(pow_p((forecast - actual).abs(), params.p))
        }
        LossFamily::Multi => {
            let mut acc = 0.0;
            let mut any = false;
            for h in 1..=params.horizon {
                if tau < h {
                    break;
                }
                if let Some(forecast) = store.get(spec, tau - h, tau) {
                    acc += pow_p((forecast - actual).abs(), params.p);
                    any = true;
                }
            }
            any.then_some(acc)
        }
    }
}

/// Single-valued discounted loss of one candidate at `t` (window `v`,
/// horizon `k`); `None` when incomparable.
pub fn single_valued_loss(
    store: &ForecastStore,
    y: &[Option<f64>],
    spec: usize,
    t: usize,
    lambda: f64,
    p: f64,
    v: usize,
    k: usize,
) -> Option<f64> {
    LossEvaluator::new(
        store,
        y,
        LossParams {
            family: LossFamily::Single,
            lambda,
            p,
            horizon: k,
        },
    )
    .loss_at(spec, t, v)
}

/// Multi-valued discounted loss: scores the stacked forecasts targeting
/// each evaluation date.
pub fn multi_valued_loss(
    store: &ForecastStore,
    y: &[Option<f64>],
    spec: usize,
    t: usize,
    lambda: f64,
    p: f64,
    v: usize,
    k: usize,
) -> Option<f64> {
    LossEvaluator::new(
        store,
        y,
        LossParams {
            family: LossFamily::Multi,
            lambda,
            p,
            horizon: k,
        },
    )
    .loss_at(spec, t, v)
}

/// Comparable candidates sorted by loss. Thin wrapper kept as the named
/// entry point; ties and exclusions behave exactly as in
/// [`LossEvaluator::rank`].
pub fn rank_candidates(
    store: &ForecastStore,
    y: &[Option<f64>],
    specs: &[ModelSpec],
    t: usize,
    params: LossParams,
    v: usize,
) -> Vec<(usize, f64)> {
    LossEvaluator::new(store, y, params).rank(specs.len(), t, v)
}
