//! Autoregressive candidates fitted by Yule-Walker.
//!
//! Autocovariances use the biased 1/w normalisation, which keeps the
//! Toeplitz system positive semi-definite; the system is solved by the
//! Levinson-Durbin recursion. The intercept is set so the implied model
//! mean equals the window sample mean, and AR(0) degenerates to that mean.
//! Multi-horizon forecasts are iterated, feeding forecasts back in as the
//! unknown intermediate values.

use super::{
    Coefficients, FitStatus, FittedModel, ModelClass, ModelFamily, ModelSpec, RunSeries, RunView,
    UnusableReason,
};

pub struct ArFamily;

pub const AR_MAX_LAG: u8 = 5;

impl ModelFamily for ArFamily {
    fn name(&self) -> &'static str {
        "ar"
    }

    fn class(&self) -> ModelClass {
        ModelClass::Ar
    }

    fn enumerate(&self, windows: &[u32], _series: &RunSeries) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for lag in 0..=AR_MAX_LAG {
            for &w in windows {
                out.push(ModelSpec::ar(lag, w));
            }
        }
        out
    }

    fn fit(&self, view: &RunView<'_>, spec: ModelSpec, _horizon: usize) -> FittedModel {
        let t = view.limit();
        let w = spec.window as usize;
        let p = spec.lag as usize;

        let fail = |reason| FittedModel::unusable(spec, t, None, reason);
        if w <= p || t + 1 < w {
            return fail(UnusableReason::IncompleteWindow);
        }
        let mut window = Vec::with_capacity(w);
        for idx in (t + 1 - w)..=t {
            match view.y(idx) {
                Some(v) => window.push(v),
                None => return fail(UnusableReason::IncompleteWindow),
            }
        }

        let mean = window.iter().sum::<f64>() / w as f64;
        if p == 0 {
            return FittedModel {
                spec,
                fit_index: t,
                fitted_horizon: None,
                coefficients: Coefficients::Ar {
                    alpha: mean,
                    phi: Vec::new(),
                },
                status: FitStatus::Usable,
            };
        }

        let gamma = autocovariances(&window, mean, p);
        if gamma[0] <= 0.0 || !gamma[0].is_finite() {
            return fail(UnusableReason::ZeroVariance);
        }
        let phi = match levinson_durbin(&gamma, p) {
            Some(phi) => phi,
            None => return fail(UnusableReason::NumericallySingular),
        };
        let alpha = mean * (1.0 - phi.iter().sum::<f64>());
        if !alpha.is_finite() || phi.iter().any(|c| !c.is_finite()) {
            return fail(UnusableReason::NonFinite);
        }
        FittedModel {
            spec,
            fit_index: t,
            fitted_horizon: None,
            coefficients: Coefficients::Ar { alpha, phi },
            status: FitStatus::Usable,
        }
    }

    fn forecast(&self, view: &RunView<'_>, fitted: &FittedModel, horizon: usize) -> Option<f64> {
        iterate_forecasts(view, fitted, horizon).map(|path| path[horizon - 1])
    }

    fn forecasts_through(
        &self,
        view: &RunView<'_>,
        spec: ModelSpec,
        k_max: usize,
    ) -> Vec<Option<f64>> {
        // One fit serves every horizon; the iteration produces the whole path.
        let fitted = self.fit(view, spec, 1);
        match iterate_forecasts(view, &fitted, k_max) {
            Some(path) => path.into_iter().map(Some).collect(),
            None => vec![None; k_max],
        }
    }
}

/// Biased autocovariances of the window at lags `0..=p`.
fn autocovariances(window: &[f64], mean: f64, p: usize) -> Vec<f64> {
    let w = window.len();
    let mut gamma = vec![0.0; p + 1];
    for (j, g) in gamma.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..(w - j) {
            acc += (window[i] - mean) * (window[i + j] - mean);
        }
        *g = acc / w as f64;
    }
    gamma
}

/// Solve the order-`p` Yule-Walker system for gamma[0..=p].
///
/// Returns `None` when the recursion hits a non-positive prediction-error
/// variance or loses finiteness, both signs of a numerically singular
/// system.
fn levinson_durbin(gamma: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut phi = vec![0.0; p];
    let mut prev = vec![0.0; p];
    let mut err = gamma[0];

    for k in 0..p {
        let mut acc = gamma[k + 1];
        for j in 0..k {
            acc -= prev[j] * gamma[k - j];
        }
        if err <= 0.0 || !err.is_finite() {
            return None;
        }
        let reflection = acc / err;
        phi[k] = reflection;
        for j in 0..k {
            phi[j] = prev[j] - reflection * prev[k - 1 - j];
        }
        err *= 1.0 - reflection * reflection;
        if !err.is_finite() {
            return None;
        }
        prev[..=k].copy_from_slice(&phi[..=k]);
    }
    if phi.iter().any(|c| !c.is_finite()) {
        return None;
    }
    Some(phi)
}

/// Plug-in multi-step path: forecasts for horizons `1..=k_max` from the
/// fitted AR, with unknown intermediate values replaced by their own
/// forecasts. Needs the last `p` observations at the cut-off.
fn iterate_forecasts(
    view: &RunView<'_>,
    fitted: &FittedModel,
    k_max: usize,
) -> Option<Vec<f64>> {
    if !fitted.usable() || k_max == 0 {
        return None;
    }
    let (alpha, phi) = match &fitted.coefficients {
        Coefficients::Ar { alpha, phi } => (*alpha, phi),
        _ => return None,
    };
    let t = view.limit();
    let p = phi.len();
    if t + 1 < p {
        return None;
    }
    let mut history = Vec::with_capacity(p);
    for idx in (t + 1 - p)..=t {
        history.push(view.y(idx)?);
    }

    let mut path = Vec::with_capacity(k_max);
    for step in 1..=k_max {
        let mut value = alpha;
        for (j, coeff) in phi.iter().enumerate() {
            // Value at time t + step - (j+1): either already forecast or observed.
            let offset = step as isize - (j as isize + 1);
            let lagged = if offset > 0 {
                path[offset as usize - 1]
            } else {
                history[(history.len() as isize - 1 + offset) as usize]
            };
            value += coeff * lagged;
        }
        path.push(value);
    }
    if path.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(path)
}
