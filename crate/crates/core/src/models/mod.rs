//! Candidate forecasting models.
//!
//! Three families, each behind the [`ModelFamily`] trait and registered by
//! name: autoregressions fitted by Yule-Walker, regressions on a lagged
//! term-structure slope, and regressions on lagged short/long curve levels.
//! A [`ModelSpec`] names one concrete candidate (family, curve, lag, fit
//! window); the derived ordering on specs is the tie-break order used by
//! the selection layer, so keep the field order as-is.

mod ar;
mod ols;

pub use ar::ArFamily;
pub use ols::{fit_ols, OlsFit, SlopeFamily, ShortLongFamily, MAX_CONDITION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{col, GuardedSeries, TimeSeriesFrame};
use crate::ingest::{log_return, CurveKind};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ModelClass {
    Ar,
    CurveSlope,
    CurveShortLong,
}

impl ModelClass {
    pub fn name(self) -> &'static str {
        match self {
            ModelClass::Ar => "ar",
            ModelClass::CurveSlope => "slope",
            ModelClass::CurveShortLong => "shortlong",
        }
    }
}

/// One candidate: model form plus estimation window.
///
/// Field order matters: the derived lexicographic order (class, curve, lag,
/// window) is the engine-wide deterministic tie-break.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ModelSpec {
    pub class: ModelClass,
    pub curve: Option<CurveKind>,
    /// Autoregressive order; zero for the curve classes.
    pub lag: u8,
    /// Trailing observations used for fitting.
    pub window: u32,
}

impl ModelSpec {
    pub fn ar(lag: u8, window: u32) -> Self {
        ModelSpec {
            class: ModelClass::Ar,
            curve: None,
            lag,
            window,
        }
    }

    pub fn slope(curve: CurveKind, window: u32) -> Self {
        ModelSpec {
            class: ModelClass::CurveSlope,
            curve: Some(curve),
            lag: 0,
            window,
        }
    }

    pub fn short_long(curve: CurveKind, window: u32) -> Self {
        ModelSpec {
            class: ModelClass::CurveShortLong,
            curve: Some(curve),
            lag: 0,
            window,
        }
    }

    pub fn id_string(&self) -> String {
        match self.class {
            ModelClass::Ar => format!("ar{}_w{}", self.lag, self.window),
            ModelClass::CurveSlope => {
                format!("slope_{}_w{}", self.curve.unwrap().name(), self.window)
            }
            ModelClass::CurveShortLong => {
                format!("shortlong_{}_w{}", self.curve.unwrap().name(), self.window)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnusableReason {
    /// Window (or lagged regressor range) reaches before the data or over a gap.
    IncompleteWindow,
    /// No variation to fit against.
    ZeroVariance,
    /// Normal equations too ill-conditioned to trust.
    NumericallySingular,
    /// Fit produced non-finite coefficients.
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Coefficients {
    /// Intercept plus AR coefficients, lowest lag first.
    Ar { alpha: f64, phi: Vec<f64> },
    /// Intercept plus regression coefficients in regressor order.
    Linear { alpha: f64, beta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FitStatus {
    Usable,
    Unusable(UnusableReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    /// Calendar index the fit was made at (last observation used).
    pub fit_index: usize,
    /// Horizon the regressor lag was taken at; `None` for AR fits, which are
    /// horizon-free and forecast any horizon by iteration.
    pub fitted_horizon: Option<usize>,
    pub coefficients: Coefficients,
    pub status: FitStatus,
}

impl FittedModel {
    pub fn usable(&self) -> bool {
        matches!(self.status, FitStatus::Usable)
    }

    pub(crate) fn unusable(
        spec: ModelSpec,
        fit_index: usize,
        fitted_horizon: Option<usize>,
        reason: UnusableReason,
    ) -> Self {
        FittedModel {
            spec,
            fit_index,
            fitted_horizon,
            coefficients: Coefficients::Linear {
                alpha: f64::NAN,
                beta: Vec::new(),
            },
            status: FitStatus::Unusable(reason),
        }
    }
}

/// Per-run data bundle: the target series (k-day log returns of one asset)
/// plus whatever curve regressors the frame provides.
#[derive(Debug, Clone)]
pub struct RunSeries {
    pub asset: String,
    /// Forecast horizon the target returns are computed over.
    pub horizon: usize,
    pub y: Vec<Option<f64>>,
    slope: [Option<Vec<Option<f64>>>; 2],
    short: [Option<Vec<Option<f64>>>; 2],
    long: [Option<Vec<Option<f64>>>; 2],
}

impl RunSeries {
    /// Derive the run inputs for `(asset, horizon)` from an aligned frame.
    pub fn from_frame(frame: &TimeSeriesFrame, asset: &str, horizon: usize) -> Result<RunSeries> {
        let prices = frame
            .column(&col::price(asset))
            .ok_or_else(|| Error::config(format!("asset {asset:?} not present in frame")))?;
        let y = log_return(prices, horizon);
        let mut series = RunSeries {
            asset: asset.to_string(),
            horizon,
            y,
            slope: [None, None],
            short: [None, None],
            long: [None, None],
        };
        for kind in CurveKind::ALL {
            let i = kind as usize;
            series.slope[i] = frame.column(&col::slope(kind.name())).map(|c| c.to_vec());
            series.short[i] = frame.column(&col::short(kind.name())).map(|c| c.to_vec());
            series.long[i] = frame.column(&col::long(kind.name())).map(|c| c.to_vec());
        }
        Ok(series)
    }

    /// Build directly from raw columns (tests, synthetic runs).
    pub fn from_columns(
        asset: &str,
        horizon: usize,
        y: Vec<Option<f64>>,
        slope: Vec<(CurveKind, Vec<Option<f64>>)>,
        short_long: Vec<(CurveKind, Vec<Option<f64>>, Vec<Option<f64>>)>,
    ) -> RunSeries {
        let mut series = RunSeries {
            asset: asset.to_string(),
            horizon,
            y,
            slope: [None, None],
            short: [None, None],
            long: [None, None],
        };
        for (kind, s) in slope {
            series.slope[kind as usize] = Some(s);
        }
        for (kind, s, l) in short_long {
            series.short[kind as usize] = Some(s);
            series.long[kind as usize] = Some(l);
        }
        series
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn has_slope(&self, kind: CurveKind) -> bool {
        self.slope[kind as usize].is_some()
    }

    pub fn has_short_long(&self, kind: CurveKind) -> bool {
        self.short[kind as usize].is_some() && self.long[kind as usize].is_some()
    }

    /// Look-ahead-guarded view with cut-off `t`.
    pub fn view(&self, t: usize) -> RunView<'_> {
        RunView { series: self, limit: t }
    }
}

/// All model inputs, served through the cut-off guard.
#[derive(Clone, Copy)]
pub struct RunView<'a> {
    series: &'a RunSeries,
    limit: usize,
}

impl<'a> RunView<'a> {
    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn y(&self, idx: usize) -> Option<f64> {
        GuardedSeries::new(&self.series.y, self.limit).at(idx)
    }

    fn curve_col(&self, col: &Option<Vec<Option<f64>>>, idx: usize) -> Option<f64> {
        col.as_ref()
            .and_then(|c| GuardedSeries::new(c, self.limit).at(idx))
    }

    pub fn slope(&self, kind: CurveKind, idx: usize) -> Option<f64> {
        self.curve_col(&self.series.slope[kind as usize], idx)
    }

    pub fn short(&self, kind: CurveKind, idx: usize) -> Option<f64> {
        self.curve_col(&self.series.short[kind as usize], idx)
    }

    pub fn long(&self, kind: CurveKind, idx: usize) -> Option<f64> {
        self.curve_col(&self.series.long[kind as usize], idx)
    }
}

/// A family of interchangeable model forms sharing a fitting procedure.
pub trait ModelFamily: Send + Sync {
    /// Registry name (also used in config files and exports).
    fn name(&self) -> &'static str;

    fn class(&self) -> ModelClass;

    /// All candidates this family contributes given the configured windows
    /// and the data actually present in the run.
    fn enumerate(&self, windows: &[u32], series: &RunSeries) -> Vec<ModelSpec>;

    /// Fit `spec` using data up to the view's cut-off. Curve families fit
    /// one regression per horizon (the regressor enters at that lag); AR
    /// fits are horizon-free.
    fn fit(&self, view: &RunView<'_>, spec: ModelSpec, horizon: usize) -> FittedModel;

    /// Forecast of the target `horizon` days past the cut-off.
    fn forecast(&self, view: &RunView<'_>, fitted: &FittedModel, horizon: usize) -> Option<f64>;

    /// Forecasts for horizons `1..=k_max`, index 0 holding horizon 1.
    fn forecasts_through(
        &self,
        view: &RunView<'_>,
        spec: ModelSpec,
        k_max: usize,
    ) -> Vec<Option<f64>> {
        (1..=k_max)
            .map(|h| {
                let fitted = self.fit(view, spec, h);
                self.forecast(view, &fitted, h)
            })
            .collect()
    }
}

static AR_FAMILY: ArFamily = ArFamily;
static SLOPE_FAMILY: SlopeFamily = SlopeFamily;
static SHORT_LONG_FAMILY: ShortLongFamily = ShortLongFamily;

/// Registered families in class order.
pub fn model_families() -> [&'static dyn ModelFamily; 3] {
    [&AR_FAMILY, &SLOPE_FAMILY, &SHORT_LONG_FAMILY]
}

pub fn family_for(class: ModelClass) -> &'static dyn ModelFamily {
    match class {
        ModelClass::Ar => &AR_FAMILY,
        ModelClass::CurveSlope => &SLOPE_FAMILY,
        ModelClass::CurveShortLong => &SHORT_LONG_FAMILY,
    }
}

pub fn family_by_name(name: &str) -> Option<&'static dyn ModelFamily> {
    model_families()
        .into_iter()
        .find(|f| f.name() == name)
}

/// Full candidate set over all registered families, in tie-break order.
pub fn enumerate_specs(windows: &[u32], series: &RunSeries) -> Vec<ModelSpec> {
    let mut specs: Vec<ModelSpec> = model_families()
        .into_iter()
        .flat_map(|f| f.enumerate(windows, series))
        .collect();
    specs.sort();
    specs
}

/// One sweep step: every candidate's forecasts for horizons `1..=k_max`
/// using data through `t`. Unusable fits and unavailable regressors yield
/// missing entries rather than imputed values.
pub fn run_model_sweep(
    series: &RunSeries,
    specs: &[ModelSpec],
    t: usize,
    k_max: usize,
) -> Vec<Vec<Option<f64>>> {
    let view = series.view(t);
    specs
        .iter()
        .map(|spec| {
            family_for(spec.class)
                .forecasts_through(&view, *spec, k_max)
                .into_iter()
                .map(|f| f.filter(|v| v.is_finite()))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain_series(y: Vec<Option<f64>>) -> RunSeries {
        RunSeries::from_columns("test", 1, y, vec![], vec![])
    }

    #[test]
    fn spec_order_is_class_curve_lag_window() {
        let mut specs = vec![
            ModelSpec::short_long(CurveKind::Vix, 22),
            ModelSpec::slope(CurveKind::Yield, 22),
            ModelSpec::ar(2, 44),
            ModelSpec::ar(0, 252),
            ModelSpec::ar(2, 22),
            ModelSpec::slope(CurveKind::Vix, 44),
        ];
        specs.sort();
        let ids: Vec<String> = specs.iter().map(|s| s.id_string()).collect();
        assert_eq!(
            ids,
            vec![
                "ar0_w252",
                "ar2_w22",
                "ar2_w44",
                "slope_vix_w44",
                "slope_yield_w22",
                "shortlong_vix_w22",
            ]
        );
    }

    #[test]
    fn enumeration_counts_follow_available_data() {
        let windows = [22u32, 44, 63, 126, 252];
        let n = 10;
        let bare = plain_series(vec![Some(0.0); n]);
        // Six AR orders per window, nothing else without curve columns.
        assert_eq!(enumerate_specs(&windows, &bare).len(), 30);

        let with_curves = RunSeries::from_columns(
            "test",
            1,
            vec![Some(0.0); n],
            vec![
                (CurveKind::Vix, vec![Some(0.0); n]),
                (CurveKind::Yield, vec![Some(0.0); n]),
            ],
            vec![
                (CurveKind::Vix, vec![Some(0.0); n], vec![Some(0.0); n]),
                (CurveKind::Yield, vec![Some(0.0); n], vec![Some(0.0); n]),
            ],
        );
        let specs = enumerate_specs(&windows, &with_curves);
        assert_eq!(specs.len(), 50);
        let mut sorted = specs.clone();
        sorted.sort();
        assert_eq!(specs, sorted);
    }

    #[test]
    fn sweep_yields_one_slot_per_spec_and_horizon() {
        // 30 AR specs x 5 horizons = 150 forecast slots.
        let n = 300;
        let y: Vec<Option<f64>> = (0..n).map(|i| Some((i as f64 * 0.7).sin())).collect();
        let series = plain_series(y);
        let specs = enumerate_specs(&[22, 44, 63, 126, 252], &series);
        let sweep = run_model_sweep(&series, &specs, n - 1, 5);
        assert_eq!(sweep.len(), 30);
        assert_eq!(sweep.iter().map(Vec::len).sum::<usize>(), 150);
        // With 299 observations every window fits.
        assert!(sweep.iter().flatten().all(|f| f.is_some()));
    }
}
