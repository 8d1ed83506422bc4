//! Least-squares candidates on lagged term-structure regressors.
//!
//! Both curve families regress the target return on curve features observed
//! `horizon` days earlier, so each horizon carries its own fit. The solver
//! works on the normal equations, which stay tiny here (at most three
//! coefficients), and rejects fits whose normal matrix is too
//! ill-conditioned to invert trustworthily.

use super::{
    Coefficients, FitStatus, FittedModel, ModelClass, ModelFamily, ModelSpec, RunSeries, RunView,
    UnusableReason,
};
use crate::ingest::CurveKind;

/// Condition-number ceiling (Frobenius estimate) for the normal matrix.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub alpha: f64,
    pub beta: Vec<f64>,
}

/// Ordinary least squares with intercept. `columns` holds one slice per
/// regressor, all the same length as `y`.
pub fn fit_ols(columns: &[&[f64]], y: &[f64]) -> Result<OlsFit, UnusableReason> {
    let d = columns.len();
    let n = y.len();
    if n < d + 2 || columns.iter().any(|c| c.len() != n) {
        return Err(UnusableReason::IncompleteWindow);
    }

    // Normal equations over the design (1, x_1, .., x_d).
    let dim = d + 1;
    let mut a = vec![vec![0.0f64; dim]; dim];
    let mut b = vec![0.0f64; dim];
    a[0][0] = n as f64;
    b[0] = y.iter().sum();
    for i in 0..d {
        let xi = columns[i];
        a[0][i + 1] = xi.iter().sum();
        a[i + 1][0] = a[0][i + 1];
        b[i + 1] = xi.iter().zip(y).map(|(x, y)| x * y).sum();
        for j in i..d {
            let dot = xi.iter().zip(columns[j]).map(|(u, v)| u * v).sum();
            a[i + 1][j + 1] = dot;
            a[j + 1][i + 1] = dot;
        }
    }

    let inv = invert(&a).ok_or(UnusableReason::NumericallySingular)?;
    if frobenius(&a) * frobenius(&inv) > MAX_CONDITION {
        return Err(UnusableReason::NumericallySingular);
    }

    let mut coef = vec![0.0f64; dim];
    for i in 0..dim {
        for j in 0..dim {
            coef[i] += inv[i][j] * b[j];
        }
    }
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(UnusableReason::NonFinite);
    }
    Ok(OlsFit {
        alpha: coef[0],
        beta: coef[1..].to_vec(),
    })
}

/// Gauss-Jordan inverse with partial pivoting; `None` on a vanishing pivot.
fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut work: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| work[i][col].abs().total_cmp(&work[j][col].abs()))
            .unwrap();
        if work[pivot_row][col].abs() == 0.0 {
            return None;
        }
        work.swap(col, pivot_row);
        let pivot = work[col][col];
        for v in work[col].iter_mut() {
            *v /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = work[row][col];
            if factor == 0.0 {
                continue;
            }
            let (upper, lower) = work.split_at_mut(row.max(col));
            let (src, dst) = if row > col {
                (&upper[col], &mut lower[0])
            } else {
                (&lower[0], &mut upper[row])
            };
            for j in 0..2 * n {
                dst[j] -= factor * src[j];
            }
        }
    }
    let inv: Vec<Vec<f64>> = work.into_iter().map(|row| row[n..].to_vec()).collect();
    if inv.iter().flatten().any(|v| !v.is_finite()) {
        return None;
    }
    Some(inv)
}

fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Assemble the training window at cut-off `t`: responses `y[tau]` against
/// regressor rows taken `horizon` days earlier, for the last `w` dates.
/// Any gap makes the fit unusable rather than silently shrinking the window.
fn window_rows<F>(
    view: &RunView<'_>,
    w: usize,
    horizon: usize,
    regressors: F,
) -> Option<(Vec<Vec<f64>>, Vec<f64>)>
where
    F: Fn(usize) -> Option<Vec<f64>>,
{
    let t = view.limit();
    if t + 1 < w + horizon {
        return None;
    }
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(w);
    let mut ys = Vec::with_capacity(w);
    for tau in (t + 1 - w)..=t {
        ys.push(view.y(tau)?);
        xs.push(regressors(tau - horizon)?);
    }
    Some((xs, ys))
}

fn fit_curve_spec<F>(
    view: &RunView<'_>,
    spec: ModelSpec,
    horizon: usize,
    regressors: F,
) -> FittedModel
where
    F: Fn(usize) -> Option<Vec<f64>>,
{
    let t = view.limit();
    let w = spec.window as usize;
    let Some((xs, ys)) = window_rows(view, w, horizon, regressors) else {
        return FittedModel::unusable(spec, t, Some(horizon), UnusableReason::IncompleteWindow);
    };
    let d = xs[0].len();
    let columns: Vec<Vec<f64>> = (0..d)
        .map(|j| xs.iter().map(|row| row[j]).collect())
        .collect();
    let column_refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    match fit_ols(&column_refs, &ys) {
        Ok(fit) => FittedModel {
            spec,
            fit_index: t,
            fitted_horizon: Some(horizon),
            coefficients: Coefficients::Linear {
                alpha: fit.alpha,
                beta: fit.beta,
            },
            status: FitStatus::Usable,
        },
        Err(reason) => FittedModel::unusable(spec, t, Some(horizon), reason),
    }
}

fn curve_forecast(
    fitted: &FittedModel,
    horizon: usize,
    current: Option<Vec<f64>>,
) -> Option<f64> {
    if !fitted.usable() {
        return None;
    }
    assert_eq!(
        fitted.fitted_horizon,
        Some(horizon),
        "curve fit for horizon {:?} asked to forecast horizon {horizon}",
        fitted.fitted_horizon
    );
    let Coefficients::Linear { alpha, beta } = &fitted.coefficients else {
        return None;
    };
    let x = current?;
    let mut value = *alpha;
    for (b, xj) in beta.iter().zip(&x) {
        value += b * xj;
    }
    value.is_finite().then_some(value)
}

/// Target regressed on the lagged curve slope.
pub struct SlopeFamily;

impl ModelFamily for SlopeFamily {
    fn name(&self) -> &'static str {
        "slope"
    }

    fn class(&self) -> ModelClass {
        ModelClass::CurveSlope
    }

    fn enumerate(&self, windows: &[u32], series: &RunSeries) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for kind in CurveKind::ALL {
            if series.has_slope(kind) {
                for &w in windows {
                    out.push(ModelSpec::slope(kind, w));
                }
            }
        }
        out
    }

    fn fit(&self, view: &RunView<'_>, spec: ModelSpec, horizon: usize) -> FittedModel {
        let kind = spec.curve.expect("slope spec carries a curve");
        fit_curve_spec(view, spec, horizon, |idx| {
            view.slope(kind, idx).map(|s| vec![s])
        })
    }

    fn forecast(&self, view: &RunView<'_>, fitted: &FittedModel, horizon: usize) -> Option<f64> {
        let kind = fitted.spec.curve.expect("slope spec carries a curve");
        let t = view.limit();
        curve_forecast(fitted, horizon, view.slope(kind, t).map(|s| vec![s]))
    }
}

/// Target regressed on the lagged short-end and long-end curve levels.
pub struct ShortLongFamily;

impl ModelFamily for ShortLongFamily {
    fn name(&self) -> &'static str {
        "shortlong"
    }

    fn class(&self) -> ModelClass {
        ModelClass::CurveShortLong
    }

    fn enumerate(&self, windows: &[u32], series: &RunSeries) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for kind in CurveKind::ALL {
            if series.has_short_long(kind) {
                for &w in windows {
                    out.push(ModelSpec::short_long(kind, w));
                }
            }
        }
        out
    }

    fn fit(&self, view: &RunView<'_>, spec: ModelSpec, horizon: usize) -> FittedModel {
        let kind = spec.curve.expect("short/long spec carries a curve");
        fit_curve_spec(view, spec, horizon, |idx| {
            Some(vec![view.short(kind, idx)?, view.long(kind, idx)?])
        })
    }

    fn forecast(&self, view: &RunView<'_>, fitted: &FittedModel, horizon: usize) -> Option<f64> {
        let kind = fitted.spec.curve.expect("short/long spec carries a curve");
        let t = view.limit();
        let current = (|| Some(vec![view.short(kind, t)?, view.long(kind, t)?]))();
        curve_forecast(fitted, horizon, current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn recovers_exact_linear_relationship() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 + 3.0 * x).collect();
        let fit = fit_ols(&[&x], &y).unwrap();
        assert_relative_eq!(fit.alpha, 2.0, epsilon = 1e-10);
        assert_relative_eq!(fit.beta[0], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn residuals_are_orthogonal_to_the_design() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(5..60);
            let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x2: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let fit = fit_ols(&[&x1, &x2], &y).unwrap();
            let resid: Vec<f64> = (0..n)
                .map(|i| y[i] - fit.alpha - fit.beta[0] * x1[i] - fit.beta[1] * x2[i])
                .collect();
            let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max);
            assert!(resid.iter().sum::<f64>().abs() <= 1e-8 * scale * n as f64);
            for x in [&x1, &x2] {
                let dot: f64 = resid.iter().zip(x).map(|(r, x)| r * x).sum();
                assert!(dot.abs() <= 1e-8 * scale * n as f64);
            }
        }
    }

    #[test]
    fn collinear_design_is_rejected() {
        let x1: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let x2: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
        let y: Vec<f64> = (0..20).map(|i| i as f64 * 0.5 + 1.0).collect();
        assert_eq!(
            fit_ols(&[&x1, &x2], &y),
            Err(UnusableReason::NumericallySingular)
        );
        // A constant regressor duplicates the intercept.
        let flat = vec![1.0; 20];
        assert_eq!(
            fit_ols(&[&flat], &y),
            Err(UnusableReason::NumericallySingular)
        );
    }

    fn planted_series(n: usize, horizon: usize, beta: f64) -> RunSeries {
        // Slope moves smoothly; the target is exactly alpha + beta * lagged slope.
        let slope: Vec<Option<f64>> = (0..n).map(|i| Some((i as f64 * 0.05).sin())).collect();
        let y: Vec<Option<f64>> = (0..n)
            .map(|i| {
                if i >= horizon {
                    Some(0.3 + beta * slope[i - horizon].unwrap())
                } else {
                    None
                }
            })
            .collect();
        RunSeries::from_columns("t", horizon, y, vec![(CurveKind::Vix, slope)], vec![])
    }

    #[test]
    fn slope_family_fits_per_horizon_and_predicts_exactly() {
        let horizon = 3;
        let series = planted_series(80, horizon, 1.7);
        let view = series.view(79);
        let spec = ModelSpec::slope(CurveKind::Vix, 40);
        let fitted = SlopeFamily.fit(&view, spec, horizon);
        assert!(fitted.usable());
        let expected = 0.3 + 1.7 * (79.0f64 * 0.05).sin();
        let got = SlopeFamily.forecast(&view, &fitted, horizon).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-9);

        // A different horizon gets a different regression; on this planted
        // data the lag mismatch shows up as different coefficients.
        let other = SlopeFamily.fit(&view, spec, 1);
        assert!(other.usable());
        assert_ne!(other.coefficients, fitted.coefficients);
    }

    #[test]
    #[should_panic(expected = "asked to forecast horizon")]
    fn horizon_mismatch_is_a_bug() {
        let series = planted_series(80, 2, 1.0);
        let view = series.view(79);
        let fitted = SlopeFamily.fit(&view, ModelSpec::slope(CurveKind::Vix, 30), 2);
        let _ = SlopeFamily.forecast(&view, &fitted, 3);
    }

    #[test]
    fn window_reaching_before_data_is_unusable() {
        let series = planted_series(50, 2, 1.0);
        let view = series.view(30);
        let fitted = SlopeFamily.fit(&view, ModelSpec::slope(CurveKind::Vix, 30), 2);
        assert_eq!(
            fitted.status,
            FitStatus::Unusable(UnusableReason::IncompleteWindow)
        );
    }

    #[test]
    fn short_long_family_uses_both_ends() {
        let n = 90;
        let short: Vec<Option<f64>> = (0..n).map(|i| Some((i as f64 * 0.07).sin())).collect();
        let long: Vec<Option<f64>> = (0..n).map(|i| Some((i as f64 * 0.03).cos())).collect();
        let h = 2;
        let y: Vec<Option<f64>> = (0..n)
            .map(|i| {
                (i >= h).then(|| {
                    0.1 + 0.8 * short[i - h].unwrap() - 0.5 * long[i - h].unwrap()
                })
            })
            .collect();
        let series =
            RunSeries::from_columns("t", h, y, vec![], vec![(CurveKind::Yield, short, long)]);
        let view = series.view(n - 1);
        let spec = ModelSpec::short_long(CurveKind::Yield, 40);
        let fitted = ShortLongFamily.fit(&view, spec, h);
        assert!(fitted.usable());
        match &fitted.coefficients {
            Coefficients::Linear { alpha, beta } => {
                assert_relative_eq!(*alpha, 0.1, epsilon = 1e-8);
                assert_relative_eq!(beta[0], 0.8, epsilon = 1e-8);
                assert_relative_eq!(beta[1], -0.5, epsilon = 1e-8);
            }
            _ => panic!("wrong coefficient shape"),
        }
    }
}
