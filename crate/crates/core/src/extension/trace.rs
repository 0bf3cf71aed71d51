//! Boundary expansion `U = v0 + v1 y^(2g) + ...` and the weighted Neumann
//! datum `-d*_g lim y^(1-2g) dU/dy = -2g d*_g v1`.

use nalgebra::{DMatrix, DVector};

use super::grid::HalfSpaceField;
use crate::error::{Error, Result};
use crate::params::FracParams;

/// Default gate on the regression residual relative to `|v1|`.
pub const FIT_GATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceExpansion {
    /// Boundary value.
    pub v0: f64,
    /// Coefficient of `y^(2g)`.
    pub v1: f64,
    /// Largest residual divided by `y^(2g)`, in the units of `v1`.
    pub fit_residual: f64,
}

impl TraceExpansion {
    /// `-d*_g lim y^(1-2g) dU/dy` for a given `d*_g`.
    pub fn neumann_datum(&self, d_star: f64, params: &FracParams) -> f64 {
        -2.0 * params.gamma() * d_star * self.v1
    }
}

/// Least-squares fit of samples `(y_k, u_k)`, `y_k > 0`, on `{1, y^(2g)}`.
///
/// When `2g > 1` the next term `y^2` of the expansion is not small against
/// `y^(2g)` at resolvable `y`, so it is included as a third basis function.
pub fn fit_trace(ys: &[f64], values: &[f64], params: &FracParams) -> Result<TraceExpansion> {
    params.require_not_half("trace fit")?;
    if ys.len() != values.len() || ys.len() < 3 {
        return Err(Error::InvalidArgument("trace fit needs at least three samples".into()));
    }
    if ys.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::InvalidArgument("trace fit samples must have y > 0".into()));
    }
    let g2 = 2.0 * params.gamma();
    let cols = if g2 > 1.0 { 3 } else { 2 };
    let ymax = ys.iter().fold(0.0_f64, |m, &y| m.max(y));
    // Scale the columns to unit size at the top of the window.
    let a = DMatrix::from_fn(ys.len(), cols, |k, c| match c {
        0 => 1.0,
        1 => (ys[k] / ymax).powf(g2),
        _ => (ys[k] / ymax).powi(2),
    });
    let b = DVector::from_column_slice(values);
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::SolveFailed(e.to_string()))?;
    let resid = &b - &a * &coef;
    let v1 = coef[1] / ymax.powf(g2);
    let fit_residual = resid
        .iter()
        .zip(ys)
        .map(|(r, y)| r.abs() / y.powf(g2))
        .fold(0.0, f64::max);
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let ymin = ys.iter().fold(f64::INFINITY, |m, &y| m.min(y));
    let slack = 64.0 * f64::EPSILON * scale / ymin.powf(g2);
    if fit_residual > FIT_GATE * v1.abs() + slack {
        return Err(Error::TraceFit { residual: fit_residual, limit: FIT_GATE * v1.abs() + slack });
    }
    Ok(TraceExpansion { v0: coef[0], v1, fit_residual })
}

/// Per boundary node, the expansion fitted over the rows `y in [y1, 10 y1]`,
/// `y1` the first interior grid line.
pub fn neumann_trace(field: &HalfSpaceField, params: &FracParams) -> Result<Vec<TraceExpansion>> {
    params.require_not_half("neumann trace")?;
    let ys = field.ys();
    let y1 = ys.iter().copied().find(|&y| y > 0.0).ok_or_else(|| Error::InvalidArgument("field has no interior rows".into()))?;
    let rows: Vec<usize> = (0..ys.len()).filter(|&j| ys[j] > 0.0 && ys[j] <= 10.0 * y1 * (1.0 + 1e-12)).collect();
    if rows.len() < 3 {
        return Err(Error::UnderResolved(format!("only {} rows in the trace window", rows.len())));
    }
    let wy: Vec<f64> = rows.iter().map(|&j| ys[j]).collect();
    (0..field.rs().len())
        .map(|i| {
            let vals: Vec<f64> = rows.iter().map(|&j| field.at(j, i)).collect();
            fit_trace(&wy, &vals, params)
        })
        .collect()
}

/// Geometric window `y1 * 10^(k/(m-1))`, `k = 0..m`.
pub fn trace_window(y1: f64, m: usize) -> Vec<f64> {
    (0..m).map(|k| y1 * 10f64.powf(k as f64 / (m - 1) as f64)).collect()
}

/// `d*_g` recovered from one bubble trace at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DStarSample {
    pub lambda: f64,
    pub r: f64,
    pub d_star: f64,
    pub fit: TraceExpansion,
}

/// `d*_g` from the bubble traces: the fitted `v1` of the convolution
/// extension satisfies `-2g d*_g v1 = c delta^p`, so each
/// `(lambda, r)` gives `d*_g = c delta(r)^p / (-2g v1)`.
pub fn extract_d_star(params: &FracParams, c_frac: f64, lambdas: &[f64], radii: &[f64]) -> Result<Vec<DStarSample>> {
    params.require_not_half("d* extraction")?;
    let c3 = crate::constants::c3_cached(params)?;
    let oracle = super::ExtensionOracle::new(*params, 1.0 / c3);
    let g = params.gamma();
    let p = params.critical_exponent();
    let s = params.bubble_power();
    let mut out = Vec::new();
    for &lambda in lambdas {
        for &r in radii {
            let ys = trace_window(1e-4 / lambda, 12);
            let vals = ys.iter().map(|&y| oracle.value(lambda, y, r)).collect::<Result<Vec<_>>>()?;
            let fit = fit_trace(&ys, &vals, params)?;
            let delta = (lambda / (1.0 + lambda * lambda * r * r)).powf(s);
            let d_star = c_frac * delta.powf(p) / (-2.0 * g * fit.v1);
            if !d_star.is_finite() {
                return Err(Error::NonFinite(format!("d* extraction at lambda = {lambda}, r = {r}")));
            }
            out.push(DStarSample { lambda, r, d_star, fit });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn pure_power_and_constant() {
        for g in [0.25, 0.75] {
            let p = make_params(2, g).unwrap();
            let ys = trace_window(1e-3, 8);
            let pw: Vec<f64> = ys.iter().map(|y| y.powf(2.0 * g)).collect();
            let t = fit_trace(&ys, &pw, &p).unwrap();
            assert!(t.v0.abs() < 1e-12 && (t.v1 - 1.0).abs() < 1e-9);
            let one = vec![1.0; ys.len()];
            let t = fit_trace(&ys, &one, &p).unwrap();
            assert!((t.v0 - 1.0).abs() < 1e-13 && t.v1.abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_half_and_poor_fits() {
        let p = make_params(2, 0.5).unwrap();
        assert!(fit_trace(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &p).is_err());
        let q = make_params(2, 0.25).unwrap();
        let ys = trace_window(1e-3, 8);
        let noisy: Vec<f64> = ys.iter().enumerate().map(|(k, y)| y.sqrt() * 1e-3 + if k % 2 == 0 { 1e-3 } else { -1e-3 }).collect();
        assert!(matches!(fit_trace(&ys, &noisy, &q), Err(Error::TraceFit { .. })));
    }
}
