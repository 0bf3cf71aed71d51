//! Pointwise bounds and leading-order asymptotics of extended bubbles.
//!
//! Rough bounds, with `w = lambda / (1 + lambda^2 r_a^2)` and
//! `r_a = |(y, x - a)|`:
//! `|U| <~ w^s`, `|dU/dy| <~ lambda^g y^(2g-1) w^(n/2)`,
//! `|grad_x U| <~ sqrt(lambda) w^((n+1-2g)/2)`,
//! `|D_x^2 U| <~ lambda w^((n+2-2g)/2)`.
//! Derivatives here come from centred differences of the convolution value,
//! each checked against the step-halved difference.

use super::ExtensionOracle;
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::model::Bubble;
use crate::params::FracParams;

/// Richardson gate: step-halving may move a derivative by at most this
/// fraction of its bound expression.
pub const RICHARDSON_TOL: f64 = 1e-3;

/// `y`, `r` and `lambda` grids of the rough-estimate sweep.
pub const ROUGH_YS: [f64; 3] = [0.01, 0.1, 1.0];
pub const ROUGH_RS: [f64; 3] = [0.0, 0.5, 2.0];
pub const ROUGH_LAMBDAS: [f64; 3] = [1.0, 10.0, 100.0];
pub const SHARP_LAMBDAS: [f64; 3] = [10.0, 30.0, 100.0];

fn oracle(params: &FracParams) -> Result<ExtensionOracle> {
    let c3 = crate::constants::c3_cached(params)?;
    Ok(ExtensionOracle::new(*params, 1.0 / c3))
}

/// Ratios `|quantity| / bound` at one point, in the order value, `d/dy`,
/// `grad_x`, `D_x^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughRow {
    pub lambda: f64,
    pub y: f64,
    pub r: f64,
    pub ratios: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub rows: Vec<RoughRow>,
    /// Largest ratio per bound.
    pub max_ratio: [f64; 4],
}

struct Differ<'a> {
    oracle: &'a ExtensionOracle,
    lambda: f64,
}

impl Differ<'_> {
    fn u(&self, y: f64, r: f64) -> Result<f64> {
        self.oracle.value(self.lambda, y, r.abs())
    }

    /// `(f(+h) - f(-h)) / 2h` at steps `h` and `h/2`, extrapolated.
    fn first(&self, f: &dyn Fn(f64) -> Result<f64>, h: f64, bound: f64) -> Result<f64> {
        let d = |h: f64| -> Result<f64> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
        let (a, b) = (d(h)?, d(0.5 * h)?);
        richardson(a, b, bound)
    }

    /// `(f(+h) - 2 f(0) + f(-h)) / h^2` at steps `h` and `h/2`, extrapolated.
    fn second(&self, f: &dyn Fn(f64) -> Result<f64>, h: f64, bound: f64) -> Result<f64> {
        let f0 = f(0.0)?;
        let d = |h: f64| -> Result<f64> { Ok((f(h)? - 2.0 * f0 + f(-h)?) / (h * h)) };
        let (a, b) = (d(h)?, d(0.5 * h)?);
        richardson(a, b, bound)
    }
}

fn richardson(coarse: f64, fine: f64, bound: f64) -> Result<f64> {
    let mismatch = (coarse - fine).abs() / bound;
    if mismatch > RICHARDSON_TOL {
        return Err(Error::Richardson { mismatch });
    }
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Empirical ratios against the four rough bounds at each sample
/// `(y, x)`, `y > 0`, for the bubble `b`.
pub fn check_rough_estimates(b: &Bubble, samples: &[(f64, Vec<f64>)], params: &FracParams) -> Result<EstimateReport> {
    let oracle = oracle(params)?;
    let lambda = b.scale();
    let n = params.nf();
    let g = params.gamma();
    let s = params.bubble_power();
    let d = Differ { oracle: &oracle, lambda };
    let mut rows = Vec::with_capacity(samples.len());
    for (y, x) in samples {
        let y = *y;
        if !(y > 0.0) || x.len() != params.n() {
            return Err(Error::InvalidArgument("rough samples need y > 0 and x in R^n".into()));
        }
        let r = b.distance2(x).sqrt();
        let w = lambda / (1.0 + lambda * lambda * (y * y + r * r));
        let bounds = [
            w.powf(s),
            lambda.powf(g) * y.powf(2.0 * g - 1.0) * w.powf(0.5 * n),
            lambda.sqrt() * w.powf(0.5 * (n + 1.0 - 2.0 * g)),
            lambda * w.powf(0.5 * (n + 2.0 - 2.0 * g)),
        ];
        let h = 1e-2 / lambda;
        let hy = h.min(y / 16.0);
        let u0 = d.u(y, r)?;
        let uy = d.first(&|t| d.u(y + t, r), hy, bounds[1])?;
        let ur = d.first(&|t| d.u(y, r + t), h, bounds[2])?;
        let urr = d.second(&|t| d.u(y, r + t), h, bounds[3])?;
        // Hessian of a radial function: U_rr along x - a, U_r / r across.
        let hess = if r > h { urr.abs().max((ur / r).abs()) } else { urr.abs() };
        rows.push(RoughRow {
            lambda,
            y,
            r,
            ratios: [u0.abs() / bounds[0], uy.abs() / bounds[1], ur.abs() / bounds[2], hess / bounds[3]],
        });
    }
    let mut max_ratio = [0.0; 4];
    for row in &rows {
        for k in 0..4 {
            max_ratio[k] = f64::max(max_ratio[k], row.ratios[k]);
        }
    }
    Ok(EstimateReport { rows, max_ratio })
}

/// The fixed sweep `y in ROUGH_YS`, `|x - a| in ROUGH_RS` around `center`.
pub fn rough_samples(center: &[f64]) -> Vec<(f64, Vec<f64>)> {
    let mut out = Vec::new();
    for &y in &ROUGH_YS {
        for &r in &ROUGH_RS {
            let mut x = center.to_vec();
            x[0] += r;
            out.push((y, x));
        }
    }
    out
}

/// Log-log slope of `|dU/dy|` over `y in [1e-4, 1e-3] / lambda` at `x`,
/// from centred differences; the expected value is `2g - 1`.
pub fn boundary_slope(b: &Bubble, x: &[f64], params: &FracParams) -> Result<f64> {
    let oracle = oracle(params)?;
    let lambda = b.scale();
    let r = b.distance2(x).sqrt();
    let d = Differ { oracle: &oracle, lambda };
    let ys: Vec<f64> = (0..6).map(|k| 1e-4 / lambda * 10f64.powf(k as f64 / 5.0)).collect();
    let g = params.gamma();
    let mut ds = Vec::with_capacity(ys.len());
    for &y in &ys {
        // Scale of the derivative for the Richardson gate.
        let bound = lambda.powf(g) * y.powf(2.0 * g - 1.0) * lambda.powf(0.5 * params.nf());
        ds.push(d.first(&|t| d.u(y + t, r), y / 16.0, bound)?);
    }
    Ok(loglog_slope(&ys, &ds))
}

/// Deviations from the leading term `lambda^-s r_a^-(n-2g)` on the sphere
/// `r_a = 1`, normalized by `lambda^-s`: value, `y d/dy` and `(x-a).grad_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpRow {
    pub lambda: f64,
    pub deviations: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharpReport {
    pub rows: Vec<SharpRow>,
    /// Whether each deviation strictly decreases along the `lambda` list.
    pub decreasing: [bool; 3],
}

/// Points on `|z - a| = 1` at elevation angles `pi/6, pi/4, pi/3`.
pub fn sharp_samples(center: &[f64]) -> Vec<(f64, Vec<f64>)> {
    use std::f64::consts::PI;
    [PI / 6.0, PI / 4.0, PI / 3.0]
        .iter()
        .map(|t| {
            let mut x = center.to_vec();
            x[0] += t.cos();
            (t.sin(), x)
        })
        .collect()
}

pub fn check_sharp_estimates(
    center: &[f64],
    lambdas: &[f64],
    samples: &[(f64, Vec<f64>)],
    params: &FracParams,
) -> Result<SharpReport> {
    let oracle = oracle(params)?;
    let s = params.bubble_power();
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let b = Bubble::new(center.to_vec(), lambda)?;
        let mut dev = [0.0_f64; 3];
        for (y, x) in samples {
            let y = *y;
            let r = b.distance2(x).sqrt();
            let rho2 = y * y + r * r;
            let norm = lambda.powf(-s);
            let lead = norm * rho2.powf(-s);
            // y d/dy and r d/dr of lead: both -2s lead (.)^2 / rho^2.
            let lead_y = -2.0 * s * lead * y * y / rho2;
            let lead_r = -2.0 * s * lead * r * r / rho2;
            let smp = oracle.sample(lambda, y, r)?;
            dev[0] = dev[0].max((smp.value - lead).abs() / norm);
            dev[1] = dev[1].max((y * smp.dy - lead_y).abs() / norm);
            dev[2] = dev[2].max((r * smp.dr - lead_r).abs() / norm);
        }
        rows.push(SharpRow { lambda, deviations: dev });
    }
    let mut decreasing = [true; 3];
    for k in 0..3 {
        decreasing[k] = rows.windows(2).all(|w| w[1].deviations[k] < w[0].deviations[k]);
    }
    Ok(SharpReport { rows, decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn radial_gradient_vanishes_at_center() {
        let p = make_params(2, 0.25).unwrap();
        let b = Bubble::unit(2);
        let rep = check_rough_estimates(&b, &[(0.1, vec![0.0, 0.0])], &p).unwrap();
        assert!(rep.rows[0].ratios[2] < 1e-6, "{:?}", rep.rows[0]);
    }

    #[test]
    fn value_deviation_scales_like_far_field() {
        // The first correction is lambda^-2g relative to the leading term.
        let p = make_params(2, 0.25).unwrap();
        let rep = check_sharp_estimates(&[0.0, 0.0], &[10.0, 100.0], &sharp_samples(&[0.0, 0.0]), &p).unwrap();
        let ratio = rep.rows[1].deviations[0] / rep.rows[0].deviations[0];
        assert!((ratio / 10f64.powf(-0.5) - 1.0).abs() < 0.2, "{:?}", rep.rows);
    }
}
