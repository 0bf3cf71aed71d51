//! Principal-value evaluation of the fractional Laplacian
//! `C(n,g) p.v. int (u(x) - u(xi)) / |x - xi|^(n+2g) dxi`.
//!
//! The integral is written with the symmetric second difference
//! `2u(x) - u(x + rho w) - u(x - rho w)` over half the sphere of directions.
//! Inside `rho < h` the second-order Taylor term is integrated analytically;
//! beyond a cutoff `R` the constant part is exact and the rest is integrated
//! in `t = 1/rho`.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use super::gk::{integrate_vec, GkConfig};
use super::maps::normalize_cuts;
use super::sphere_area;
use crate::error::{Error, Result};
use crate::params::FracParams;

/// A scalar field on R^n as seen by the fractional-Laplacian oracles.
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Laplacian at `x`; `None` if the field is not known to be C^2 there.
    fn laplacian(&self, x: &[f64]) -> Option<f64>;

    /// Smallest length scale of the field near its concentration points.
    fn width(&self) -> f64 {
        1.0
    }

    /// Points around which the field concentrates.
    fn features(&self) -> Vec<Vec<f64>> {
        Vec::new()
    }

    /// Centre of radial symmetry, if any.
    fn radial_center(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Normalization making the multiplier of the singular integral `|xi|^(2g)`.
pub fn pv_normalization(params: &FracParams) -> f64 {
    let n = params.nf();
    let g = params.gamma();
    g * 4f64.powf(g) * gamma(n / 2.0 + g) / (PI.powf(n / 2.0) * gamma(1.0 - g))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvOptions {
    pub rel_tol: f64,
    pub budget: usize,
    /// Inner radius as a multiple of the field width.
    pub h_factor: f64,
}

impl Default for PvOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-9, budget: 20_000_000, h_factor: 1e-3 }
    }
}

/// `(-Delta)^g u (x)` by the singular-integral definition.
pub fn frac_laplacian_pv(u: &dyn ScalarField, x: &[f64], params: &FracParams, tol: f64, budget: usize) -> Result<f64> {
    frac_laplacian_pv_with(u, x, params, &PvOptions { rel_tol: tol, budget, ..PvOptions::default() })
}

pub fn frac_laplacian_pv_with(u: &dyn ScalarField, x: &[f64], params: &FracParams, opts: &PvOptions) -> Result<f64> {
    let n = params.n();
    if u.dim() != n || x.len() != n {
        return Err(Error::InvalidArgument("field, point and parameters disagree on n".into()));
    }
    if n > 3 {
        return Err(Error::DimensionTooLarge(n));
    }
    let g = params.gamma();
    let lap = u.laplacian(x).ok_or(Error::InsufficientSmoothness)?;
    let h = opts.h_factor * u.width();
    let ux = u.value(x);
    let area = sphere_area(n);
    let ball = -0.5 * (lap / n as f64) * area * h.powf(2.0 - 2.0 * g) / (2.0 - 2.0 * g);

    let feats = u.features();
    let mut reach: f64 = 0.0;
    for c in &feats {
        let d: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        reach = reach.max(d);
    }
    let cutoff = reach + 20.0 * u.width();
    let used = std::cell::Cell::new(0usize);
    let failed = std::cell::Cell::new(false);
    // Rounding in the second difference, amplified by the kernel near rho = h,
    // bounds what any radial integral can resolve.
    let noise = 64.0 * f64::EPSILON * ux.abs() * h.powf(-2.0 * g) / (2.0 * g);
    let inner_cfg = GkConfig::new(noise, opts.rel_tol * 0.1, opts.budget);

    // Radial integral along direction w of the symmetric second difference.
    let along = |w: &[f64]| -> (f64, f64) {
        let mut cuts = vec![h, cutoff];
        for c in &feats {
            let proj: f64 = c.iter().zip(x).zip(w).map(|((ci, xi), wi)| (ci - xi) * wi).sum();
            let p = proj.abs();
            if p > h && p < cutoff {
                cuts.push(p);
            }
        }
        let mut k = h;
        while k * 10.0 < u.width() {
            k *= 10.0;
            cuts.push(k);
        }
        let cuts = normalize_cuts(cuts);
        let mut y = [0.0; 3];
        let mut z = [0.0; 3];
        let mut second = |rho: f64| {
            for i in 0..n {
                y[i] = x[i] + rho * w[i];
                z[i] = x[i] - rho * w[i];
            }
            2.0 * ux - u.value(&y[..n]) - u.value(&z[..n])
        };
        let cfg = GkConfig { max_evals: opts.budget.saturating_sub(used.get()), ..inner_cfg };
        // |f| rides along under error control: along some directions the
        // signed integral nearly cancels and a purely relative target is unreachable.
        let near = integrate_vec(
            |rho, o: &mut [f64]| {
                o[0] = second(rho) * rho.powf(-1.0 - 2.0 * g);
                o[1] = o[0].abs();
            },
            2,
            2,
            &cuts,
            &cfg,
        );
        // Beyond the cutoff the constant part is exact; the rest, in t = 1/rho,
        // behaves like t^(n-1) times a smooth function for algebraic tails.
        let head = 2.0 * ux * cutoff.powf(-2.0 * g) / (2.0 * g);
        let mut far = integrate_vec(
            |t, o: &mut [f64]| {
                o[0] = if t <= 0.0 { 0.0 } else { (second(1.0 / t) - 2.0 * ux) * t.powf(2.0 * g - 1.0) };
            },
            1,
            1,
            &[0.0, 1.0 / cutoff],
            &cfg,
        );
        far.values[0] += head;
        used.set(used.get() + near.n_evals + far.n_evals);
        if !near.converged || !far.converged {
            failed.set(true);
        }
        (near.values[0] + far.values[0], near.errors[0] + far.errors[0])
    };

    let outer_cfg = GkConfig::new(0.0, opts.rel_tol, opts.budget);
    let total = match (n, u.radial_center()) {
        (1, _) => along(&[1.0]).0,
        (_, Some(c)) => {
            let d: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
            let dist = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if dist == 0.0 {
                let mut w = vec![0.0; n];
                w[0] = 1.0;
                0.5 * area * along(&w).0
            } else {
                let e: Vec<f64> = d.iter().map(|v| v / dist).collect();
                let e_perp = perpendicular(&e);
                // Half of |S^(n-2)| int_0^pi sin^(n-2) F, with F symmetric
                // about pi/2.
                let r = integrate_vec(
                    |psi, o: &mut [f64]| {
                        let (sn, cs) = psi.sin_cos();
                        let w: Vec<f64> = (0..n).map(|i| cs * e[i] + sn * e_perp[i]).collect();
                        o[0] = sn.powi(n as i32 - 2) * along(&w).0;
                    },
                    1,
                    1,
                    &[0.0, PI / 4.0, PI / 2.0],
                    &outer_cfg,
                );
                if !r.converged {
                    failed.set(true);
                }
                sphere_area(n - 1) * r.values[0]
            }
        }
        (2, None) => {
            let r = integrate_vec(
                |phi, o: &mut [f64]| {
                    let (s, c) = phi.sin_cos();
                    o[0] = along(&[c, s]).0;
                },
                1,
                1,
                &[0.0, PI / 2.0, PI],
                &outer_cfg,
            );
            if !r.converged {
                failed.set(true);
            }
            r.values[0]
        }
        _ => {
            let theta_cfg = outer_cfg;
            let r = integrate_vec(
                |theta, o: &mut [f64]| {
                    let (st, ct) = theta.sin_cos();
                    let phi_cfg = theta_cfg.inner(opts.budget);
                    let inner = integrate_vec(
                        |phi, q: &mut [f64]| {
                            let (sp, cp) = phi.sin_cos();
                            q[0] = along(&[st * cp, st * sp, ct]).0;
                        },
                        1,
                        1,
                        &[0.0, PI / 2.0, PI, 1.5 * PI, 2.0 * PI],
                        &phi_cfg,
                    );
                    if !inner.converged {
                        failed.set(true);
                    }
                    o[0] = st * inner.values[0];
                },
                1,
                1,
                &[0.0, PI / 4.0, PI / 2.0],
                &theta_cfg,
            );
            if !r.converged {
                failed.set(true);
            }
            r.values[0]
        }
    };
    if failed.get() || used.get() > opts.budget {
        return Err(Error::BudgetExhausted { what: "fractional Laplacian (principal value)".into(), budget: opts.budget, err: f64::NAN });
    }
    Ok(pv_normalization(params) * (total + ball))
}

fn perpendicular(e: &[f64]) -> Vec<f64> {
    let n = e.len();
    let k = (0..n).min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs())).unwrap_or(0);
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    let dot: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
    for i in 0..n {
        v[i] -= dot * e[i];
    }
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter().map(|a| a / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    struct Constant(usize);

    impl ScalarField for Constant {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, _: &[f64]) -> f64 {
            3.5
        }
        fn laplacian(&self, _: &[f64]) -> Option<f64> {
            Some(0.0)
        }
    }

    struct Rough;

    impl ScalarField for Rough {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0].abs()
        }
        fn laplacian(&self, _: &[f64]) -> Option<f64> {
            None
        }
    }

    #[test]
    fn constants_are_annihilated() {
        for n in 1..=2 {
            let p = make_params(n, 0.3).unwrap();
            let v = frac_laplacian_pv(&Constant(n), &vec![0.2; n], &p, 1e-10, 1_000_000).unwrap();
            assert!(v.abs() < 1e-11, "{v}");
        }
    }

    #[test]
    fn non_smooth_field_rejected() {
        let p = make_params(1, 0.3).unwrap();
        assert_eq!(frac_laplacian_pv(&Rough, &[0.0], &p, 1e-6, 1000), Err(Error::InsufficientSmoothness));
    }

    #[test]
    fn normalization_in_the_plane_at_half() {
        // n = 2, gamma = 1/2 gives 1/(2 pi).
        let p = make_params(2, 0.5).unwrap();
        let q = make_params(1, 0.25).unwrap();
        assert!((pv_normalization(&p) - 1.0 / (2.0 * PI)).abs() < 1e-14);
        assert!(pv_normalization(&q) > 0.0);
    }
}
