//! The weighted half-space side: Poisson kernel, convolution extension of
//! bubbles, the flat Green's function, a finite-volume solver for
//! `D = -div(y^(1-2g) grad)`, trace extraction and the pointwise estimates.

pub mod banded;
pub mod estimates;
pub mod green;
pub mod grid;
pub mod trace;

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::bubbles::eval_bubble;
use crate::error::{Error, Result};
use crate::model::Bubble;
use crate::params::FracParams;
use crate::quadrature::gk::{integrate, integrate_vec, GkConfig};
use crate::quadrature::{integrate_halfspace_radial, integrate_radial, sphere_area, QuadResult};

pub use estimates::{boundary_slope, check_rough_estimates, check_sharp_estimates, rough_samples, sharp_samples, EstimateReport, SharpReport};
pub use green::{green_flat, green_normalization};
pub use grid::{grid_solve_dirichlet, grid_solve_with, two_grid_gap, GridSpec, HalfSpaceField, Provenance, Solver};
pub use trace::{extract_d_star, fit_trace, neumann_trace, DStarSample, TraceExpansion};

/// `K(y, x, xi) = p y^(2g) / (|x-xi|^2 + y^2)^((n+2g)/2)`.
pub fn poisson_kernel(y: f64, x: &[f64], xi: &[f64], params: &FracParams, p_poisson: f64) -> f64 {
    let d2: f64 = x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum();
    poisson_kernel_radial(y, d2.sqrt(), params, p_poisson)
}

#[inline]
pub fn poisson_kernel_radial(y: f64, dist: f64, params: &FracParams, p_poisson: f64) -> f64 {
    let g = params.gamma();
    let a = 0.5 * (params.nf() + 2.0 * g);
    p_poisson * y.powf(2.0 * g) * (dist * dist + y * y).powf(-a)
}

/// `int K(y, x, xi) dxi` by radial quadrature about `x`.
pub fn poisson_mass(y: f64, params: &FracParams, p_poisson: f64, rel_tol: f64) -> Result<f64> {
    let a = 0.5 * (params.nf() + 2.0 * params.gamma());
    let r = integrate_radial(|d| poisson_kernel_radial(y, d, params, p_poisson), params.n(), 2.0 * a, y, &[y], rel_tol, 1_000_000)?;
    Ok(r.require("Poisson kernel mass", 1_000_000)?.value)
}

/// Value and first derivatives of an extended bubble at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionSample {
    pub value: f64,
    pub dy: f64,
    pub dr: f64,
}

/// Convolution extension `K * delta_{0,lambda}` of a bubble centred at the
/// origin, evaluated through a one-dimensional parametric representation of
/// the convolution integral. With `B = 1 + lambda^2 sigma (r^2 + y^2 / (1-sigma))`
///
/// `U(y, r) = P y^(2g) int_0^1 sigma^(a-1) (1-sigma)^(-g-1) B^(-n/2) dsigma`,
///
/// where `a = (n+2g)/2`, `s = (n-2g)/2` and
/// `P = p lambda^(s+2g) pi^(n/2) Gamma(n/2) / (Gamma(a) Gamma(s))`.
/// The integral is taken in `tau = -ln(1 - sigma)`.
#[derive(Debug, Clone, Copy)]
pub struct ExtensionOracle {
    params: FracParams,
    p_poisson: f64,
    feynman: f64,
    pub rel_tol: f64,
    pub budget: usize,
}

impl ExtensionOracle {
    pub fn new(params: FracParams, p_poisson: f64) -> Self {
        let n = params.nf();
        let g = params.gamma();
        let a = 0.5 * (n + 2.0 * g);
        let s = 0.5 * (n - 2.0 * g);
        let feynman = PI.powf(n / 2.0) * gamma(n / 2.0) / (gamma(a) * gamma(s));
        Self { params, p_poisson, feynman, rel_tol: 1e-13, budget: 200_000 }
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    pub fn p_poisson(&self) -> f64 {
        self.p_poisson
    }

    fn integrals(&self, lambda: f64, y: f64, r: f64, with_grad: bool) -> Result<[f64; 3]> {
        let n = self.params.nf();
        let g = self.params.gamma();
        let a = 0.5 * (n + 2.0 * g);
        let l2 = lambda * lambda;
        let tau_star = ((1.0 + l2 * r * r) / (l2 * y * y)).ln().max(0.0);
        let tau_max = tau_star + 60.0 / (0.5 * n - g);
        let mut cuts = vec![0.0, 1.0_f64.min(tau_max), tau_star, tau_max];
        cuts.retain(|&c| c <= tau_max);
        let cuts = crate::quadrature::maps::normalize_cuts(cuts);
        let dim = if with_grad { 3 } else { 1 };
        let cfg = GkConfig::new(0.0, self.rel_tol, self.budget);
        let res = integrate_vec(
            |tau, o: &mut [f64]| {
                // b = 1 + l2 sigma (r^2 + y^2 e^tau) = e^tau bt, kept in this
                // form so that long tails (n - 2g small) do not overflow.
                let em = (-tau).exp();
                let sigma = -(-tau).exp_m1();
                let bt = em * (1.0 + l2 * sigma * r * r) + l2 * sigma * y * y;
                let base = ((a - 1.0) * sigma.ln() + (g - 0.5 * n) * tau - 0.5 * n * bt.ln()).exp();
                o[0] = base;
                if with_grad {
                    let common = -n * base * l2 * sigma / bt;
                    o[1] = common * y * y;
                    o[2] = common * r * r * em;
                }
            },
            dim,
            dim,
            &cuts,
            &cfg,
        );
        if !res.converged {
            return Err(Error::BudgetExhausted {
                what: "bubble extension".into(),
                budget: self.budget,
                err: res.errors[0],
            });
        }
        let mut out = [0.0; 3];
        out[..dim].copy_from_slice(&res.values);
        Ok(out)
    }

    fn prefactor(&self, lambda: f64) -> f64 {
        let s = self.params.bubble_power();
        let g = self.params.gamma();
        self.p_poisson * lambda.powf(s + 2.0 * g) * self.feynman
    }

    /// `U(y, r)` for the bubble of scale `lambda` centred at the origin.
    pub fn value(&self, lambda: f64, y: f64, r: f64) -> Result<f64> {
        if y < 0.0 {
            return Err(Error::InvalidArgument("y must be nonnegative".into()));
        }
        if y == 0.0 {
            return Ok((lambda / (1.0 + lambda * lambda * r * r)).powf(self.params.bubble_power()));
        }
        let i = self.integrals(lambda, y, r, false)?;
        Ok(self.prefactor(lambda) * y.powf(2.0 * self.params.gamma()) * i[0])
    }

    /// `U`, `dU/dy` and `dU/dr` from differentiated integrands (`y > 0`).
    pub fn sample(&self, lambda: f64, y: f64, r: f64) -> Result<ExtensionSample> {
        if !(y > 0.0) {
            return Err(Error::InvalidArgument("derivatives need y > 0".into()));
        }
        let g = self.params.gamma();
        let i = self.integrals(lambda, y, r, true)?;
        let pre = self.prefactor(lambda);
        let y2g = y.powf(2.0 * g);
        Ok(ExtensionSample {
            value: pre * y2g * i[0],
            dy: pre * y2g / y * (2.0 * g * i[0] + i[1]),
            dr: if r > 0.0 { pre * y2g * i[2] / r } else { 0.0 },
        })
    }
}

/// Convolution extension of `b` at `z = (y, x)`.
pub fn extend_bubble_convolution(b: &Bubble, y: f64, x: &[f64], params: &FracParams, tol: f64) -> Result<f64> {
    if y == 0.0 {
        return Ok(eval_bubble(b, x, params));
    }
    let c3 = crate::constants::c3_cached(params)?;
    let mut oracle = ExtensionOracle::new(*params, 1.0 / c3);
    oracle.rel_tol = tol;
    oracle.value(b.scale(), y, b.distance2(x).sqrt())
}

/// `int (delta_{0,1} - |x|^(2g-n)) dx`, the mass correcting the far field of
/// the unit bubble.
pub fn far_field_mass(params: &FracParams) -> Result<f64> {
    let s = params.bubble_power();
    let n = params.n() as i32;
    let budget = 1_000_000;
    let cfg = GkConfig::new(0.0, 1e-12, budget);
    // On [0, 1] the subtracted power integrates to 1/(2g); on [1, inf) use r = 1/u.
    let (inner, e1, _, ok1) = integrate(|r| (1.0 + r * r).powf(-s) * r.powi(n - 1), &[0.0, 1.0], &cfg);
    let (outer, e2, _, ok2) = integrate(
        |u| {
            if u == 0.0 {
                return 0.0;
            }
            let r = 1.0 / u;
            ((1.0 + r * r).powf(-s) - r.powf(-2.0 * s)) * r.powi(n - 1) / (u * u)
        },
        &[0.0, 0.5, 1.0],
        &cfg,
    );
    if !(ok1 && ok2) {
        return Err(Error::BudgetExhausted { what: "far-field mass".into(), budget, err: e1 + e2 });
    }
    Ok(sphere_area(params.n()) * (inner - 0.5 / params.gamma() + outer))
}

/// Dirichlet energy `int y^(1-2g) |grad U|^2` of the extension of the bubble
/// of scale `lambda`, by nested quadrature over `(y, r)` with the gradient
/// taken from the differentiated oracle integrands.
pub fn extension_energy(params: &FracParams, lambda: f64, rel_tol: f64, budget: usize) -> Result<QuadResult> {
    let c3 = crate::constants::c3_cached(params)?;
    let mut oracle = ExtensionOracle::new(*params, 1.0 / c3);
    oracle.rel_tol = (rel_tol * 1e-3).max(1e-13);
    let g = params.gamma();
    let n = params.nf();
    let failure = std::cell::RefCell::new(None);
    let f = |y: f64, r: f64| -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match oracle.sample(lambda, y, r) {
            Ok(s) => s.dy * s.dy + s.dr * s.dr,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let width = 1.0 / lambda;
    let res = integrate_halfspace_radial(
        &f,
        params,
        4.0 * g - 2.0,
        2.0 * (n + 1.0 - 2.0 * g),
        &|y| y.max(width),
        rel_tol,
        budget,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    res.require("extension energy", budget)
}

/// Far-field expansion of the extended bubble of scale `lambda` at the
/// origin: `lambda^-s rho^-(n-2g) + M_lambda K(y, x, 0)`, `rho = |(y, x)|`.
#[derive(Debug, Clone, Copy)]
pub struct FarField {
    params: FracParams,
    lambda: f64,
    mass: f64,
    p_poisson: f64,
    pub corrected: bool,
}

impl FarField {
    pub fn new(params: FracParams, lambda: f64, p_poisson: f64) -> Result<Self> {
        let m1 = far_field_mass(&params)?;
        let mass = lambda.powf(-0.5 * (params.nf() + 2.0 * params.gamma())) * m1;
        Ok(Self { params, lambda, mass, p_poisson, corrected: true })
    }

    /// Leading term only.
    pub fn leading(mut self) -> Self {
        self.corrected = false;
        self
    }

    pub fn value(&self, y: f64, r: f64) -> f64 {
        let s = self.params.bubble_power();
        let rho2 = y * y + r * r;
        let lead = self.lambda.powf(-s) * rho2.powf(-s);
        if self.corrected {
            lead + self.mass * poisson_kernel_radial(y, r, &self.params, self.p_poisson)
        } else {
            lead
        }
    }
}

/// Probes `(y, r)` for the grid comparison, in units of `1/lambda`, snapped
/// to the nearest node of the coarser grid.
pub const GRID_PROBES: [(f64, f64); 10] = [
    (0.05, 0.0),
    (0.1, 0.5),
    (0.2, 1.0),
    (0.3, 0.25),
    (0.5, 0.0),
    (0.5, 1.5),
    (1.0, 0.5),
    (1.0, 2.0),
    (2.0, 1.0),
    (3.0, 3.0),
];

/// Grid solve and convolution oracle at one probe, snapped to a grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub y: f64,
    pub r: f64,
    pub grid: f64,
    pub convolution: f64,
    pub rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridComparison {
    pub field: HalfSpaceField,
    pub rows: Vec<ProbeRow>,
    pub max_rel: f64,
    /// Change of the probe values when the cell counts are halved.
    pub two_grid_gap: f64,
}

/// Solves the Dirichlet problem for the bubble of scale `lambda` on `spec`,
/// with convolution values on the outer boundary, and compares with the
/// convolution oracle at [`GRID_PROBES`].
pub fn compare_grid_to_convolution(params: &FracParams, lambda: f64, spec: GridSpec) -> Result<GridComparison> {
    let c3 = crate::constants::c3_cached(params)?;
    let oracle = ExtensionOracle::new(*params, 1.0 / c3);
    let s = params.bubble_power();
    let trace = |r: f64| (lambda / (1.0 + lambda * lambda * r * r)).powf(s);
    let failure = std::cell::RefCell::new(None);
    let far = |y: f64, r: f64| match oracle.value(lambda, y, r) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let field = grid_solve_dirichlet(&trace, &far, spec, params)?;
    let coarse = grid_solve_dirichlet(&trace, &far, spec.coarsened(), params)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    // Coarse nodes are also fine nodes, so both solves are probed at the same points.
    let probes: Vec<(f64, f64)> = GRID_PROBES
        .iter()
        .map(|&(y, r)| {
            let (j, i) = coarse.nearest(y / lambda, r / lambda);
            (coarse.ys()[j], coarse.rs()[i])
        })
        .collect();
    let rows = probes
        .iter()
        .map(|&(y, r)| {
            let (j, i) = field.nearest(y, r);
            let grid = field.at(j, i);
            let convolution = oracle.value(lambda, y, r)?;
            Ok(ProbeRow { y, r, grid, convolution, rel: (grid / convolution - 1.0).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_rel = rows.iter().map(|r| r.rel).fold(0.0, f64::max);
    let gap = two_grid_gap(&field, &coarse, &probes);
    Ok(GridComparison { field, rows, max_rel, two_grid_gap: gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;
    use crate::quadrature::{integrate_rn_with, RnOptions};

    fn oracle(n: usize, g: f64) -> ExtensionOracle {
        let p = make_params(n, g).unwrap();
        let c3 = crate::constants::c3_cached(&p).unwrap();
        ExtensionOracle::new(p, 1.0 / c3)
    }

    #[test]
    fn matches_direct_convolution() {
        let o = oracle(2, 0.25);
        let p = *o.params();
        for (y, r, lambda) in [(0.5, 0.0, 1.0), (1.0, 1.0, 1.0), (0.1, 2.0, 1.0), (0.3, 0.2, 3.0)] {
            let f = |xi: &[f64]| {
                poisson_kernel(y, &[r, 0.0], xi, &p, o.p_poisson()) * eval_bubble(&Bubble::new(vec![0.0, 0.0], lambda).unwrap(), xi, &p)
            };
            let mut opts = RnOptions::new(2, 2.0 * 2.0, 1e-9, 50_000_000);
            opts.cuts = vec![vec![0.0, r], vec![0.0]];
            opts.scale = 1.0 / lambda;
            let brute = integrate_rn_with(&f, 2, &opts).unwrap();
            let fast = o.value(lambda, y, r).unwrap();
            assert!((fast / brute.value - 1.0).abs() < 1e-7, "{y} {r} {lambda}: {fast} {}", brute.value);
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let o = oracle(3, 0.75);
        let (y, r) = (0.4, 0.7);
        let s = o.sample(2.0, y, r).unwrap();
        let h = 1e-5;
        let dy = (o.value(2.0, y + h, r).unwrap() - o.value(2.0, y - h, r).unwrap()) / (2.0 * h);
        let dr = (o.value(2.0, y, r + h).unwrap() - o.value(2.0, y, r - h).unwrap()) / (2.0 * h);
        assert!((s.dy / dy - 1.0).abs() < 1e-7, "{} {}", s.dy, dy);
        assert!((s.dr / dr - 1.0).abs() < 1e-7, "{} {}", s.dr, dr);
    }

    #[test]
    fn poisson_mass_is_one() {
        let p = make_params(2, 0.25).unwrap();
        let c3 = crate::constants::c3_cached(&p).unwrap();
        for y in [0.1, 1.0, 10.0] {
            assert!((poisson_mass(y, &p, 1.0 / c3, 1e-12).unwrap() - 1.0).abs() < 1e-10);
        }
        let k = poisson_kernel(1.0, &[0.3, 0.4], &[0.3, 0.4], &p, 1.0 / c3);
        assert!((k - 1.0 / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn far_field_tracks_extension() {
        let o = oracle(2, 0.25);
        let ff = FarField::new(*o.params(), 1.0, o.p_poisson()).unwrap();
        let (y, r) = (3.0, 7.0);
        let exact = o.value(1.0, y, r).unwrap();
        let corrected = (ff.value(y, r) / exact - 1.0).abs();
        let leading = (ff.leading().value(y, r) / exact - 1.0).abs();
        assert!(corrected < 0.1 * leading, "{corrected} {leading}");
    }
}
