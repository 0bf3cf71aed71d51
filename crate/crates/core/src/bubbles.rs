//! Standard bubbles `delta_{a,lambda}(x) = (lambda / (1 + lambda^2 |x-a|^2))^((n-2g)/2)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Bubble;
use crate::params::FracParams;
use crate::quadrature::fraclap::{frac_laplacian_pv_with, PvOptions, ScalarField};
use crate::quadrature::fft::DEFAULT_BOUNDARY_THRESHOLD;
use crate::quadrature::{integrate_radial, spectral_point_values, QuadResult};

/// Bubble value at `x`.
#[inline]
pub fn eval_bubble(b: &Bubble, x: &[f64], params: &FracParams) -> f64 {
    let l = b.scale();
    (l / (1.0 + l * l * b.distance2(x))).powf(params.bubble_power())
}

/// Radial profile of the unit bubble, `(1 + r^2)^(-(n-2g)/2)`.
#[inline]
pub fn unit_profile(r2: f64, params: &FracParams) -> f64 {
    (1.0 + r2).powf(-params.bubble_power())
}

/// A bubble bound to its parameters, usable as a field.
#[derive(Debug, Clone)]
pub struct BubbleField {
    pub bubble: Bubble,
    pub params: FracParams,
}

impl BubbleField {
    pub fn new(bubble: Bubble, params: FracParams) -> Result<Self> {
        if bubble.dim() != params.n() {
            return Err(Error::InvalidArgument("bubble centre dimension differs from n".into()));
        }
        Ok(Self { bubble, params })
    }

    /// Gradient with respect to `x`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let l = self.bubble.scale();
        let s = self.params.bubble_power();
        let w = 1.0 + l * l * self.bubble.distance2(x);
        let f = -2.0 * s * l.powf(s + 2.0) * w.powf(-s - 1.0);
        x.iter().zip(self.bubble.center()).map(|(xi, ai)| f * (xi - ai)).collect()
    }
}

impl ScalarField for BubbleField {
    fn dim(&self) -> usize {
        self.params.n()
    }

    fn value(&self, x: &[f64]) -> f64 {
        eval_bubble(&self.bubble, x, &self.params)
    }

    fn laplacian(&self, x: &[f64]) -> Option<f64> {
        let l = self.bubble.scale();
        let s = self.params.bubble_power();
        let n = self.params.nf();
        let r2 = self.bubble.distance2(x);
        let w = 1.0 + l * l * r2;
        Some(-2.0 * s * l.powf(s + 2.0) * w.powf(-s - 2.0) * (n * w - 2.0 * (s + 1.0) * l * l * r2))
    }

    fn width(&self) -> f64 {
        1.0 / self.bubble.scale()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        vec![self.bubble.center().to_vec()]
    }

    fn radial_center(&self) -> Option<Vec<f64>> {
        Some(self.bubble.center().to_vec())
    }
}

/// Finite linear combination of bubbles.
#[derive(Debug, Clone)]
pub struct BubbleCombination {
    pub terms: Vec<(f64, BubbleField)>,
}

impl ScalarField for BubbleCombination {
    fn dim(&self) -> usize {
        self.terms.first().map_or(0, |t| t.1.dim())
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, b)| c * b.value(x)).sum()
    }

    fn laplacian(&self, x: &[f64]) -> Option<f64> {
        self.terms.iter().map(|(c, b)| b.laplacian(x).map(|v| c * v)).sum()
    }

    fn width(&self) -> f64 {
        self.terms.iter().map(|t| t.1.width()).fold(f64::INFINITY, f64::min)
    }

    fn features(&self) -> Vec<Vec<f64>> {
        self.terms.iter().map(|t| t.1.bubble.center().to_vec()).collect()
    }

    fn radial_center(&self) -> Option<Vec<f64>> {
        let c = self.terms.first()?.1.bubble.center();
        self.terms.iter().all(|t| t.1.bubble.center() == c).then(|| c.to_vec())
    }
}

/// Ratios `(-Delta)^g delta / delta^p` over sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeResidual {
    pub ratios: Vec<f64>,
    /// Mean ratio, the numerical `c_{n,gamma}`.
    pub mean: f64,
    pub max_rel_dev: f64,
}

/// Sample points `{0, 0.5, 1, 2, 3} e_1` used for the canonical `c_{n,gamma}`.
pub fn standard_stencil(n: usize) -> Vec<Vec<f64>> {
    [0.0, 0.5, 1.0, 2.0, 3.0]
        .iter()
        .map(|&t| {
            let mut x = vec![0.0; n];
            x[0] = t;
            x
        })
        .collect()
}

pub fn bubble_pde_residual(b: &Bubble, points: &[Vec<f64>], params: &FracParams) -> Result<PdeResidual> {
    bubble_pde_residual_with(b, points, params, &PvOptions::default())
}

pub fn bubble_pde_residual_with(b: &Bubble, points: &[Vec<f64>], params: &FracParams, opts: &PvOptions) -> Result<PdeResidual> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    let field = BubbleField::new(b.clone(), *params)?;
    let p = params.critical_exponent();
    let ratios = points
        .par_iter()
        .map(|x| {
            let lhs = frac_laplacian_pv_with(&field, x, params, opts)?;
            Ok(lhs / field.value(x).powf(p))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max_rel_dev = ratios.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max);
    Ok(PdeResidual { ratios, mean, max_rel_dev })
}

/// `c1 = int (1+|x|^2)^-n`.
pub fn c1_oracle(params: &FracParams, rel_tol: f64, budget: usize) -> Result<QuadResult> {
    let n = params.nf();
    integrate_radial(|r| (1.0 + r * r).powf(-n), params.n(), 2.0 * n, 1.0, &[1.0], rel_tol, budget)?
        .require("c1", budget)
}

/// `c3 = int (1+|x|^2)^-((n+2g)/2)`.
pub fn c3_oracle(params: &FracParams, rel_tol: f64, budget: usize) -> Result<QuadResult> {
    let a = 0.5 * (params.nf() + 2.0 * params.gamma());
    integrate_radial(|r| (1.0 + r * r).powf(-a), params.n(), 2.0 * a, 1.0, &[1.0], rel_tol, budget)?
        .require("c3", budget)
}

/// Canonical `c_{n,gamma}`: mean PDE ratio of the unit bubble on the standard stencil.
pub fn c_frac_oracle(params: &FracParams, opts: &PvOptions) -> Result<PdeResidual> {
    bubble_pde_residual_with(&Bubble::unit(params.n()), &standard_stencil(params.n()), params, opts)
}

/// Periodic box half-width and spacing for the spectral route, per `n`. The
/// spacing divides the stencil offsets so every stencil point is a node.
pub fn spectral_grid(n: usize) -> (f64, f64) {
    match n {
        1 => (256.0, 1.0 / 16.0),
        2 => (64.0, 0.25),
        _ => (16.0, 0.25),
    }
}

/// `(-Delta)^g delta` of the unit bubble on the standard stencil by the PV
/// and spectral routes.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteAgreement {
    pub pv: Vec<f64>,
    pub spectral: Vec<f64>,
    pub max_rel: f64,
    /// Change of the spectral values when the spacing is doubled.
    pub resolution_gap: f64,
}

pub fn pv_vs_spectral(params: &FracParams, opts: &PvOptions) -> Result<RouteAgreement> {
    let n = params.n();
    let field = BubbleField::new(Bubble::unit(n), *params)?;
    let points = standard_stencil(n);
    let pv = points
        .par_iter()
        .map(|x| frac_laplacian_pv_with(&field, x, params, opts))
        .collect::<Result<Vec<f64>>>()?;
    let (l, h) = spectral_grid(n);
    let est = spectral_point_values(&field, params, l, h, &points, DEFAULT_BOUNDARY_THRESHOLD)?;
    let max_rel = pv.iter().zip(&est.extrapolated).map(|(a, b)| (b / a - 1.0).abs()).fold(0.0, f64::max);
    Ok(RouteAgreement { pv, spectral: est.extrapolated, max_rel, resolution_gap: est.resolution_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn values() {
        let p = make_params(2, 0.25).unwrap();
        assert_eq!(eval_bubble(&Bubble::unit(2), &[0.0, 0.0], &p), 1.0);
        let b = Bubble::new(vec![0.0, 0.0], 4.0).unwrap();
        assert!((eval_bubble(&b, &[0.0, 0.0], &p) - 4f64.powf(0.75)).abs() < 1e-14);
        assert!((eval_bubble(&Bubble::unit(2), &[1.0, 0.0], &p) - 0.594_603_557_501_360_5).abs() < 1e-14);
    }

    #[test]
    fn laplacian_matches_differences() {
        let p = make_params(3, 0.4).unwrap();
        let f = BubbleField::new(Bubble::new(vec![0.1, -0.2, 0.3], 1.7).unwrap(), p).unwrap();
        let x = [0.4, 0.5, -0.6];
        let h = 1e-4;
        let mut fd = 0.0;
        for i in 0..3 {
            let mut a = x;
            let mut b = x;
            a[i] += h;
            b[i] -= h;
            fd += (f.value(&a) - 2.0 * f.value(&x) + f.value(&b)) / (h * h);
        }
        assert!((fd - f.laplacian(&x).unwrap()).abs() < 1e-5);
        let g = f.gradient(&x);
        let mut a = x;
        a[1] += h;
        let mut b = x;
        b[1] -= h;
        assert!(((f.value(&a) - f.value(&b)) / (2.0 * h) - g[1]).abs() < 1e-7);
    }

    #[test]
    fn radial_constants_in_the_plane() {
        let p = make_params(2, 0.25).unwrap();
        let c1 = c1_oracle(&p, 1e-13, 1_000_000).unwrap().value;
        let c3 = c3_oracle(&p, 1e-13, 1_000_000).unwrap().value;
        assert!((c1 - std::f64::consts::PI).abs() < 1e-10);
        assert!((c3 - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    }
}
