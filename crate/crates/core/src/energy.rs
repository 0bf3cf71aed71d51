//! The fractional quadratic form and Yamabe quotient of finite bubble sums on
//! the flat model, and the multi-bubble deficit sweep.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::bubbles::eval_bubble;
use crate::constants::{compute_constants, extension_energy_cached, trace_constants, ENERGY_TOL};
use crate::error::{Error, Result};
use crate::interactions::{epsilon_ij, interaction_oracle};
use crate::model::Bubble;
use crate::params::FracParams;
use crate::quadrature::gk::{integrate, GkConfig};
use crate::quadrature::{integrate_axisymmetric, integrate_radial, integrate_rn_with, AxialOptions, RnOptions, default_budget};

/// `sum alpha_i delta_i` with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleSum {
    terms: Vec<(f64, Bubble)>,
    params: FracParams,
}

impl BubbleSum {
    pub fn new(terms: Vec<(f64, Bubble)>, params: FracParams) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("empty bubble sum".into()));
        }
        for (a, b) in &terms {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument(format!("weight {a} is not positive")));
            }
            if b.dim() != params.n() {
                return Err(Error::InvalidArgument("bubble dimension does not match n".into()));
            }
        }
        Ok(Self { terms, params })
    }

    pub fn single(b: Bubble, params: FracParams) -> Result<Self> {
        Self::new(vec![(1.0, b)], params)
    }

    pub fn terms(&self) -> &[(f64, Bubble)] {
        &self.terms
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    /// All weights multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.terms.iter().map(|(a, b)| (a * t, b.clone())).collect(), self.params)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, b)| a * eval_bubble(b, x, &self.params)).sum()
    }
}

/// How the pairing `e(b_i, b_j) = int delta_i (-Delta)^g delta_j` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    /// Fourier multiplier `|xi|^(2g)` applied to the transforms of the
    /// bubbles, reduced to a one-dimensional radial integral.
    Spectral,
    /// `d* int y^(1-2g) |grad U|^2` on the diagonal; off the diagonal the
    /// identity `e = c_frac int delta_i^p delta_j`.
    Extension,
}

impl Route {
    pub fn tag(&self) -> &'static str {
        match self {
            Route::Spectral => "spectral",
            Route::Extension => "extension",
        }
    }
}

/// Relative tolerance of the pair integrals behind the quadratic form.
pub const PAIR_TOL: f64 = 1e-9;

/// `e(b_i, b_j)` by the chosen route. Depends on the scales and the centre
/// distance only; cached on those.
pub fn pair_term(bi: &Bubble, bj: &Bubble, params: &FracParams, route: Route) -> Result<f64> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, u64, Route, u64, u64, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    let (mut li, mut lj) = (bi.scale(), bj.scale());
    if li > lj {
        std::mem::swap(&mut li, &mut lj);
    }
    let rho = bi.distance2(bj.center()).sqrt();
    let key = (params.n(), params.gamma().to_bits(), route, li.to_bits(), lj.to_bits(), rho.to_bits());
    if let Some(v) = cache.read().ok().and_then(|m| m.get(&key).copied()) {
        return Ok(v);
    }
    let v = match route {
        Route::Spectral => spectral_pair(li, lj, rho, params, PAIR_TOL)?,
        Route::Extension => {
            let tr = trace_constants(params, default_budget())?;
            if rho == 0.0 && li == lj {
                tr.d_star * extension_energy_cached(params, li, ENERGY_TOL, default_budget())?
            } else {
                tr.c_frac * interaction_oracle(bi, bj, params, PAIR_TOL)?.value
            }
        }
    };
    if let Ok(mut m) = cache.write() {
        m.insert(key, v);
    }
    Ok(v)
}

/// `int_{S^(n-1)} exp(-i t w_1) dw`.
fn sphere_mean(n: usize, t: f64) -> f64 {
    match n {
        1 => 2.0 * t.cos(),
        2 => 2.0 * PI * puruspe::Jn(0, t),
        _ if t == 0.0 => 4.0 * PI,
        _ => 4.0 * PI * t.sin() / t,
    }
}

/// `(2 pi)^-n int |xi|^(2g) F_i(xi) conj(F_j(xi))` with the transform of the
/// unit bubble `(2 pi)^(n/2) 2^(1-s) / Gamma(s) |xi|^-g K_g(|xi|)`.
fn spectral_pair(li: f64, lj: f64, rho: f64, params: &FracParams, tol: f64) -> Result<f64> {
    let n = params.n();
    let g = params.gamma();
    let s = params.bubble_power();
    let profile = |k: f64| if k > 700.0 { 0.0 } else { k.powf(-g) * puruspe::Inu_Knu(g, k).1 };
    let k_max = 60.0 / (1.0 / li + 1.0 / lj);
    // k = k_max u^2 removes the algebraic endpoint behaviour at k = 0.
    let f = |u: f64| {
        let k = k_max * u * u;
        if k == 0.0 {
            return 0.0;
        }
        2.0 * k_max * u * k.powf(2.0 * g + n as f64 - 1.0) * profile(k / li) * profile(k / lj) * sphere_mean(n, k * rho)
    };
    let periods = (k_max * rho / PI).ceil().min(4000.0) as usize;
    let mut cuts: Vec<f64> = (0..=periods.max(1)).map(|m| (m as f64 / periods.max(1) as f64).sqrt()).collect();
    cuts.dedup();
    let (v, err, _, ok) = integrate(f, &cuts, &GkConfig::new(0.0, tol, default_budget()));
    if !ok {
        return Err(Error::BudgetExhausted { what: "spectral pairing".into(), budget: default_budget(), err });
    }
    Ok(2f64.powf(2.0 - 2.0 * s) / gamma(s).powi(2) * (li * lj).powf(s - n as f64) * v)
}

/// `<u, u> = sum_ij alpha_i alpha_j e(b_i, b_j)`, pairs in parallel.
pub fn quadratic_form(u: &BubbleSum, route: Route) -> Result<f64> {
    let t = u.terms();
    let pairs: Vec<(usize, usize)> = (0..t.len()).flat_map(|i| (i..t.len()).map(move |j| (i, j))).collect();
    let vals = pairs
        .par_iter()
        .map(|&(i, j)| {
            let e = pair_term(&t[i].1, &t[j].1, u.params(), route)?;
            Ok(if i == j { 1.0 } else { 2.0 } * t[i].0 * t[j].0 * e)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.iter().sum())
}

/// Relative tolerance of the volume integral.
pub const VOLUME_TOL: f64 = 1e-9;

/// Tolerance and budget multiplier of the fully nested volume (centres not
/// collinear). Separated peaks make the tensor-product rule expensive; 1e-7
/// is well below what the energy deficits resolve.
pub const NESTED_VOLUME_TOL: f64 = 1e-7;
pub const NESTED_VOLUME_BUDGET_FACTOR: usize = 10;

/// `int u^(2n/(n-2g))`: radial when all centres coincide, axisymmetric when
/// they are collinear, nested otherwise.
pub fn volume(u: &BubbleSum) -> Result<f64> {
    let params = u.params();
    let n = params.n();
    let q = params.sobolev_exponent();
    let t = u.terms();
    let decay = 2.0 * params.nf();
    let c0 = t[0].1.center().to_vec();
    let offsets: Vec<Vec<f64>> = t.iter().map(|(_, b)| b.center().iter().zip(&c0).map(|(x, y)| x - y).collect()).collect();
    let far = offsets.iter().map(|o| o.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let widths: Vec<f64> = t.iter().map(|(_, b)| 1.0 / b.scale()).collect();
    let wmin = widths.iter().cloned().fold(f64::INFINITY, f64::min);
    let budget = default_budget();
    if far == 0.0 {
        let f = |r: f64| {
            let v: f64 = t.iter().map(|(a, b)| a * unit_at(b.scale(), r * r, params)).sum();
            v.powf(q)
        };
        return Ok(integrate_radial(f, n, decay, wmin, &widths, VOLUME_TOL, budget)?.require("volume", budget)?.value);
    }
    let k = offsets.iter().position(|o| o.iter().map(|v| v * v).sum::<f64>().sqrt() == far).unwrap_or(0);
    let axis: Vec<f64> = offsets[k].iter().map(|v| v / far).collect();
    let along: Vec<f64> = offsets.iter().map(|o| o.iter().zip(&axis).map(|(a, b)| a * b).sum()).collect();
    let collinear = offsets.iter().zip(&along).all(|(o, s)| {
        let perp: f64 = o.iter().zip(&axis).map(|(a, e)| (a - s * e).powi(2)).sum();
        perp.sqrt() <= 1e-12 * far
    });
    if collinear && n >= 2 {
        let f = |s: f64, r: f64| {
            let v: f64 = t.iter().zip(&along).map(|((a, b), sk)| a * unit_at(b.scale(), (s - sk).powi(2) + r * r, params)).sum();
            v.powf(q)
        };
        let mut cuts = along.clone();
        for (sk, w) in along.iter().zip(&widths) {
            cuts.extend([sk - w, sk + w, sk - 10.0 * w, sk + 10.0 * w]);
        }
        let t_scale = |s: f64| along.iter().zip(&widths).map(|(sk, w)| f64::hypot(*w, s - sk)).fold(f64::INFINITY, f64::min);
        let opts = AxialOptions {
            rel_tol: VOLUME_TOL,
            abs_tol: 0.0,
            budget,
            decay,
            s_cuts: cuts,
            s_origin: 0.0,
            s_scale: far.max(wmin),
            t_scale: &t_scale,
        };
        return Ok(integrate_axisymmetric(&f, n, &opts)?.require("volume", budget)?.value);
    }
    let f = |x: &[f64]| u.value(x).powf(q);
    let cuts: Vec<Vec<f64>> = (0..n).map(|d| t.iter().map(|(_, b)| b.center()[d]).collect()).collect();
    let origin: Vec<f64> = (0..n).map(|d| t.iter().map(|(_, b)| b.center()[d]).sum::<f64>() / t.len() as f64).collect();
    let anchors = t.iter().map(|(_, b)| (b.center().to_vec(), 1.0 / b.scale())).collect();
    let budget = budget.saturating_mul(NESTED_VOLUME_BUDGET_FACTOR);
    let opts = RnOptions { scale: far.max(wmin), origin, cuts, anchors, ..RnOptions::new(n, decay, NESTED_VOLUME_TOL, budget) };
    Ok(integrate_rn_with(&f, n, &opts)?.require("volume", budget)?.value)
}

fn unit_at(lambda: f64, d2: f64, params: &FracParams) -> f64 {
    (lambda / (1.0 + lambda * lambda * d2)).powf(params.bubble_power())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub quadratic: f64,
    pub volume: f64,
    pub quotient: f64,
}

pub fn yamabe_quotient(u: &BubbleSum) -> Result<EnergyReport> {
    yamabe_quotient_with(u, Route::Extension)
}

pub fn yamabe_quotient_with(u: &BubbleSum, route: Route) -> Result<EnergyReport> {
    let (quadratic, volume) = rayon::join(|| quadratic_form(u, route), || volume(u));
    let (quadratic, volume) = (quadratic?, volume?);
    let p = u.params();
    let quotient = quadratic / volume.powf((p.nf() - 2.0 * p.gamma()) / p.nf());
    Ok(EnergyReport { quadratic, volume, quotient })
}

/// Vertices of a regular simplex with `p` vertices and edge `sep`, centred
/// at the origin of `R^n`. Needs `p <= n + 1`.
pub fn simplex(p: usize, n: usize, sep: f64) -> Result<Vec<Vec<f64>>> {
    if p == 0 || p > n + 1 {
        return Err(Error::InvalidArgument(format!("a regular simplex with {p} vertices does not fit in R^{n}")));
    }
    // Vertices e_k - centroid in R^p, written in an orthonormal basis of
    // the sum-zero hyperplane.
    let scale = sep / 2f64.sqrt();
    Ok((0..p)
        .map(|k| {
            let mut x = vec![0.0; n];
            for j in 1..p {
                let norm = ((j * (j + 1)) as f64).sqrt();
                x[j - 1] = scale
                    * if k < j {
                        1.0 / norm
                    } else if k == j {
                        -(j as f64) / norm
                    } else {
                        0.0
                    };
            }
            x
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterRow {
    pub p: usize,
    pub sep: f64,
    /// `sum_{i<j} eps_ij`.
    pub eps_sum: f64,
    pub quotient: f64,
    /// `p^(2g/n)` times the sphere constant.
    pub bound: f64,
    pub deficit: f64,
    pub deficit_per_eps: f64,
}

/// Equal-weight, equal-scale bubbles at the vertices of a regular simplex,
/// one row per separation.
pub fn barycenter_sweep(p: usize, seps: &[f64], lambda: f64, params: &FracParams) -> Result<Vec<BarycenterRow>> {
    if !(2..=5).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} outside 2..=5")));
    }
    let sphere = compute_constants(params, default_budget())?
        .yamabe_sphere
        .ok_or(Error::NearHalf("barycenter sweep"))?;
    let bound = (p as f64).powf(2.0 * params.gamma() / params.nf()) * sphere;
    seps.iter()
        .map(|&sep| {
            let bubbles = simplex(p, params.n(), sep)?
                .into_iter()
                .map(|c| Bubble::new(c, lambda))
                .collect::<Result<Vec<_>>>()?;
            let mut eps_sum = 0.0;
            for i in 0..p {
                for j in i + 1..p {
                    eps_sum += epsilon_ij(&bubbles[i], &bubbles[j], params);
                }
            }
            let u = BubbleSum::new(bubbles.into_iter().map(|b| (1.0, b)).collect(), *params)?;
            let quotient = yamabe_quotient(&u)?.quotient;
            let deficit = bound - quotient;
            Ok(BarycenterRow { p, sep, eps_sum, quotient, bound, deficit, deficit_per_eps: deficit / eps_sum })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::closed_form;
    use crate::params::make_params;

    #[test]
    fn spectral_diagonal_is_c2() {
        for (n, g) in [(2, 0.25), (3, 0.75), (2, 0.5)] {
            let p = make_params(n, g).unwrap();
            let e = pair_term(&Bubble::unit(n), &Bubble::unit(n), &p, Route::Spectral).unwrap();
            let c2 = closed_form::c_frac(&p) * closed_form::c1(&p);
            assert!((e / c2 - 1.0).abs() < 1e-8, "{n} {g}: {e} {c2}");
        }
    }

    #[test]
    fn spectral_pair_matches_interaction_identity() {
        let p = make_params(2, 0.25).unwrap();
        let a = Bubble::unit(2);
        let b = Bubble::new(vec![3.0, 0.0], 2.0).unwrap();
        let e = pair_term(&a, &b, &p, Route::Spectral).unwrap();
        let i = closed_form::c_frac(&p) * interaction_oracle(&a, &b, &p, 1e-10).unwrap().value;
        assert!((e / i - 1.0).abs() < 1e-7, "{e} {i}");
    }

    #[test]
    fn simplex_edges() {
        for (p, n) in [(2, 2), (3, 2), (3, 3), (4, 3)] {
            let v = simplex(p, n, 4.0).unwrap();
            for i in 0..p {
                for j in i + 1..p {
                    let d: f64 = v[i].iter().zip(&v[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    assert!((d.sqrt() - 4.0).abs() < 1e-12);
                }
            }
            let c: f64 = (0..n).map(|d| v.iter().map(|x| x[d]).sum::<f64>().abs()).sum();
            assert!(c < 1e-12);
        }
        assert!(simplex(5, 3, 1.0).is_err());
    }

    #[test]
    fn volume_of_single_bubble_is_c1() {
        let p = make_params(3, 0.25).unwrap();
        let u = BubbleSum::single(Bubble::new(vec![0.5, 0.0, 1.0], 3.0).unwrap(), p).unwrap();
        assert!((volume(&u).unwrap() / closed_form::c1(&p) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn collinear_and_nested_volumes_agree() {
        let p = make_params(2, 0.75).unwrap();
        let a = Bubble::new(vec![0.0, 0.0], 1.0).unwrap();
        let b = Bubble::new(vec![2.0, 1.0], 1.5).unwrap();
        let c = Bubble::new(vec![0.0, 3.0], 0.8).unwrap();
        let two = BubbleSum::new(vec![(1.0, a.clone()), (0.5, b.clone())], p).unwrap();
        let f = |x: &[f64]| two.value(x).powf(p.sobolev_exponent());
        let opts = RnOptions { cuts: vec![vec![0.0, 2.0], vec![0.0, 1.0]], ..RnOptions::new(2, 4.0, 1e-9, 50_000_000) };
        let nested = integrate_rn_with(&f, 2, &opts).unwrap().value;
        assert!((volume(&two).unwrap() / nested - 1.0).abs() < 1e-7);
        let three = BubbleSum::new(vec![(1.0, a), (0.5, b), (2.0, c)], p).unwrap();
        assert!(volume(&three).unwrap() > volume(&two).unwrap());
    }
}
