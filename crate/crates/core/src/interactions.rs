//! Pair interactions `int delta_i^alpha delta_j^beta`, their leading-order
//! asymptotics in the interaction parameter `eps_ij`, and the auxiliary
//! integral identities used in deriving them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bubbles::eval_bubble;
use crate::constants::c3_cached;
use crate::error::{Error, Result};
use crate::fit::{band_ratio, loglog_slope};
use crate::model::Bubble;
use crate::params::FracParams;
use crate::quadrature::{integrate_axisymmetric, integrate_radial, integrate_rn_with, AxialOptions, QuadResult, RnOptions, default_budget};

/// `(l_i/l_j + l_j/l_i + l_i l_j |a_i - a_j|^2)^((2g-n)/2)`.
pub fn epsilon_ij(bi: &Bubble, bj: &Bubble, params: &FracParams) -> f64 {
    base_a(bi, bj).powf(-params.bubble_power())
}

fn base_a(bi: &Bubble, bj: &Bubble) -> f64 {
    let (li, lj) = (bi.scale(), bj.scale());
    li / lj + lj / li + li * lj * bi.distance2(bj.center())
}

/// A bubble pair with its interaction parameter and scale ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct BubblePair {
    pub bi: Bubble,
    pub bj: Bubble,
    pub params: FracParams,
    pub eps: f64,
    /// `min(l_i/l_j, l_j/l_i)`.
    pub q: f64,
}

impl BubblePair {
    pub fn new(bi: Bubble, bj: Bubble, params: FracParams) -> Result<Self> {
        if bi.dim() != params.n() || bj.dim() != params.n() {
            return Err(Error::InvalidArgument("bubble dimension does not match n".into()));
        }
        let eps = epsilon_ij(&bi, &bj, &params);
        let r = bi.scale() / bj.scale();
        Ok(Self { bi, bj, params, eps, q: r.min(1.0 / r) })
    }

    pub fn separation(&self) -> f64 {
        self.bi.distance2(self.bj.center()).sqrt()
    }
}

/// Weight multiplying `delta_i^alpha delta_j^beta` in [`pair_integral`]:
/// the plain integral or one of its exact derivatives. `rho` is
/// `|a_i - a_j|`; derivatives in `rho` move `a_j` away from `a_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weight {
    Plain,
    LogLambdaI,
    LogLambdaJ,
    DRho,
    D2Rho,
}

/// `int delta_i^alpha delta_j^beta w` over `R^n`, with `a_i` at the origin
/// and `a_j` at `rho` on the axis.
#[allow(clippy::too_many_arguments)]
fn pair_integral_weighted(
    li: f64,
    lj: f64,
    rho: f64,
    alpha: f64,
    beta: f64,
    weight: Weight,
    params: &FracParams,
    tol: f64,
    budget: usize,
) -> Result<QuadResult> {
    let n = params.n();
    let s = params.bubble_power();
    let decay = 2.0 * s * (alpha + beta);
    let (wi, wj) = (1.0 / li, 1.0 / lj);
    let profile = |l: f64, d2: f64| (l / (1.0 + l * l * d2)).powf(s);
    // `e` is the axial offset from `a_j`, `d2i`/`d2j` squared distances.
    let w = |e: f64, e2: f64, d2i: f64, d2j: f64| -> f64 {
        match weight {
            Weight::Plain => 1.0,
            Weight::LogLambdaI => alpha * s * (1.0 - li * li * d2i) / (1.0 + li * li * d2i),
            Weight::LogLambdaJ => beta * s * (1.0 - lj * lj * d2j) / (1.0 + lj * lj * d2j),
            Weight::DRho => 2.0 * beta * s * lj * lj * e / (1.0 + lj * lj * d2j),
            Weight::D2Rho => {
                let wj = 1.0 + lj * lj * d2j;
                let g = 2.0 * beta * s * lj * lj / wj;
                g * g * e2 + g * (2.0 * lj * lj * e2 / wj - 1.0)
            }
        }
    };
    if rho == 0.0 {
        // Only the square of the axial offset enters; average it over the sphere.
        let r = integrate_radial(
            |r| {
                let r2 = r * r;
                let e2 = r2 / n as f64;
                let wt = if weight == Weight::DRho { 0.0 } else { w(0.0, e2, r2, r2) };
                profile(li, r2).powf(alpha) * profile(lj, r2).powf(beta) * wt
            },
            n,
            decay,
            wi.min(wj),
            &[wi, wj, 10.0 * wi.min(wj)],
            tol,
            budget,
        )?;
        return r.require("pair interaction", budget);
    }
    let f = |x: f64, t: f64| {
        let t2 = t * t;
        let (d2i, e) = (x * x + t2, x - rho);
        let d2j = e * e + t2;
        profile(li, d2i).powf(alpha) * profile(lj, d2j).powf(beta) * w(e, e * e, d2i, d2j)
    };
    let mut cuts = vec![0.0, rho];
    for k in [1.0, 10.0] {
        cuts.extend([-k * wi, k * wi, rho - k * wj, rho + k * wj]);
    }
    let t_scale = |x: f64| f64::hypot(wi, x).min(f64::hypot(wj, x - rho));
    let opts = AxialOptions {
        rel_tol: tol,
        abs_tol: 0.0,
        budget,
        decay,
        s_cuts: cuts,
        s_origin: 0.0,
        s_scale: rho.max(wi).max(wj),
        t_scale: &t_scale,
    };
    integrate_axisymmetric(&f, n, &opts)?.require("pair interaction", budget)
}

#[allow(clippy::too_many_arguments)]
fn pair_integral(li: f64, lj: f64, rho: f64, alpha: f64, beta: f64, params: &FracParams, tol: f64, budget: usize) -> Result<QuadResult> {
    pair_integral_weighted(li, lj, rho, alpha, beta, Weight::Plain, params, tol, budget)
}

/// `int delta_i^p delta_j`, `p = (n+2g)/(n-2g)`.
pub fn interaction_oracle(bi: &Bubble, bj: &Bubble, params: &FracParams, tol: f64) -> Result<QuadResult> {
    let rho = bi.distance2(bj.center()).sqrt();
    pair_integral(bi.scale(), bj.scale(), rho, params.critical_exponent(), 1.0, params, tol, default_budget())
}

/// `int delta_i delta_j^p`, the other ordering.
pub fn interaction_oracle_dual(bi: &Bubble, bj: &Bubble, params: &FracParams, tol: f64) -> Result<QuadResult> {
    interaction_oracle(bj, bi, params, tol)
}

/// Which quantity of the interaction is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    /// `l_k d/dl_k`, `k = i` (`true`) or `k = j` (`false`).
    DLambda { wrt_i: bool },
    /// Gradient in `a_i`.
    GradA,
    /// Hessian in `a_i`.
    HessA,
}

impl Order {
    pub fn tag(&self) -> &'static str {
        match self {
            Order::Value => "value",
            Order::DLambda { wrt_i: true } => "dlambda_i",
            Order::DLambda { wrt_i: false } => "dlambda_j",
            Order::GradA => "grad_a",
            Order::HessA => "hess_a",
        }
    }
}

/// Scalar, vector or matrix leading term.
#[derive(Debug, Clone, PartialEq)]
pub enum Leading {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

impl Leading {
    fn entries(&self) -> Vec<f64> {
        match self {
            Leading::Scalar(v) => vec![*v],
            Leading::Vector(v) => v.clone(),
            Leading::Matrix(m) => m.iter().flatten().copied().collect(),
        }
    }

    /// The scalar itself, or the largest entry in absolute value.
    pub fn magnitude(&self) -> f64 {
        match self {
            Leading::Scalar(v) => *v,
            _ => self.entries().iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        }
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &Leading) -> f64 {
        self.entries().iter().zip(other.entries()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Normalization of the `a`-derivative leading terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Exact `a_i`-derivatives of `c3 eps_ij`; these carry a factor
    /// `-(n - 2g)` and the exponent `(n+2-2g)/(n-2g)` in both orders.
    Derived,
    /// The leading terms without the `-(n-2g)` factor, and with exponent
    /// `(n+2-2g)/2` on the Hessian.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Asymptotic {
    pub leading: Leading,
    pub error_scale: f64,
}

pub fn interaction_asymptotic(bi: &Bubble, bj: &Bubble, params: &FracParams, order: Order) -> Result<Asymptotic> {
    interaction_asymptotic_with(bi, bj, params, order, Normalization::Derived)
}

pub fn interaction_asymptotic_with(
    bi: &Bubble,
    bj: &Bubble,
    params: &FracParams,
    order: Order,
    norm: Normalization,
) -> Result<Asymptotic> {
    let c3 = c3_cached(params)?;
    let n = params.nf();
    let g = params.gamma();
    let s = params.bubble_power();
    let (li, lj) = (bi.scale(), bj.scale());
    let a = base_a(bi, bj);
    let eps = a.powf(-s);
    let ratio = li / lj;
    let q = ratio.min(1.0 / ratio);
    let qg = q.powf(g);
    let d: Vec<f64> = bi.center().iter().zip(bj.center()).map(|(x, y)| x - y).collect();
    let e_next = eps.powf((n + 2.0 - 2.0 * g) / (n - 2.0 * g));
    let factor = match norm {
        Normalization::Derived => -(n - 2.0 * g),
        Normalization::AsPrinted => 1.0,
    };
    Ok(match order {
        Order::Value => Asymptotic { leading: Leading::Scalar(c3 * eps), error_scale: qg * eps.powf(n / (n - 2.0 * g)) },
        Order::DLambda { wrt_i } => {
            let d2 = bi.distance2(bj.center());
            let da = if wrt_i { li / lj - lj / li + li * lj * d2 } else { lj / li - li / lj + li * lj * d2 };
            Asymptotic {
                leading: Leading::Scalar(-s * c3 * a.powf(-s - 1.0) * da),
                error_scale: qg * eps.powf(n / (n - 2.0 * g)),
            }
        }
        Order::GradA => Asymptotic {
            leading: Leading::Vector(d.iter().map(|di| factor * c3 * li * lj * di * e_next).collect()),
            error_scale: qg * (li * lj).sqrt() * eps.powf((n + 1.0) / (n - 2.0 * g)),
        },
        Order::HessA => {
            let e = match norm {
                Normalization::Derived => e_next,
                Normalization::AsPrinted => eps.powf((n + 2.0 - 2.0 * g) / 2.0),
            };
            let k = (n + 2.0 - 2.0 * g) * li * lj / a;
            let m = d
                .iter()
                .enumerate()
                .map(|(r, dr)| {
                    d.iter()
                        .enumerate()
                        .map(|(c, dc)| factor * c3 * li * lj * ((r == c) as i32 as f64 - k * dr * dc) * e)
                        .collect()
                })
                .collect();
            Asymptotic { leading: Leading::Matrix(m), error_scale: qg * li * lj * eps.powf((n + 2.0) / (n - 2.0 * g)) }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionReport {
    pub order: Order,
    pub eps: f64,
    pub q: f64,
    /// The interaction integral at the base configuration.
    pub oracle: QuadResult,
    /// Oracle value of the compared quantity.
    pub oracle_quantity: Leading,
    pub leading: Leading,
    pub asymptotic: f64,
    pub predicted_error_scale: f64,
    pub observed_gap: f64,
    pub gap_ratio: f64,
}

/// Oracle tolerance used by [`verify_interaction`].
pub const VERIFY_TOL: f64 = 1e-12;
/// Relative step in `log lambda` and in `a`.
pub const DIFF_STEP: f64 = 1e-3;
/// Richardson gate on differenced derivatives, relative to the quantity.
pub const DIFF_GATE: f64 = 1e-6;

/// The compared quantity for `order`, from integrals of the differentiated
/// integrand. In `a` the integral depends on `rho = |a_i - a_j|` only, so
/// the gradient is `F'(rho) d` and the Hessian `F'' d d^T + F'/rho (I - d d^T)`
/// with `d` the unit vector along `a_i - a_j`.
pub fn interaction_quantity(bi: &Bubble, bj: &Bubble, params: &FracParams, order: Order, tol: f64) -> Result<Leading> {
    let (li, lj) = (bi.scale(), bj.scale());
    let rho = bi.distance2(bj.center()).sqrt();
    let p = params.critical_exponent();
    let n = params.n();
    let q = |w: Weight| -> Result<f64> { Ok(pair_integral_weighted(li, lj, rho, p, 1.0, w, params, tol, default_budget())?.value) };
    let unit: Vec<f64> = if rho > 0.0 {
        bi.center().iter().zip(bj.center()).map(|(x, y)| (x - y) / rho).collect()
    } else {
        vec![0.0; n]
    };
    Ok(match order {
        Order::Value => Leading::Scalar(q(Weight::Plain)?),
        Order::DLambda { wrt_i: true } => Leading::Scalar(q(Weight::LogLambdaI)?),
        Order::DLambda { wrt_i: false } => Leading::Scalar(q(Weight::LogLambdaJ)?),
        Order::GradA => {
            let fp = if rho > 0.0 { q(Weight::DRho)? } else { 0.0 };
            Leading::Vector(unit.iter().map(|u| fp * u).collect())
        }
        Order::HessA => {
            let fpp = q(Weight::D2Rho)?;
            let across = if rho > 0.0 { q(Weight::DRho)? / rho } else { fpp };
            Leading::Matrix(
                (0..n)
                    .map(|r| {
                        (0..n)
                            .map(|c| {
                                let uu = unit[r] * unit[c];
                                let id = (r == c) as i32 as f64;
                                fpp * uu + across * (id - uu)
                            })
                            .collect()
                    })
                    .collect(),
            )
        }
    })
}

/// Oracle vs leading term for one order.
pub fn verify_interaction(bi: &Bubble, bj: &Bubble, params: &FracParams, order: Order) -> Result<InteractionReport> {
    let pair = BubblePair::new(bi.clone(), bj.clone(), *params)?;
    let asym = interaction_asymptotic(bi, bj, params, order)?;
    let rho = pair.separation();
    let base = pair_integral(bi.scale(), bj.scale(), rho, params.critical_exponent(), 1.0, params, VERIFY_TOL, default_budget())?;
    let quantity = match order {
        Order::Value => Leading::Scalar(base.value),
        _ => interaction_quantity(bi, bj, params, order, VERIFY_TOL)?,
    };
    let gap = quantity.max_diff(&asym.leading);
    Ok(InteractionReport {
        order,
        eps: pair.eps,
        q: pair.q,
        oracle: base,
        asymptotic: asym.leading.magnitude(),
        oracle_quantity: quantity,
        leading: asym.leading,
        predicted_error_scale: asym.error_scale,
        observed_gap: gap,
        gap_ratio: gap / asym.error_scale,
    })
}

/// The quantity of `order` from centred differences of the plain
/// interaction integral: steps `DIFF_STEP` in `log lambda` and
/// `DIFF_STEP * max(rho, 1/min lambda)` in `rho`, halved twice, with two
/// Richardson levels. Fails when the two extrapolants differ by more than
/// `DIFF_GATE` of the quantity.
pub fn differenced_quantity(bi: &Bubble, bj: &Bubble, params: &FracParams, order: Order, tol: f64) -> Result<Leading> {
    let (li, lj) = (bi.scale(), bj.scale());
    let rho = bi.distance2(bj.center()).sqrt();
    let n = params.n();
    let p = params.critical_exponent();
    let f = |li: f64, lj: f64, rho: f64| -> Result<f64> { Ok(pair_integral(li, lj, rho.abs(), p, 1.0, params, tol, default_budget())?.value) };
    let f0 = f(li, lj, rho)?;
    let extrapolate = |d: &dyn Fn(f64) -> Result<f64>, h: f64| -> Result<f64> {
        let (a, b, c) = (d(h)?, d(0.5 * h)?, d(0.25 * h)?);
        let (r1, r2) = ((4.0 * b - a) / 3.0, (4.0 * c - b) / 3.0);
        let mismatch = (r1 - r2).abs() / r2.abs().max(f64::MIN_POSITIVE);
        if mismatch > DIFF_GATE {
            return Err(Error::Richardson { mismatch });
        }
        Ok((16.0 * r2 - r1) / 15.0)
    };
    let h_a = DIFF_STEP * rho.max(1.0 / li.min(lj));
    let first = |h: f64| -> Result<f64> { Ok((f(li, lj, rho + h)? - f(li, lj, rho - h)?) / (2.0 * h)) };
    let second = |h: f64| -> Result<f64> { Ok((f(li, lj, rho + h)? - 2.0 * f0 + f(li, lj, rho - h)?) / (h * h)) };
    let unit: Vec<f64> = if rho > 0.0 {
        bi.center().iter().zip(bj.center()).map(|(x, y)| (x - y) / rho).collect()
    } else {
        vec![0.0; n]
    };
    Ok(match order {
        Order::Value => Leading::Scalar(f0),
        Order::DLambda { wrt_i } => {
            let d = |h: f64| -> Result<f64> {
                let (up, dn) = if wrt_i {
                    (f(li * h.exp(), lj, rho)?, f(li * (-h).exp(), lj, rho)?)
                } else {
                    (f(li, lj * h.exp(), rho)?, f(li, lj * (-h).exp(), rho)?)
                };
                Ok((up - dn) / (2.0 * h))
            };
            Leading::Scalar(extrapolate(&d, DIFF_STEP)?)
        }
        Order::GradA => {
            let fp = if rho > 0.0 { extrapolate(&first, h_a)? } else { 0.0 };
            Leading::Vector(unit.iter().map(|u| fp * u).collect())
        }
        Order::HessA => {
            let fpp = extrapolate(&second, h_a)?;
            let across = if rho > 0.0 { extrapolate(&first, h_a)? / rho } else { fpp };
            Leading::Matrix(
                (0..n)
                    .map(|r| {
                        (0..n)
                            .map(|c| {
                                let uu = unit[r] * unit[c];
                                fpp * uu + across * ((r == c) as i32 as f64 - uu)
                            })
                            .collect()
                    })
                    .collect(),
            )
        }
    })
}

/// The two sweep families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `a_i` near `a_j`, `l_i / l_j` growing.
    LambdaRatio,
    /// Equal unit scales, separation growing.
    Separation,
}

impl Regime {
    pub fn tag(&self) -> &'static str {
        match self {
            Regime::LambdaRatio => "lambda_ratio",
            Regime::Separation => "separation",
        }
    }
}

/// Offset between centres in the scale-ratio family when the compared
/// quantity would vanish at coincidence.
pub const RATIO_OFFSET: f64 = 0.1;

/// Pairs whose `eps` decreases geometrically over `decades` decades in
/// `points` steps, starting from `l_i/l_j = 10` or `|a_i - a_j| = 4`.
pub fn sweep_pairs(regime: Regime, order: Order, params: &FracParams, points: usize, decades: f64) -> Result<Vec<(Bubble, Bubble)>> {
    if points < 2 {
        return Err(Error::InvalidArgument("a sweep needs at least two points".into()));
    }
    let n = params.n();
    let s = params.bubble_power();
    let step = |k: usize| 10f64.powf(decades * k as f64 / (points - 1) as f64 / s);
    (0..points)
        .map(|k| match regime {
            Regime::LambdaRatio => {
                let ratio = 10.0 * step(k);
                let off = if order == Order::GradA { RATIO_OFFSET } else { 0.0 };
                let mut ci = vec![0.0; n];
                ci[0] = off;
                Ok((Bubble::new(ci, ratio)?, Bubble::new(vec![0.0; n], 1.0)?))
            }
            Regime::Separation => {
                // A = 2 + rho^2 grows by 10^(decades/s) in total.
                let a = 18.0 * step(k);
                let mut ci = vec![0.0; n];
                ci[0] = (a - 2.0).sqrt();
                Ok((Bubble::new(ci, 1.0)?, Bubble::new(vec![0.0; n], 1.0)?))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFit {
    pub regime: Regime,
    pub order: Order,
    pub reports: Vec<InteractionReport>,
    /// Slope of `log gap` against `log eps`.
    pub fitted_exponent: f64,
    /// Slope of `log error_scale` against `log eps` along the same sweep.
    pub predicted_exponent: f64,
    /// `max / min` of `gap_ratio` over the sweep.
    pub gap_ratio_band: f64,
}

impl SweepFit {
    pub fn exponent_rel_err(&self) -> f64 {
        (self.fitted_exponent / self.predicted_exponent - 1.0).abs()
    }
}

pub fn interaction_sweep(regime: Regime, order: Order, params: &FracParams, points: usize, decades: f64) -> Result<SweepFit> {
    let pairs = sweep_pairs(regime, order, params, points, decades)?;
    let reports = pairs
        .par_iter()
        .map(|(bi, bj)| verify_interaction(bi, bj, params, order))
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_reports(regime, order, reports))
}

pub fn fit_reports(regime: Regime, order: Order, reports: Vec<InteractionReport>) -> SweepFit {
    let eps: Vec<f64> = reports.iter().map(|r| r.eps).collect();
    let gaps: Vec<f64> = reports.iter().map(|r| r.observed_gap).collect();
    let scales: Vec<f64> = reports.iter().map(|r| r.predicted_error_scale).collect();
    let ratios: Vec<f64> = reports.iter().map(|r| r.gap_ratio).collect();
    SweepFit {
        regime,
        order,
        fitted_exponent: loglog_slope(&eps, &gaps),
        predicted_exponent: loglog_slope(&eps, &scales),
        gap_ratio_band: band_ratio(&ratios),
        reports,
    }
}

/// `int delta_i^alpha delta_j^beta` for `alpha + beta = 2n/(n-2g)`, either
/// `alpha > n/(n-2g) > beta > 0` or `alpha = beta`.
pub fn higher_interaction_oracle(bi: &Bubble, bj: &Bubble, alpha: f64, beta: f64, params: &FracParams, tol: f64) -> Result<QuadResult> {
    let n = params.nf();
    let half = n / (n - 2.0 * params.gamma());
    if ((alpha + beta) / (2.0 * half) - 1.0).abs() > 1e-12 {
        return Err(Error::ExponentConstraint(format!("alpha + beta = {} must equal {}", alpha + beta, 2.0 * half)));
    }
    let balanced = (alpha - beta).abs() <= 1e-12 * half;
    if !balanced && !(alpha > half && half > beta && beta > 0.0) {
        return Err(Error::ExponentConstraint(format!("need alpha > {half} > beta > 0 or alpha = beta")));
    }
    let rho = bi.distance2(bj.center()).sqrt();
    pair_integral(bi.scale(), bj.scale(), rho, alpha, beta, params, tol, default_budget())
}

/// `beta` for the unbalanced sweep: 1, unless the remainder, relative size
/// `eps^(n/(n-2g) - beta)`, would decay slower than `eps^(1/3)`; then half of
/// `n/(n-2g)`. `alpha` is fixed by `alpha + beta = 2n/(n-2g)`.
pub fn unbalanced_exponents(params: &FracParams) -> (f64, f64) {
    let half = params.nf() / (params.nf() - 2.0 * params.gamma());
    let beta = if half - 1.0 >= 1.0 / 3.0 { 1.0 } else { 0.5 * half };
    (2.0 * half - beta, beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HigherRow {
    pub sep: f64,
    pub eps: f64,
    pub value: f64,
}

/// Unit bubbles at separations spanning `decades` decades of `eps`.
pub fn higher_sweep(alpha: f64, beta: f64, params: &FracParams, points: usize, decades: f64, tol: f64) -> Result<Vec<HigherRow>> {
    let pairs = sweep_pairs(Regime::Separation, Order::Value, params, points, decades)?;
    pairs
        .par_iter()
        .map(|(bi, bj)| {
            let v = higher_interaction_oracle(bi, bj, alpha, beta, params, tol)?;
            Ok(HigherRow { sep: bi.distance2(bj.center()).sqrt(), eps: epsilon_ij(bi, bj, params), value: v.value })
        })
        .collect()
}

/// Checks on the auxiliary identities.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixReport {
    /// `int (1 + r^2 - (n+2-2g) x_k^2) / (1+r^2)^((n+4-2g)/2)`, `k = 1`.
    pub zero_identity: QuadResult,
    /// `(n-2g)/2 int (1+r^2)^-((n+2g)/2)`.
    pub b2_lhs: f64,
    /// `(n+2g)/2 int (r^2-1)/(r^2+1) (1+r^2)^-((n+2g)/2)`.
    pub b2_rhs: f64,
    /// Random pairs checked for `max(u, v) >= (u + v)/2`.
    pub dichotomy_pairs: usize,
    pub dichotomy_holds: bool,
}

pub fn appendix_identities(params: &FracParams, tol: f64) -> Result<AppendixReport> {
    let n = params.n();
    let nf = params.nf();
    let g = params.gamma();
    let k = nf + 2.0 - 2.0 * g;
    let e = 0.5 * (nf + 4.0 - 2.0 * g);
    // Axisymmetric about the x_1 axis: s = x_1, t = |(x_2, .., x_n)|.
    let zero_f = |x1: f64, t: f64| {
        let r2 = x1 * x1 + t * t;
        (1.0 + r2 - k * x1 * x1) * (1.0 + r2).powf(-e)
    };
    let decay = nf + 2.0 - 2.0 * g;
    let zero_identity = if n == 1 {
        let f = |x: &[f64]| zero_f(x[0], 0.0);
        integrate_rn_with(&f, 1, &RnOptions::new(1, decay, tol, default_budget()).abs_tol(tol))?
    } else {
        let t_scale = |s: f64| f64::hypot(1.0, s);
        let opts = AxialOptions {
            rel_tol: tol,
            abs_tol: tol,
            budget: default_budget(),
            decay,
            s_cuts: vec![-1.0, 0.0, 1.0],
            s_origin: 0.0,
            s_scale: 1.0,
            t_scale: &t_scale,
        };
        integrate_axisymmetric(&zero_f, n, &opts)?
    }
    .require("zero identity", default_budget())?;
    let a = 0.5 * (nf + 2.0 * g);
    let lhs = integrate_radial(|r| (1.0 + r * r).powf(-a), n, 2.0 * a, 1.0, &[1.0], tol * 1e-3, default_budget())?
        .require("b2", default_budget())?
        .value;
    let rhs = integrate_radial(
        |r| (r * r - 1.0) / (r * r + 1.0) * (1.0 + r * r).powf(-a),
        n,
        2.0 * a,
        1.0,
        &[1.0],
        tol * 1e-3,
        default_budget(),
    )?
    .require("b2", default_budget())?
    .value;
    let pairs = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut holds = true;
    for _ in 0..pairs {
        let (bi, bj) = random_pair(&mut rng, n)?;
        let u = bi.scale() / bj.scale();
        let v = bi.scale() * bj.scale() * bi.distance2(bj.center());
        holds &= u.max(v) >= 0.5 * (u + v);
    }
    Ok(AppendixReport {
        zero_identity,
        b2_lhs: 0.5 * (nf - 2.0 * g) * lhs,
        b2_rhs: a * rhs,
        dichotomy_pairs: pairs,
        dichotomy_holds: holds,
    })
}

/// A pair with log-uniform scales in `[0.1, 10]` and centres in `[-2, 2]^n`.
pub fn random_pair(rng: &mut impl Rng, n: usize) -> Result<(Bubble, Bubble)> {
    let mut one = || -> Result<Bubble> {
        let l = 10f64.powf(rng.gen_range(-1.0..1.0));
        Bubble::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(), l)
    };
    Ok((one()?, one()?))
}

/// Largest `|I(i,j) - I'(i,j)|` over `count` seeded random pairs, against
/// the sum of the two error estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityCheck {
    pub pairs: usize,
    pub worst_gap: f64,
    pub worst_allowed: f64,
    pub holds: bool,
}

pub fn duality_check(params: &FracParams, count: usize, tol: f64, seed: u64) -> Result<DualityCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..count).map(|_| random_pair(&mut rng, params.n())).collect::<Result<Vec<_>>>()?;
    let rows = pairs
        .par_iter()
        .map(|(bi, bj)| {
            let a = interaction_oracle(bi, bj, params, tol)?;
            let b = interaction_oracle_dual(bi, bj, params, tol)?;
            Ok(((a.value - b.value).abs(), a.err_estimate + b.err_estimate + tol * a.value.abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = DualityCheck { pairs: count, worst_gap: 0.0, worst_allowed: 0.0, holds: true };
    for (gap, allowed) in rows {
        if gap / allowed > out.worst_gap / out.worst_allowed.max(f64::MIN_POSITIVE) || out.worst_allowed == 0.0 {
            out.worst_gap = gap;
            out.worst_allowed = allowed;
        }
        out.holds &= gap <= allowed;
    }
    Ok(out)
}

/// Pointwise value of `delta_i^alpha delta_j^beta`, for tests.
pub fn pair_density(bi: &Bubble, bj: &Bubble, alpha: f64, beta: f64, x: &[f64], params: &FracParams) -> f64 {
    eval_bubble(bi, x, params).powf(alpha) * eval_bubble(bj, x, params).powf(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn epsilon_examples() {
        let p = make_params(2, 0.25).unwrap();
        let a = Bubble::unit(2);
        let b = Bubble::new(vec![1.0, 0.0], 1.0).unwrap();
        assert!((epsilon_ij(&a, &b, &p) - 3f64.powf(-0.75)).abs() < 1e-15);
        assert!((epsilon_ij(&a, &a, &p) - 2f64.powf(-0.75)).abs() < 1e-15);
        assert_eq!(epsilon_ij(&a, &b, &p), epsilon_ij(&b, &a, &p));
    }

    #[test]
    fn coincident_pair_gives_c1() {
        let p = make_params(2, 0.25).unwrap();
        let a = Bubble::unit(2);
        let v = interaction_oracle(&a, &a, &p, 1e-12).unwrap().value;
        assert!((v - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn offset_pair_matches_nested_quadrature() {
        let p = make_params(2, 0.25).unwrap();
        let a = Bubble::new(vec![0.2, -0.1], 3.0).unwrap();
        let b = Bubble::new(vec![1.0, 0.5], 0.7).unwrap();
        let ax = interaction_oracle(&a, &b, &p, 1e-10).unwrap().value;
        let pc = p.critical_exponent();
        let f = |x: &[f64]| pair_density(&a, &b, pc, 1.0, x, &p);
        let opts = RnOptions { cuts: vec![vec![0.2, 1.0], vec![-0.1, 0.5]], ..RnOptions::new(2, 4.0, 1e-9, 50_000_000) };
        let nested = integrate_rn_with(&f, 2, &opts).unwrap().value;
        assert!((ax / nested - 1.0).abs() < 1e-7, "{ax} {nested}");
    }

    #[test]
    fn leading_terms_at_coincidence() {
        let p = make_params(2, 0.25).unwrap();
        let a = Bubble::unit(2);
        match interaction_asymptotic(&a, &a, &p, Order::GradA).unwrap().leading {
            Leading::Vector(v) => assert!(v.iter().all(|x| *x == 0.0)),
            _ => unreachable!(),
        }
        match interaction_asymptotic(&a, &a, &p, Order::DLambda { wrt_i: false }).unwrap().leading {
            Leading::Scalar(v) => assert_eq!(v, 0.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn exact_derivatives_match_differences() {
        let p = make_params(2, 0.25).unwrap();
        let cases = [
            (Bubble::new(vec![1.5, 0.5], 2.0).unwrap(), Bubble::new(vec![0.0, 0.0], 0.7).unwrap()),
            (Bubble::new(vec![0.0, 0.0], 3.0).unwrap(), Bubble::unit(2)),
        ];
        for (a, b) in &cases {
            for order in [Order::DLambda { wrt_i: true }, Order::DLambda { wrt_i: false }, Order::GradA, Order::HessA] {
                let exact = interaction_quantity(a, b, &p, order, 1e-12).unwrap();
                let diff = differenced_quantity(a, b, &p, order, 1e-12).unwrap();
                // Second differences carry quadrature noise of order tol / h^2.
                let scale = exact.magnitude().abs().max(1e-3);
                let rel = if order == Order::HessA { 1e-5 } else { 1e-6 };
                assert!(exact.max_diff(&diff) < rel * scale, "{order:?}: {exact:?} {diff:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        let p = make_params(2, 0.25).unwrap();
        let a = Bubble::unit(2);
        let q = 2.0 * 2.0 / 1.5;
        assert!(higher_interaction_oracle(&a, &a, q, 0.0, &p, 1e-8).is_err());
    }
}
