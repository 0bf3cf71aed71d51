//! Brute-force integration oracles: adaptive quadrature over R^n (n <= 3),
//! weighted integrals over the upper half-space, and the two routes to the
//! fractional Laplacian.

pub mod gk;
pub mod maps;
pub mod fft;
pub mod fraclap;

use std::cell::Cell;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::params::FracParams;
use gk::{integrate_vec, GkConfig};
use maps::{normalize_cuts, LineMap, TailMap};

pub use fft::{frac_laplacian_spectral, spectral_point_values, PeriodicGrid, SpectralEstimate, SpectralField};
pub use fraclap::{frac_laplacian_pv, PvOptions, ScalarField};

/// Default evaluation budget for a single oracle integral.
pub const DEFAULT_BUDGET: usize = 10_000_000;

static BUDGET: AtomicUsize = AtomicUsize::new(DEFAULT_BUDGET);

/// Evaluation budget for operations that take none explicitly.
pub fn default_budget() -> usize {
    BUDGET.load(Ordering::Relaxed)
}

/// Process-wide override of [`default_budget`].
pub fn set_default_budget(budget: usize) {
    BUDGET.store(budget.max(1), Ordering::Relaxed);
}

/// Value, enforced error estimate and evaluation count of an oracle integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub err_estimate: f64,
    pub n_evals: usize,
    pub budget_exhausted: bool,
}

impl QuadResult {
    /// Fails if refinement stopped on the budget rather than the tolerance.
    pub fn require(self, what: &str, budget: usize) -> Result<Self> {
        if self.budget_exhausted {
            Err(Error::BudgetExhausted { what: what.to_string(), budget, err: self.err_estimate })
        } else {
            Ok(self)
        }
    }
}

/// Integration domains in natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    FullSpace { n: usize },
    /// `[0, y_max] x [-r_max, r_max]^n`.
    HalfSpaceBox { y_max: f64, r_max: f64, n: usize },
    RadialLine { r_max: f64 },
}

/// Surface area of the unit sphere in R^n, i.e. `|S^(n-1)|`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h)
}

/// Shared evaluation counter for nested runs.
struct Budget {
    total: usize,
    used: Cell<usize>,
    exhausted: Cell<bool>,
}

impl Budget {
    fn new(total: usize) -> Self {
        Self { total, used: Cell::new(0), exhausted: Cell::new(false) }
    }

    fn remaining(&self) -> usize {
        self.total.saturating_sub(self.used.get())
    }

    fn charge(&self, n: usize, converged: bool) {
        self.used.set(self.used.get() + n);
        if !converged {
            self.exhausted.set(true);
        }
    }
}

/// Tolerances shared by the full-space drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct RnOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub budget: usize,
    /// Decay exponent `q` of the integrand, `|f| <= C (1+|x|)^-q`.
    pub decay: f64,
    /// Length scale of the compactifying maps.
    pub scale: f64,
    /// Origin of the compactifying map on each axis.
    pub origin: Vec<f64>,
    /// Extra breakpoints per axis.
    pub cuts: Vec<Vec<f64>>,
    /// Peaks `(centre, width)` of the integrand. When present, inner axes
    /// centre their map on the peak nearest the outer coordinates.
    pub anchors: Vec<(Vec<f64>, f64)>,
}

impl RnOptions {
    pub fn new(n: usize, decay: f64, rel_tol: f64, budget: usize) -> Self {
        Self {
            rel_tol,
            abs_tol: 0.0,
            budget,
            decay,
            scale: 1.0,
            origin: vec![0.0; n],
            cuts: vec![Vec::new(); n],
            anchors: Vec::new(),
        }
    }

    pub fn abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

fn check_decay(n: usize, q: f64) -> Result<()> {
    if !(q > n as f64) {
        return Err(Error::NonIntegrableDecay { n, q });
    }
    Ok(())
}

/// Integral over R^n (n <= 3) by dimension-recursive adaptive quadrature,
/// with every axis compactified.
pub fn integrate_rn(f: &dyn Fn(&[f64]) -> f64, params: &FracParams, decay: f64, tol: f64, budget: usize) -> Result<QuadResult> {
    let n = params.n();
    integrate_rn_with(f, n, &RnOptions::new(n, decay, tol, budget))
}

pub fn integrate_rn_with(f: &dyn Fn(&[f64]) -> f64, n: usize, opts: &RnOptions) -> Result<QuadResult> {
    if n > 3 {
        return Err(Error::DimensionTooLarge(n));
    }
    check_decay(n, opts.decay)?;
    let budget = Budget::new(opts.budget);
    let cfg = GkConfig::new(opts.abs_tol, opts.rel_tol, opts.budget);
    let (value, err) = nested(f, n, 0, [0.0; 3], opts, &cfg, &budget);
    Ok(QuadResult {
        value,
        err_estimate: err,
        n_evals: budget.used.get(),
        budget_exhausted: budget.exhausted.get(),
    })
}

fn nested(
    f: &dyn Fn(&[f64]) -> f64,
    n: usize,
    level: usize,
    prefix: [f64; 3],
    opts: &RnOptions,
    cfg: &GkConfig,
    budget: &Budget,
) -> (f64, f64) {
    let inner_dims = n - level - 1;
    // Far from the origin the inner integrand spreads over a width comparable
    // to the outer distance, so the map scale follows it. The rational map
    // (kappa = 1) keeps algebraic tails smooth in the mapped variable; the
    // decay-matched map leaves fractional endpoint powers that GK resolves slowly.
    let outer = |c: &[f64]| (0..level).map(|k| prefix[k] - c[k]).fold(0.0_f64, f64::hypot);
    let nearest = (level > 0)
        .then(|| opts.anchors.iter().map(|(c, w)| (c[level], w.hypot(outer(c)))).min_by(|a, b| a.1.total_cmp(&b.1)))
        .flatten();
    let (origin, scale) = nearest.unwrap_or((opts.origin[level], opts.scale.hypot(outer(&opts.origin))));
    let map = LineMap::new(origin, scale, 2.0);
    let cuts = map.cuts(&opts.cuts[level]);
    let run_cfg = GkConfig { max_evals: budget.remaining(), ..*cfg };
    let r = integrate_vec(
        |u, out: &mut [f64]| {
            let (xi, jac) = map.forward(u);
            let mut x = prefix;
            x[level] = xi;
            if inner_dims == 0 {
                out[0] = if jac == 0.0 { 0.0 } else { f(&x[..n]) * jac };
                out[1] = 0.0;
            } else if jac == 0.0 {
                out[0] = 0.0;
                out[1] = 0.0;
            } else {
                let (v, e) = nested(f, n, level + 1, x, opts, &cfg.inner(0), budget);
                out[0] = v * jac;
                out[1] = e * jac;
            }
        },
        2,
        1,
        &cuts,
        &run_cfg,
    );
    budget.charge(if inner_dims == 0 { r.n_evals } else { 0 }, r.converged);
    (r.values[0], r.errors[0] + r.values[1].abs())
}

/// Integral of a radial function over R^n: `|S^(n-1)| int_0^inf r^(n-1) f(r) dr`.
pub fn integrate_radial(
    f: impl Fn(f64) -> f64,
    n: usize,
    decay: f64,
    scale: f64,
    breaks: &[f64],
    rel_tol: f64,
    budget: usize,
) -> Result<QuadResult> {
    check_decay(n, decay)?;
    let map = TailMap::new(0.0, scale, decay - (n as f64 - 1.0));
    let mut cuts = vec![0.0, 1.0];
    cuts.extend(breaks.iter().filter(|&&b| b > 0.0).map(|&b| map.inverse(b)));
    let cuts = normalize_cuts(cuts);
    let area = sphere_area(n);
    let cfg = GkConfig::new(0.0, rel_tol, budget);
    let r = integrate_vec(
        |u, out: &mut [f64]| {
            let (r, jac) = map.forward(u);
            out[0] = if jac == 0.0 { 0.0 } else { area * r.powi(n as i32 - 1) * f(r) * jac };
        },
        1,
        1,
        &cuts,
        &cfg,
    );
    Ok(QuadResult {
        value: r.values[0],
        err_estimate: r.errors[0],
        n_evals: r.n_evals,
        budget_exhausted: !r.converged,
    })
}

/// Options for integrands invariant under rotations about a fixed axis.
pub struct AxialOptions<'a> {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub budget: usize,
    pub decay: f64,
    /// Breakpoints along the axis (typically the bubble centres).
    pub s_cuts: Vec<f64>,
    /// Map origin along the axis.
    pub s_origin: f64,
    pub s_scale: f64,
    /// Radial length scale as a function of the axial coordinate.
    pub t_scale: &'a dyn Fn(f64) -> f64,
}

/// Integral over R^n of `f(s, t)`, where `s` is the coordinate along an axis
/// and `t >= 0` the distance from it: `int ds int |S^(n-2)| t^(n-2) f dt`.
pub fn integrate_axisymmetric(f: &dyn Fn(f64, f64) -> f64, n: usize, opts: &AxialOptions) -> Result<QuadResult> {
    if n > 3 {
        return Err(Error::DimensionTooLarge(n));
    }
    check_decay(n, opts.decay)?;
    let budget = Budget::new(opts.budget);
    let s_map = LineMap::new(opts.s_origin, opts.s_scale, opts.decay - (n as f64 - 1.0));
    let s_cuts = s_map.cuts(&opts.s_cuts);
    let cfg = GkConfig::new(opts.abs_tol, opts.rel_tol, opts.budget);
    if n == 1 {
        let r = integrate_vec(
            |u, out: &mut [f64]| {
                let (s, jac) = s_map.forward(u);
                out[0] = if jac == 0.0 { 0.0 } else { f(s, 0.0) * jac };
            },
            1,
            1,
            &s_cuts,
            &cfg,
        );
        return Ok(QuadResult {
            value: r.values[0],
            err_estimate: r.errors[0],
            n_evals: r.n_evals,
            budget_exhausted: !r.converged,
        });
    }
    let area = sphere_area(n - 1);
    let t_decay = opts.decay - (n as f64 - 2.0);
    let inner_cfg = cfg.inner(0);
    let outer = integrate_vec(
        |u, out: &mut [f64]| {
            let (s, jac) = s_map.forward(u);
            if jac == 0.0 {
                out[0] = 0.0;
                out[1] = 0.0;
                return;
            }
            let t_map = TailMap::new(0.0, (opts.t_scale)(s), t_decay);
            let icfg = GkConfig { max_evals: budget.remaining(), ..inner_cfg };
            let r = integrate_vec(
                |v, o: &mut [f64]| {
                    let (t, tj) = t_map.forward(v);
                    o[0] = if tj == 0.0 { 0.0 } else { t.powi(n as i32 - 2) * f(s, t) * tj };
                },
                1,
                1,
                &[0.0, 0.5, 1.0],
                &icfg,
            );
            budget.charge(r.n_evals, r.converged);
            out[0] = area * r.values[0] * jac;
            out[1] = area * r.errors[0] * jac;
        },
        2,
        1,
        &s_cuts,
        &cfg,
    );
    Ok(QuadResult {
        value: outer.values[0],
        err_estimate: outer.errors[0] + outer.values[1].abs(),
        n_evals: budget.used.get(),
        budget_exhausted: budget.exhausted.get() || !outer.converged,
    })
}

/// Graded coordinate for the weighted `y`-integration: `y = u^beta` with
/// `beta = 1/(2 - 2 gamma + s)`, so that `y^(1-2gamma) y^s dy` becomes a
/// constant multiple of `du`.
#[derive(Debug, Clone, Copy)]
struct Graded {
    beta: f64,
}

impl Graded {
    fn new(params: &FracParams, s_decl: f64) -> Result<Self> {
        let g = params.gamma();
        if !(s_decl > 2.0 * g - 2.0) {
            return Err(Error::NonIntegrableBoundary { s: s_decl });
        }
        Ok(Self { beta: 1.0 / (2.0 - 2.0 * g + s_decl) })
    }

    /// `y` and `y^(1-2gamma) dy/du`.
    #[inline]
    fn forward(&self, u: f64, g: f64) -> (f64, f64) {
        let y = u.powf(self.beta);
        let w = y.powf(1.0 - 2.0 * g) * self.beta * y / u;
        (y, w)
    }
}

/// Weighted integral `int y^(1-2gamma) f(y, x) dy dx` over a half-space box
/// (`Domain::HalfSpaceBox`), `f = O(y^s_decl)` at the boundary.
pub fn integrate_halfspace_weighted(
    f: &dyn Fn(f64, &[f64]) -> f64,
    params: &FracParams,
    domain: Domain,
    s_decl: f64,
    tol: f64,
    budget: usize,
) -> Result<QuadResult> {
    let Domain::HalfSpaceBox { y_max, r_max, n } = domain else {
        return Err(Error::InvalidArgument("half-space integral needs a HalfSpaceBox domain".into()));
    };
    if n > 2 {
        return Err(Error::DimensionTooLarge(n + 1));
    }
    if !(y_max > 0.0 && r_max > 0.0) {
        return Err(Error::InvalidArgument("box extents must be positive".into()));
    }
    let grade = Graded::new(params, s_decl)?;
    let g = params.gamma();
    let u_max = y_max.powf(1.0 / grade.beta);
    let budget_cell = Budget::new(budget);
    let cfg = GkConfig::new(0.0, tol, budget);
    let icfg = cfg.inner(0);
    // Inner integrals over [-R, R]^n, nested over the coordinates.
    let box_integral = |y: f64| -> (f64, f64) {
        box_nested(&|x: &[f64]| f(y, x), n, 0, [0.0; 3], r_max, &icfg, &budget_cell)
    };
    let r = integrate_vec(
        |u, out: &mut [f64]| {
            let (y, w) = grade.forward(u, g);
            if n == 0 {
                out[0] = w * f(y, &[]);
                out[1] = 0.0;
            } else {
                let (v, e) = box_integral(y);
                out[0] = w * v;
                out[1] = w * e;
            }
        },
        2,
        1,
        &[0.0, 0.5 * u_max, u_max],
        &cfg,
    );
    budget_cell.charge(r.n_evals, r.converged);
    Ok(QuadResult {
        value: r.values[0],
        err_estimate: r.errors[0] + r.values[1].abs(),
        n_evals: budget_cell.used.get(),
        budget_exhausted: budget_cell.exhausted.get(),
    })
}

fn box_nested(
    f: &dyn Fn(&[f64]) -> f64,
    n: usize,
    level: usize,
    prefix: [f64; 3],
    r_max: f64,
    cfg: &GkConfig,
    budget: &Budget,
) -> (f64, f64) {
    let run = GkConfig { max_evals: budget.remaining(), ..*cfg };
    let r = integrate_vec(
        |xi, out: &mut [f64]| {
            let mut x = prefix;
            x[level] = xi;
            if level + 1 == n {
                out[0] = f(&x[..n]);
                out[1] = 0.0;
            } else {
                let (v, e) = box_nested(f, n, level + 1, x, r_max, &cfg.inner(0), budget);
                out[0] = v;
                out[1] = e;
            }
        },
        2,
        1,
        &[-r_max, 0.0, r_max],
        &run,
    );
    budget.charge(if level + 1 == n { r.n_evals } else { 0 }, r.converged);
    (r.values[0], r.errors[0] + r.values[1].abs())
}

/// Weighted integral over the whole half-space of a function of `(y, r)`,
/// `r = |x|`, with measure `|S^(n-1)| r^(n-1) y^(1-2gamma) dr dy`.
///
/// `y` is graded on `[0, 1]` for the declared boundary behaviour `y^s_decl`
/// and inverted (`y = 1/v`) above 1; `r` uses a tail map with decay
/// `r_decay` in `r` for fixed `y`, and the `y`-marginal must decay faster
/// than `y^(2 gamma - 2)`.
pub fn integrate_halfspace_radial(
    f: &dyn Fn(f64, f64) -> f64,
    params: &FracParams,
    s_decl: f64,
    r_decay: f64,
    r_scale: &dyn Fn(f64) -> f64,
    rel_tol: f64,
    budget: usize,
) -> Result<QuadResult> {
    let n = params.n();
    let g = params.gamma();
    check_decay(n, r_decay)?;
    let grade = Graded::new(params, s_decl)?;
    let area = sphere_area(n);
    let b = Budget::new(budget);
    let cfg = GkConfig::new(0.0, rel_tol, budget);
    let icfg = cfg.inner(0);
    let r_integral = |y: f64| -> (f64, f64) {
        let map = TailMap::new(0.0, r_scale(y), r_decay - (n as f64 - 1.0));
        let run = GkConfig { max_evals: b.remaining(), ..icfg };
        let r = integrate_vec(
            |v, o: &mut [f64]| {
                let (r, j) = map.forward(v);
                o[0] = if j == 0.0 { 0.0 } else { r.powi(n as i32 - 1) * f(y, r) * j };
            },
            1,
            1,
            &[0.0, 0.5, 1.0],
            &run,
        );
        b.charge(r.n_evals, r.converged);
        (area * r.values[0], area * r.errors[0])
    };
    // Parametrize y in [0,1] by u in [0,1] (graded) and y in [1,inf) by
    // v in (0,1], y = 1/v, concatenated as t in [0,2).
    let r = integrate_vec(
        |t, out: &mut [f64]| {
            let (y, w) = if t <= 1.0 {
                grade.forward(t, g)
            } else {
                let v = 2.0 - t;
                if v <= 0.0 {
                    out[0] = 0.0;
                    out[1] = 0.0;
                    return;
                }
                let y = 1.0 / v;
                (y, y.powf(1.0 - 2.0 * g) * y * y)
            };
            let (val, err) = r_integral(y);
            out[0] = w * val;
            out[1] = w * err;
        },
        2,
        1,
        &[0.0, 0.5, 1.0, 1.5, 2.0],
        &cfg,
    );
    b.charge(0, r.converged);
    Ok(QuadResult {
        value: r.values[0],
        err_estimate: r.errors[0] + r.values[1].abs(),
        n_evals: b.used.get() + r.n_evals,
        budget_exhausted: b.exhausted.get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;
    use std::f64::consts::PI;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn radial_closed_form() {
        // int_{R^2} (1+|x|^2)^-2 = pi
        let r = integrate_radial(|r| (1.0 + r * r).powi(-2), 2, 4.0, 1.0, &[], 1e-13, 100_000).unwrap();
        assert!((r.value - PI).abs() < 1e-11, "{}", r.value);
        assert!(!r.budget_exhausted);
    }

    #[test]
    fn nested_matches_radial() {
        let p = make_params(2, 0.25).unwrap();
        let f = |x: &[f64]| (1.0 + x[0] * x[0] + x[1] * x[1]).powi(-2);
        let r = integrate_rn(&f, &p, 4.0, 1e-10, 10_000_000).unwrap();
        assert!((r.value - PI).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let f = |x: &[f64]| x[0] * (1.0 + x[0] * x[0] + x[1] * x[1]).powi(-3);
        let opts = RnOptions::new(2, 5.0, 1e-10, 10_000_000).abs_tol(1e-12);
        let r = integrate_rn_with(&f, 2, &opts).unwrap();
        assert!(r.value.abs() < 1e-11, "{}", r.value);
    }

    #[test]
    fn non_integrable_decay_rejected() {
        let p = make_params(2, 0.25).unwrap();
        let f = |_: &[f64]| 1.0;
        assert!(matches!(integrate_rn(&f, &p, 2.0, 1e-6, 1000), Err(Error::NonIntegrableDecay { .. })));
    }

    #[test]
    fn axisymmetric_matches_radial() {
        for n in 1..=3 {
            let q = 2.0 * n as f64;
            let radial = integrate_radial(|r| (1.0 + r * r).powf(-(n as f64)), n, q, 1.0, &[], 1e-12, 1_000_000).unwrap();
            let width = |s: f64| s.hypot(1.0);
            let opts = AxialOptions {
                rel_tol: 1e-10,
                abs_tol: 0.0,
                budget: 10_000_000,
                decay: q,
                s_cuts: vec![0.0],
                s_origin: 0.0,
                s_scale: 1.0,
                t_scale: &width,
            };
            let ax = integrate_axisymmetric(&|s, t| (1.0 + s * s + t * t).powf(-(n as f64)), n, &opts).unwrap();
            assert!((ax.value / radial.value - 1.0).abs() < 1e-9 && !ax.budget_exhausted, "n={n}: {} {}", ax.value, radial.value);
        }
    }

    #[test]
    fn halfspace_box_constant() {
        let p = make_params(1, 0.25).unwrap();
        let d = Domain::HalfSpaceBox { y_max: 1.0, r_max: 0.5, n: 1 };
        let r = integrate_halfspace_weighted(&|_, _| 1.0, &p, d, 0.0, 1e-12, 1_000_000).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-11, "{}", r.value);
    }

    #[test]
    fn halfspace_rejects_bad_boundary() {
        let p = make_params(2, 0.25).unwrap();
        let d = Domain::HalfSpaceBox { y_max: 1.0, r_max: 1.0, n: 1 };
        let e = integrate_halfspace_weighted(&|_, _| 1.0, &p, d, -1.6, 1e-6, 1000);
        assert!(matches!(e, Err(Error::NonIntegrableBoundary { .. })));
    }

    #[test]
    fn halfspace_radial_product() {
        // int y^(1-2g) e^-y dy * int_{R^2} e^-r^2 = Gamma(2-2g) * pi
        let p = make_params(2, 0.25).unwrap();
        let one = |_: f64| 1.0;
        let r = integrate_halfspace_radial(&|y, r| (-y - r * r).exp(), &p, 0.0, 40.0, &one, 1e-10, 10_000_000).unwrap();
        let exact = statrs::function::gamma::gamma(1.5) * PI;
        assert!((r.value / exact - 1.0).abs() < 1e-8, "{} {}", r.value, exact);
    }
}
