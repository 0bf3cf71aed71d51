//! The verification suites. Each suite is a list of independent groups run in
//! parallel; checks are emitted in declaration order.

use fracbubble_core::bubbles::{c_frac_oracle, pv_vs_spectral};
use fracbubble_core::constants::closed_form;
use fracbubble_core::energy::{barycenter_sweep, quadratic_form, yamabe_quotient, BubbleSum, Route};
use fracbubble_core::extension::estimates::{ROUGH_LAMBDAS, SHARP_LAMBDAS};
use fracbubble_core::extension::{
    check_rough_estimates, check_sharp_estimates, compare_grid_to_convolution, poisson_mass, rough_samples, sharp_samples, GridSpec,
};
use fracbubble_core::fit::{band_ratio, loglog_slope};
use fracbubble_core::interactions::{
    appendix_identities, differenced_quantity, duality_check, higher_sweep, interaction_oracle, interaction_quantity, interaction_sweep,
    unbalanced_exponents, Order, Regime,
};
use fracbubble_core::quadrature::PvOptions;
use fracbubble_core::spectral::{
    all_dharmonics, eigen_residual, find_half_degeneracy, halton_hemisphere, solvability_sweep, Condition, MAX_DEGREE,
};
use fracbubble_core::{constant_set, Bubble, FracParams, Result};
use rayon::prelude::*;

use crate::config::Suite;
use crate::report::{Check, Meta, Report};

/// Points and decades of the interaction sweeps.
pub const SWEEP_POINTS: usize = 5;
pub const SWEEP_DECADES: f64 = 1.0;
/// Allowed relative error of fitted exponents.
pub const EXPONENT_TOL: f64 = 0.15;
/// `max / min` a ratio may span over a sweep and still count as bounded.
pub const BOUNDED_BAND: f64 = 10.0;
/// Band of the balanced higher interaction.
pub const BALANCED_BAND: f64 = 3.0;
pub const UNBALANCED_TOL: f64 = 0.10;
pub const BARYCENTER_SEPS: [f64; 3] = [4.0, 8.0, 16.0];
pub const PAIR_COUNT_TOL: f64 = 0.30;
pub const DUALITY_PAIRS: usize = 20;
pub const DUALITY_SEED: u64 = 7;
pub const SOLVABILITY_BOUND: u32 = 50;
pub const EIGEN_POINTS: usize = 100;

type Group<'a> = Box<dyn Fn() -> Result<Vec<Check>> + Send + Sync + 'a>;

struct Plan<'a> {
    groups: Vec<(&'static str, &'static str, Group<'a>)>,
}

impl<'a> Plan<'a> {
    fn new() -> Self {
        Self { groups: Vec::new() }
    }

    fn add(&mut self, id: &'static str, paper_ref: &'static str, g: impl Fn() -> Result<Vec<Check>> + Send + Sync + 'a) {
        self.groups.push((id, paper_ref, Box::new(g)));
    }

    fn run(self) -> Vec<Check> {
        self.groups
            .par_iter()
            .map(|(id, r, g)| g().unwrap_or_else(|e| vec![Check::error(id, r, e.to_string())]))
            .collect::<Vec<_>>()
            .concat()
    }
}

/// Runs `suite` for one parameter pair.
pub fn run_suite(suite: Suite, params: &FracParams, budget: usize) -> Report {
    let mut plan = Plan::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Bubbles {
        bubbles(&mut plan, params, budget);
    }
    if all || suite == Suite::Extension {
        extension(&mut plan, params, budget);
    }
    if all || suite == Suite::Interactions {
        interactions(&mut plan, params);
    }
    if all || suite == Suite::Spectral {
        spectral(&mut plan, params);
    }
    if all || suite == Suite::Energy {
        energy(&mut plan, params, budget);
    }
    Report { meta: Meta::new(params.n(), params.gamma()), checks: plan.run() }
}

const NEAR_HALF: &str = "near_half";

fn bubbles<'a>(plan: &mut Plan<'a>, p: &'a FracParams, budget: usize) {
    plan.add("bubbles.pde.ratio_spread", "bubble equation (-Lap)^g d = c d^p", move || {
        let r = c_frac_oracle(p, &PvOptions::default())?;
        Ok(vec![Check::at_most("bubbles.pde.ratio_spread", "bubble equation (-Lap)^g d = c d^p", r.max_rel_dev, 1e-3)])
    });
    plan.add("bubbles.pde.pv_vs_spectral", "bubble equation, two routes", move || {
        let r = pv_vs_spectral(p, &PvOptions::default())?;
        Ok(vec![Check::at_most("bubbles.pde.pv_vs_spectral", "bubble equation, two routes", r.max_rel, 1e-3)])
    });
    plan.add("constants", "constant identities", move || Ok(crate::constant_checks(&constant_set(p, budget)?)));
}

fn extension<'a>(plan: &mut Plan<'a>, p: &'a FracParams, budget: usize) {
    plan.add("extension.poisson.mass", "Poisson kernel K = p y^2g / (|x-xi|^2+y^2)^((n+2g)/2)", move || {
        let c3 = constant_set(p, budget)?.c3;
        [0.1, 1.0, 10.0]
            .iter()
            .map(|&y| {
                let m = poisson_mass(y, p, 1.0 / c3, 1e-12)?;
                Ok(Check::abs(&format!("extension.poisson.mass.y={y}"), "int K(y, x, .) = 1", m, 1.0, 1e-6))
            })
            .collect()
    });
    plan.add("extension.grid_vs_convolution", "convolution extension vs grid solve of div(y^(1-2g) grad u) = 0", move || {
        let r = "convolution extension vs grid solve of div(y^(1-2g) grad u) = 0";
        if p.n() != 2 {
            return Ok(vec![
                Check::skipped("extension.grid_vs_convolution.max_rel", r, "grid comparison is run for n = 2"),
                Check::skipped("extension.grid_vs_convolution.two_grid_gap", r, "grid comparison is run for n = 2"),
            ]);
        }
        let g = compare_grid_to_convolution(p, 1.0, GridSpec::default_for(1.0))?;
        Ok(vec![
            Check::at_most("extension.grid_vs_convolution.max_rel", r, g.max_rel, 1e-2),
            Check::at_most("extension.grid_vs_convolution.two_grid_gap", r, g.two_grid_gap, 0.05),
        ])
    });
    plan.add("extension.trace.d_star_spread", "-d* lim y^(1-2g) d_y U = c d^p", move || {
        let r = "-d* lim y^(1-2g) d_y U = c d^p";
        Ok(vec![match constant_set(p, budget)?.d_star_spread {
            Some(s) => Check::at_most("extension.trace.d_star_spread", r, s, 1e-2),
            None => Check::skipped("extension.trace.d_star_spread", r, NEAR_HALF),
        }])
    });
    plan.add("extension.sharp", "sharp estimates U = l^(-(n-2g)/2) r^-(n-2g) + o(.)", move || {
        let c = vec![0.0; p.n()];
        let rep = check_sharp_estimates(&c, &SHARP_LAMBDAS, &sharp_samples(&c), p)?;
        let names = ["value", "y_derivative", "x_gradient"];
        Ok(names
            .iter()
            .zip(rep.decreasing)
            .map(|(k, d)| Check::flag(&format!("extension.sharp.{k}.decreasing"), "sharp estimates, deviation decays in lambda", d))
            .collect())
    });
    plan.add("extension.rough", "rough estimates for U, d_y U, grad_x U, grad_x^2 U", move || {
        let c = vec![0.0; p.n()];
        let samples = rough_samples(&c);
        let mut per_bound = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for &l in &ROUGH_LAMBDAS {
            let rep = check_rough_estimates(&Bubble::new(c.clone(), l)?, &samples, p)?;
            for k in 0..4 {
                per_bound[k].push(rep.max_ratio[k]);
            }
        }
        let names = ["value", "y_derivative", "x_gradient", "x_hessian"];
        Ok(names
            .iter()
            .zip(&per_bound)
            .map(|(k, v)| {
                Check::at_most(&format!("extension.rough.{k}.lambda_band"), "rough estimates, uniform in lambda", band_ratio(v), BOUNDED_BAND)
            })
            .collect())
    });
}

fn interactions<'a>(plan: &mut Plan<'a>, p: &'a FracParams) {
    let orders = [Order::Value, Order::DLambda { wrt_i: true }, Order::GradA, Order::HessA];
    for regime in [Regime::LambdaRatio, Regime::Separation] {
        for order in orders {
            plan.add("interactions.sweep", "interaction estimates, error order", move || {
                let fit = interaction_sweep(regime, order, p, SWEEP_POINTS, SWEEP_DECADES)?;
                let base = format!("interactions.{}.{}", regime.tag(), order.tag());
                Ok(vec![
                    Check::rel(&format!("{base}.exponent"), "interaction estimates, error order", fit.fitted_exponent, fit.predicted_exponent, EXPONENT_TOL),
                    Check::at_most(&format!("{base}.gap_ratio_band"), "interaction estimates, bounded constant", fit.gap_ratio_band, BOUNDED_BAND),
                ])
            });
        }
    }
    plan.add("interactions.coincident", "int d^(p+1) = c1", move || {
        let b = Bubble::unit(p.n());
        let v = interaction_oracle(&b, &b, p, 1e-12)?.value;
        Ok(vec![Check::rel("interactions.coincident.value", "int d^(p+1) = c1", v, closed_form::c1(p), 1e-8)])
    });
    plan.add("interactions.derivatives", "exact vs differenced derivatives", move || {
        let mut ci = vec![0.0; p.n()];
        ci[0] = 1.5;
        let bi = Bubble::new(ci, 2.0)?;
        let bj = Bubble::new(vec![0.0; p.n()], 0.7)?;
        [Order::DLambda { wrt_i: true }, Order::DLambda { wrt_i: false }, Order::GradA, Order::HessA]
            .iter()
            .map(|&o| {
                let exact = interaction_quantity(&bi, &bj, p, o, 1e-12)?;
                let diff = differenced_quantity(&bi, &bj, p, o, 1e-12)?;
                let rel = exact.max_diff(&diff) / exact.magnitude().abs().max(1e-3);
                Ok(Check::at_most(&format!("interactions.derivatives.{}.vs_differences", o.tag()), "exact vs differenced derivatives", rel, 1e-5))
            })
            .collect()
    });
    plan.add("interactions.higher", "higher interactions int d_i^a d_j^b", move || {
        let half = p.nf() / (p.nf() - 2.0 * p.gamma());
        let (a, b) = unbalanced_exponents(p);
        let rows = higher_sweep(a, b, p, SWEEP_POINTS, SWEEP_DECADES, 1e-10)?;
        let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        let v: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let unbalanced = Check::rel(
            "interactions.higher.unbalanced.exponent",
            "int d_i^a d_j^b = O(eps^b), a > n/(n-2g) > b",
            loglog_slope(&eps, &v),
            b,
            UNBALANCED_TOL,
        )
        .with_note(format!("alpha = {a}, beta = {b}"));
        let rows = higher_sweep(half, half, p, SWEEP_POINTS, SWEEP_DECADES, 1e-10)?;
        let scaled: Vec<f64> = rows.iter().map(|r| r.value / (r.eps.powf(half) * r.eps.ln().abs())).collect();
        let balanced = Check::at_most(
            "interactions.higher.balanced.band",
            "int d_i^a d_j^a = O(eps^(n/(n-2g)) ln eps)",
            band_ratio(&scaled),
            BALANCED_BAND,
        );
        Ok(vec![unbalanced, balanced])
    });
    plan.add("interactions.appendix", "auxiliary identities", move || {
        let r = appendix_identities(p, 1e-10)?;
        Ok(vec![
            Check::abs("interactions.appendix.zero_identity", "int (1+r^2-(n+2-2g)x_k^2)/(1+r^2)^((n+4-2g)/2) = 0", r.zero_identity.value, 0.0, 1e-6),
            Check::rel("interactions.appendix.b2_identity", "b2 identity", r.b2_lhs, r.b2_rhs, 1e-6),
            Check::flag("interactions.appendix.eps_dichotomy", "eps dichotomy, max of the two terms >= half their sum", r.dichotomy_holds)
                .with_note(format!("{} random pairs", r.dichotomy_pairs)),
        ])
    });
    plan.add("interactions.duality", "int d_i^p d_j = int d_i d_j^p", move || {
        let d = duality_check(p, DUALITY_PAIRS, 1e-10, DUALITY_SEED)?;
        Ok(vec![Check::flag("interactions.duality", "int d_i^p d_j = int d_i d_j^p", d.holds)
            .with_note(format!("{} pairs, worst gap {:e}, allowed {:e}", d.pairs, d.worst_gap, d.worst_allowed))])
    });
}

fn spectral<'a>(plan: &mut Plan<'a>, p: &'a FracParams) {
    plan.add("spectral.dharmonics", "D-harmonics sum y^(2l) P_(m-2l)", move || {
        let hs = all_dharmonics(p, MAX_DEGREE)?;
        let nonzero = hs.iter().filter(|h| !h.residual().is_zero()).count();
        let pts = halton_hemisphere(p.n(), EIGEN_POINTS);
        let worst = hs.iter().map(|h| eigen_residual(h, p, &pts)).fold(0.0, f64::max);
        Ok(vec![
            Check::abs("spectral.dharmonic.symbolic_residual", "D applied to each D-harmonic is zero", nonzero as f64, 0.0, 0.0)
                .with_note(format!("{} harmonics up to degree {MAX_DEGREE}", hs.len())),
            Check::at_most("spectral.eigenvalue_law", "eigenvalues k(k+n-2g) on the half-sphere", worst, 1e-8),
        ])
    });
    plan.add("spectral.solvability", "solvability conditions", move || {
        Ok([(Condition::Dirichlet, "dirichlet", "(m'+2g)(m'+n) - (m-n+1)(m+1-2g) != 0"), (Condition::Neumann, "neumann", "m'(m'+n-2g) - (m-n+1+2g)(m+1) != 0")]
            .iter()
            .map(|(c, k, r)| {
                let s = solvability_sweep(*c, p, SOLVABILITY_BOUND);
                Check::above(&format!("spectral.solvability.{k}.min_abs"), r, s.min_abs, 0.0)
                    .with_note(format!("m', m <= {SOLVABILITY_BOUND}, minimum at {:?}", s.at))
            })
            .collect())
    });
    plan.add("spectral.half_degeneracy", "degeneracy at g = 1/2", move || {
        let n = p.n();
        let dir = find_half_degeneracy(Condition::Dirichlet, n, SOLVABILITY_BOUND)?;
        let neu = find_half_degeneracy(Condition::Neumann, n, SOLVABILITY_BOUND)?;
        let r = "solvability conditions vanish at g = 1/2";
        Ok(if n == 2 {
            let diag = (0..=SOLVABILITY_BOUND).all(|m| neu.contains(&(m, m)));
            vec![
                Check::flag("spectral.half_degeneracy.dirichlet.contains_1_3", r, dir.contains(&(1, 3))),
                Check::flag("spectral.half_degeneracy.neumann.full_diagonal", r, diag),
            ]
        } else {
            vec![
                Check::flag("spectral.half_degeneracy.dirichlet.found", r, !dir.is_empty()).with_note(format!("{} zeros", dir.len())),
                Check::flag("spectral.half_degeneracy.neumann.found", r, !neu.is_empty()).with_note(format!("{} zeros", neu.len())),
            ]
        })
    });
}

fn energy<'a>(plan: &mut Plan<'a>, p: &'a FracParams, budget: usize) {
    plan.add("energy.single", "Y(S^n) = c2 / c1^((n-2g)/n)", move || {
        let r = "Y(S^n) = c2 / c1^((n-2g)/n)";
        let Some(sphere) = constant_set(p, budget)?.yamabe_sphere else {
            return Ok(vec![Check::skipped("energy.single.quotient", r, NEAR_HALF)]);
        };
        let u = BubbleSum::single(Bubble::unit(p.n()), *p)?;
        Ok(vec![Check::rel("energy.single.quotient", r, yamabe_quotient(&u)?.quotient, sphere, 1e-3)])
    });
    plan.add("energy.routes", "quadratic form, spectral vs extension", move || {
        let r = "quadratic form, spectral vs extension";
        if p.near_half() {
            return Ok(vec![Check::skipped("energy.routes.single", r, NEAR_HALF), Check::skipped("energy.routes.pair", r, NEAR_HALF)]);
        }
        let single = BubbleSum::single(Bubble::unit(p.n()), *p)?;
        let mut c = vec![0.0; p.n()];
        c[0] = 2.0;
        let pair = BubbleSum::new(vec![(1.0, Bubble::unit(p.n())), (0.5, Bubble::new(c, 2.0)?)], *p)?;
        let q = |u: &BubbleSum| -> Result<(f64, f64)> { Ok((quadratic_form(u, Route::Spectral)?, quadratic_form(u, Route::Extension)?)) };
        let (s1, e1) = q(&single)?;
        let (s2, e2) = q(&pair)?;
        let scaled = yamabe_quotient(&pair.scaled(3.0)?)?.quotient;
        let base = yamabe_quotient(&pair)?.quotient;
        Ok(vec![
            Check::rel("energy.routes.single", r, s1, e1, 1e-3),
            Check::rel("energy.routes.pair", r, s2, e2, 1e-2),
            Check::rel("energy.scale_invariance", "quotient invariant under u -> t u", scaled, base, 1e-12),
        ])
    });
    plan.add("energy.barycenter", "multi-bubble energy below p^(2g/n) Y(S^n)", move || {
        let r = "multi-bubble energy below p^(2g/n) Y(S^n), deficit ~ sum eps";
        if p.near_half() {
            return Ok(vec![Check::skipped("energy.barycenter", r, NEAR_HALF)]);
        }
        let (two, three) = rayon::join(|| barycenter_sweep(2, &BARYCENTER_SEPS, 1.0, p), || barycenter_sweep(3, &BARYCENTER_SEPS, 1.0, p));
        let (two, three) = (two?, three?);
        let mut out = Vec::new();
        for rows in [&two, &three] {
            let k = rows[0].p;
            let min = rows.iter().map(|r| r.deficit).fold(f64::INFINITY, f64::min);
            let per: Vec<f64> = rows.iter().map(|r| r.deficit_per_eps).collect();
            out.push(Check::above(&format!("energy.barycenter.p{k}.min_deficit"), r, min, 0.0));
            out.push(Check::at_most(&format!("energy.barycenter.p{k}.deficit_per_eps_band"), r, band_ratio(&per), BOUNDED_BAND));
        }
        let (d2, d3) = (two.last().map_or(f64::NAN, |r| r.deficit), three.last().map_or(f64::NAN, |r| r.deficit));
        out.push(
            Check::rel("energy.barycenter.pair_count_scaling", "deficit(p=3) / deficit(p=2) = 3 pairs / 1 pair", d3 / d2, 3.0, PAIR_COUNT_TOL)
                .with_note(format!("separation {}", BARYCENTER_SEPS[BARYCENTER_SEPS.len() - 1])),
        );
        Ok(out)
    });
}
