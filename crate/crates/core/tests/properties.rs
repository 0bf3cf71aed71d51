//! Structural invariants over random parameters and bubble configurations.

use fracbubble_core::bubbles::{eval_bubble, unit_profile};
use fracbubble_core::constants::{closed_form, trace_constants};
use fracbubble_core::energy::{yamabe_quotient_with, BubbleSum, Route};
use fracbubble_core::interactions::{epsilon_ij, interaction_oracle, interaction_oracle_dual};
use fracbubble_core::spectral::all_dharmonics;
use fracbubble_core::{make_params, Bubble, FracParams};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = FracParams> {
    (2usize..=3, prop_oneof![0.05..0.45, 0.55..0.95]).prop_map(|(n, g)| make_params(n, g).unwrap())
}

fn bubble(n: usize) -> impl Strategy<Value = Bubble> {
    (prop::collection::vec(-3.0..3.0, n), 0.2f64..5.0).prop_map(|(c, l)| Bubble::new(c, l).unwrap())
}

fn with_pair() -> impl Strategy<Value = (FracParams, Bubble, Bubble)> {
    params().prop_flat_map(|p| (Just(p), bubble(p.n()), bubble(p.n())))
}

/// Image of a bubble under `x -> t R x + b`, `R` a rotation in the (0, 1) plane.
fn moved(b: &Bubble, t: f64, theta: f64, shift: &[f64]) -> Bubble {
    let mut c = b.center().to_vec();
    let (s, co) = theta.sin_cos();
    let (x0, x1) = (c[0], c[1]);
    c[0] = co * x0 - s * x1;
    c[1] = s * x0 + co * x1;
    let c = c.iter().zip(shift).map(|(x, d)| t * x + d).collect();
    Bubble::new(c, b.scale() / t).unwrap()
}

proptest! {
    #[test]
    fn eps_is_symmetric((p, bi, bj) in with_pair()) {
        let (a, b) = (epsilon_ij(&bi, &bj, &p), epsilon_ij(&bj, &bi, &p));
        prop_assert!((a / b - 1.0).abs() < 1e-13);
        prop_assert!(a > 0.0 && a <= 2f64.powf(-p.bubble_power()) * (1.0 + 1e-13));
    }

    #[test]
    fn eps_is_conformally_invariant(
        (p, bi, bj) in with_pair(),
        t in 0.1f64..10.0,
        theta in 0.0f64..std::f64::consts::TAU,
        shift in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let before = epsilon_ij(&bi, &bj, &p);
        let after = epsilon_ij(&moved(&bi, t, theta, &shift), &moved(&bj, t, theta, &shift), &p);
        prop_assert!((after / before - 1.0).abs() < 1e-10, "{before} vs {after}");
    }

    #[test]
    fn bubble_is_a_rescaled_unit_profile((p, b) in params().prop_flat_map(|p| (Just(p), bubble(p.n()))), x in prop::collection::vec(-4.0f64..4.0, 3)) {
        let x = &x[..p.n()];
        let l = b.scale();
        let expected = l.powf(p.bubble_power()) * unit_profile(l * l * b.distance2(x), &p);
        prop_assert!((eval_bubble(&b, x, &p) / expected - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn interaction_duality((p, bi, bj) in with_pair()) {
        let a = interaction_oracle(&bi, &bj, &p, 1e-9).unwrap();
        let b = interaction_oracle_dual(&bi, &bj, &p, 1e-9).unwrap();
        let allowed = 10.0 * (a.err_estimate + b.err_estimate) + 1e-9 * a.value.abs();
        prop_assert!((a.value - b.value).abs() <= allowed, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn interaction_is_dilation_invariant((p, bi, bj) in with_pair(), t in 0.25f64..4.0) {
        let zero = [0.0; 3];
        let a = interaction_oracle(&bi, &bj, &p, 1e-9).unwrap().value;
        let b = interaction_oracle(&moved(&bi, t, 0.0, &zero), &moved(&bj, t, 0.0, &zero), &p, 1e-9).unwrap().value;
        prop_assert!((a / b - 1.0).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn quotient_is_scale_invariant((p, bi, bj) in with_pair(), w in 0.1f64..2.0, t in 0.1f64..10.0) {
        let u = BubbleSum::new(vec![(1.0, bi), (w, bj)], p).unwrap();
        let a = yamabe_quotient_with(&u, Route::Spectral).unwrap().quotient;
        let b = yamabe_quotient_with(&u.scaled(t).unwrap(), Route::Spectral).unwrap().quotient;
        prop_assert!((a / b - 1.0).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn dharmonics_have_zero_symbolic_residual(n in 2usize..=3, g in prop_oneof![0.05f64..0.45, 0.55..0.95]) {
        let p = make_params(n, g).unwrap();
        for h in all_dharmonics(&p, 4).unwrap() {
            prop_assert!(h.residual().is_zero());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn trace_constants_match_closed_forms(n in 2usize..=3, g in prop_oneof![0.05f64..0.45, 0.55..0.95]) {
        let p = make_params(n, g).unwrap();
        let t = trace_constants(&p, 10_000_000).unwrap();
        prop_assert!((t.c_frac / closed_form::c_frac(&p) - 1.0).abs() < 1e-6, "c_frac {}", t.c_frac);
        prop_assert!((t.d_star / closed_form::d_star(&p) - 1.0).abs() < 1e-2, "d* {}", t.d_star);
    }
}
