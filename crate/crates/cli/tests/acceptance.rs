//! Acceptance run: two `verify --suite all` passes over the default matrix,
//! every criterion re-judged here at its own tolerance. Prints one PASS/FAIL
//! line per criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};

use serde_json::Value;

const MATRIX: [(u64, f64); 4] = [(2, 0.25), (2, 0.75), (3, 0.25), (3, 0.75)];

struct Run {
    bytes: Vec<u8>,
    reports: Vec<Value>,
}

fn verify() -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_fracbubble"))
        .args(["verify", "--suite", "all", "--format", "json"])
        .output()
        .expect("spawn fracbubble");
    let code = out.status.code();
    assert!(matches!(code, Some(0 | 1)), "verify exited with {code:?}: {}", String::from_utf8_lossy(&out.stderr));
    let reports = match serde_json::from_slice(&out.stdout).expect("verify emits JSON") {
        Value::Array(a) => a,
        other => vec![other],
    };
    Run { bytes: out.stdout, reports }
}

/// Outcome of one criterion: failures are human-readable reasons.
#[derive(Default)]
struct Verdict {
    checked: usize,
    failures: Vec<String>,
}

impl Verdict {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

enum Want {
    Rel(f64),
    Abs(f64),
    AtMost(f64),
    Positive,
    True,
}

fn f(v: &Value) -> Option<f64> {
    v.as_f64()
}

struct Matrix<'a>(&'a [Value]);

impl<'a> Matrix<'a> {
    fn report(&self, n: u64, g: f64) -> Option<&'a Value> {
        self.0.iter().find(|r| r["meta"]["n"].as_u64() == Some(n) && r["meta"]["gamma"].as_f64() == Some(g))
    }

    fn checks(&self, n: u64, g: f64) -> &'a [Value] {
        self.report(n, g).and_then(|r| r["checks"].as_array()).map_or(&[], Vec::as_slice)
    }

    /// Judges every check whose id matches `pred` at `(n, g)` against `want`;
    /// at least `min` such checks must exist.
    fn judge(&self, v: &mut Verdict, n: u64, g: f64, pred: impl Fn(&str) -> bool, min: usize, want: &Want) {
        let mut seen = 0;
        for c in self.checks(n, g).iter().filter(|c| c["id"].as_str().is_some_and(&pred)) {
            seen += 1;
            let id = c["id"].as_str().unwrap_or_default();
            let (o, e) = (&c["observed"], &c["expected"]);
            let ok = match want {
                Want::Rel(t) => matches!((f(o), f(e)), (Some(o), Some(e)) if (o / e - 1.0).abs() <= *t),
                Want::Abs(t) => matches!((f(o), f(e)), (Some(o), Some(e)) if (o - e).abs() <= *t),
                Want::AtMost(t) => matches!(f(o), Some(o) if o <= *t),
                Want::Positive => matches!(f(o), Some(o) if o > 0.0),
                Want::True => o == &Value::Bool(true),
            };
            v.require(ok, || format!("[n={n} gamma={g}] {id} observed={o} expected={e}"));
        }
        v.require(seen >= min, || format!("[n={n} gamma={g}] expected at least {min} checks matching, found {seen}"));
    }

    fn judge_id(&self, v: &mut Verdict, n: u64, g: f64, id: &str, want: &Want) {
        self.judge(v, n, g, |s| s == id, 1, want);
    }
}

fn bubble_pde(m: &Matrix) -> Verdict {
    let mut v = Verdict::default();
    for (n, g) in [(2, 0.25), (2, 0.75), (3, 0.25)] {
        m.judge_id(&mut v, n, g, "bubbles.pde.ratio_spread", &Want::AtMost(1e-3));
        m.judge_id(&mut v, n, g, "bubbles.pde.pv_vs_spectral", &Want::AtMost(1e-3));
    }
    v
}

fn constant_identities(m: &Matrix) -> Verdict {
    let mut v = Verdict::default();
    for (n, g) in MATRIX {
        m.judge_id(&mut v, n, g, "constants.relation.c2", &Want::Rel(1e-3));
        m.judge_id(&mut v, n, g, "constants.relation.yamabe", &Want::Rel(1e-3));
    }
    for g in [0.25, 0.75] {
        m.judge_id(&mut v, 2, g, "constants.c1.closed_form", &Want::Rel(1e-6));
        let c1 = m.checks(2, g).iter().find(|c| c["id"] == "constants.c1.closed_form").and_then(|c| f(&c["observed"]));
        v.require(c1.is_some_and(|c| (c / PI - 1.0).abs() <= 1e-6), || format!("[n=2 gamma={g}] c1 = {c1:?}, not pi"));
    }
    let c3 = m.checks(2, 0.25).iter().find(|c| c["id"] == "constants.c3.closed_form").and_then(|c| f(&c["observed"]));
    v.require(c3.is_some_and(|c| (c / (4.0 * PI) - 1.0).abs() <= 1e-6), || format!("[n=2 gamma=0.25] c3 = {c3:?}, not 4 pi"));
    v
}

fn poisson(m: &Matrix) -> Verdict {
    let mut v = Verdict::default();
    for (n, g) in MATRIX {
        m.judge(&mut v, n, g, |s| s.starts_with("extension.poisson.mass.y="), 3, &Want::Abs(1e-6));
    }
    m.judge_id(&mut v, 2, 0.25, "extension.grid_vs_convolution.max_rel", &Want::AtMost(1e-2));
    v
}

fn trace(m: &Matrix) -> Verdict {
    let mut v = Verdict::default();
    for (n, g) in MATRIX {
        m.judge_id(&mut v, n, g, "extension.trace.d_star_spread", &Want::AtMost(1e-2));
    }
    v
}

fn interaction_estimates(m: &Matrix) -> Verdict {
    let mut v = Verdict::default();
    for (n, g) in MATRIX {
        for regime in ["lambda_ratio", "separation"] {
            for order in ["value", "dlambda_i", "grad_a", "hess_a"] {
                let base = format!("interactions.{regime}.{order}");
                m.judge_id(&mut v, n, g, &format!("{base}.exponent"), &Want::Rel(0.15));
                m.judge_id(&mut v, n, g, &format!("{base}.gap_ratio_band"), &Want::AtMost(10.0));
            }
        }
    }
    v
}

fn sharp(m: &Matrix) -> Verdict {
    let mut v = Verdict::default();
    for (n, g) in MATRIX {
        m.judge(&mut v, n, g, |s| s.starts_with("extension.sharp.") && s.ends_with(".decreasing"), 3, &Want::True);
    }
    v
}

fn higher(m: &Matrix) -> Verdict {
    let mut v = Verdict::default();
    for (n, g) in MATRIX {
        m.judge_id(&mut v, n, g, "interactions.higher.balanced.band", &Want::AtMost(3.0));
        m.judge_id(&mut v, n, g, "interactions.higher.unbalanced.exponent", &Want::Rel(0.1));
    }
    v
}

fn appendix(m: &Matrix) -> Verdict {
    let mut v = Verdict::default();
    for (n, g) in MATRIX {
        m.judge_id(&mut v, n, g, "interactions.appendix.zero_identity", &Want::Abs(1e-6));
        m.judge_id(&mut v, n, g, "interactions.appendix.b2_identity", &Want::Rel(1e-6));
        m.judge_id(&mut v, n, g, "interactions.duality", &Want::True);
    }
    v
}

fn spectral(m: &Matrix) -> Verdict {
    let mut v = Verdict::default();
    for (n, g) in MATRIX {
        m.judge_id(&mut v, n, g, "spectral.dharmonic.symbolic_residual", &Want::Abs(0.0));
        m.judge_id(&mut v, n, g, "spectral.eigenvalue_law", &Want::AtMost(1e-8));
        m.judge(&mut v, n, g, |s| s.starts_with("spectral.solvability.") && s.ends_with(".min_abs"), 2, &Want::Positive);
        if n == 2 {
            m.judge_id(&mut v, n, g, "spectral.half_degeneracy.dirichlet.contains_1_3", &Want::True);
            m.judge_id(&mut v, n, g, "spectral.half_degeneracy.neumann.full_diagonal", &Want::True);
        }
    }
    v
}

fn energy(m: &Matrix) -> Verdict {
    let mut v = Verdict::default();
    for (n, g) in MATRIX {
        m.judge_id(&mut v, n, g, "energy.single.quotient", &Want::Rel(1e-3));
        for k in [2, 3] {
            m.judge_id(&mut v, n, g, &format!("energy.barycenter.p{k}.min_deficit"), &Want::Positive);
            m.judge_id(&mut v, n, g, &format!("energy.barycenter.p{k}.deficit_per_eps_band"), &Want::AtMost(10.0));
        }
        m.judge_id(&mut v, n, g, "energy.barycenter.pair_count_scaling", &Want::Rel(0.3));
    }
    v
}

fn main() -> ExitCode {
    let first = verify();
    let second = verify();
    let m = Matrix(&first.reports);
    let mut criteria: Vec<(&str, Verdict)> = vec![
        ("bubble equation ratio and oracle agreement", bubble_pde(&m)),
        ("constant identities and closed forms", constant_identities(&m)),
        ("Poisson kernel mass and grid vs convolution", poisson(&m)),
        ("trace constant consistency", trace(&m)),
        ("interaction estimate exponents and bounded gaps", interaction_estimates(&m)),
        ("sharp estimates decrease in lambda", sharp(&m)),
        ("higher interaction scaling", higher(&m)),
        ("auxiliary identities and duality", appendix(&m)),
        ("D-harmonics, eigenvalues, solvability, degeneracies", spectral(&m)),
        ("single-bubble quotient and multi-bubble deficits", energy(&m)),
    ];
    let mut det = Verdict::default();
    det.require(first.bytes == second.bytes, || "two verify runs differ".into());
    criteria.push(("byte-identical reports across runs", det));

    let mut all = true;
    for (i, (name, v)) in criteria.iter().enumerate() {
        let ok = v.failures.is_empty();
        all &= ok;
        println!("{} criterion {:>2}: {name} ({} checks)", if ok { "PASS" } else { "FAIL" }, i + 1, v.checked);
        for reason in &v.failures {
            println!("       {reason}");
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
