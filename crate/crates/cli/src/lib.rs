//! Batch front-end: verification suites, sweeps and exports.

pub mod config;
pub mod error;
pub mod report;
pub mod suites;
pub mod sweeps;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::Parser;
use fracbubble_core::constants::closed_form;
use fracbubble_core::quadrature::set_default_budget;
use fracbubble_core::{constant_set, ConstantSet};
use serde_json::{json, Value};

use config::{Cli, Command, Format, RunConfig, BUDGET_ENV};
use error::CliError;
use report::{write_reports_csv, write_reports_json, Check, Meta, Report};

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let env = std::env::var(BUDGET_ENV).ok();
    match dispatch(cli.command, env.as_deref()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn dispatch(cmd: Command, env_budget: Option<&str>) -> Result<i32, CliError> {
    const DEFAULT: Option<(usize, f64)> = Some((2, 0.25));
    match cmd {
        Command::Constants(common) => {
            let cfg = RunConfig::resolve(&common, DEFAULT, Format::Json, env_budget)?;
            set_default_budget(cfg.budget);
            let p = cfg.single();
            let set = constant_set(&p, cfg.budget)?;
            let mut report = Report { meta: Meta::new(p.n(), p.gamma()), checks: constant_checks(&set) };
            report.apply_overrides(&cfg.overrides);
            for c in report.checks.iter().filter(|c| !c.pass) {
                eprintln!("relation failed: {}", c.line());
            }
            let mut w = sink(cfg.out.as_deref())?;
            match cfg.format {
                Format::Json => {
                    let v = json!({ "meta": report.meta, "constants": constant_values(&set), "checks": report.checks });
                    sweeps::write_json(&v, &mut w)?;
                }
                Format::Csv => {
                    let rows: Vec<(String, String)> = constant_values(&set)
                        .into_iter()
                        .map(|(k, v)| (k.to_string(), v.as_str().map_or_else(|| v.to_string(), str::to_string)))
                        .collect();
                    let mut cw = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut w);
                    cw.write_record(["name", "value"])?;
                    for (k, v) in rows {
                        cw.write_record([k, v])?;
                    }
                    cw.flush()?;
                }
            }
            w.flush()?;
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Verify { suite, common } => {
            let cfg = RunConfig::resolve(&common, None, Format::Json, env_budget)?;
            set_default_budget(cfg.budget);
            let mut reports = Vec::new();
            for p in &cfg.params {
                let mut r = suites::run_suite(suite, p, cfg.budget);
                r.apply_overrides(&cfg.overrides);
                for c in &r.checks {
                    eprintln!("[n={} gamma={}] {}", p.n(), p.gamma(), c.line());
                }
                reports.push(r);
            }
            let mut w = sink(cfg.out.as_deref())?;
            match cfg.format {
                Format::Json => write_reports_json(&reports, &mut w)?,
                Format::Csv => write_reports_csv(&reports, &mut w)?,
            }
            w.flush()?;
            Ok(if reports.iter().all(Report::passed) { 0 } else { 1 })
        }
        Command::Sweep { kind, ratios, seps, p, lambda, order, common } => {
            let cfg = RunConfig::resolve(&common, DEFAULT, Format::Csv, env_budget)?;
            set_default_budget(cfg.budget);
            let params = cfg.single();
            let mut w = sink(cfg.out.as_deref())?;
            macro_rules! emit {
                ($rows:expr) => {{
                    let rows = $rows;
                    match cfg.format {
                        Format::Csv => sweeps::write_csv(&rows, &mut w)?,
                        Format::Json => sweeps::write_json(&rows, &mut w)?,
                    }
                }};
            }
            match kind {
                config::SweepKind::Interaction => emit!(sweeps::interaction_rows(&params, order.into(), &ratios, &seps)?),
                config::SweepKind::Barycenter => {
                    let seps = if seps.is_empty() { suites::BARYCENTER_SEPS.to_vec() } else { seps };
                    let lambda = match lambda.as_slice() {
                        [] => 1.0,
                        [l] => *l,
                        _ => return Err(CliError::Config("barycenter sweeps take a single --lambda".into())),
                    };
                    emit!(sweeps::barycenter_rows(&params, p, &seps, lambda)?)
                }
                config::SweepKind::Sharp => emit!(sweeps::sharp_rows(&params, &lambda)?),
            }
            w.flush()?;
            Ok(0)
        }
        Command::Field { lambda, common } => {
            let cfg = RunConfig::resolve(&common, DEFAULT, Format::Csv, env_budget)?;
            set_default_budget(cfg.budget);
            let out = cfg.out.clone().ok_or_else(|| CliError::Config("field export needs --out <file.csv>".into()))?;
            let field = sweeps::solved_field(&cfg.single(), lambda)?;
            let side = sweeps::sidecar_path(&out);
            let mut csv_w = BufWriter::new(File::create(&out)?);
            let mut json_w = BufWriter::new(File::create(&side)?);
            sweeps::write_field(&field, lambda, &mut csv_w, &mut json_w)?;
            csv_w.flush()?;
            json_w.flush()?;
            Ok(0)
        }
        Command::Degeneracies { condition, bound, common } => {
            let n = common.n.unwrap_or(2);
            if common.gamma.is_some() {
                return Err(CliError::Config("degeneracies are searched at gamma = 1/2; --gamma is not accepted".into()));
            }
            let d = sweeps::degeneracies(condition, n, bound)?;
            let mut w = sink(common.out.as_deref())?;
            sweeps::write_json(&d, &mut w)?;
            w.flush()?;
            Ok(0)
        }
    }
}

/// Closed-form cross-checks and the oracle relations of a constant set.
pub fn constant_checks(set: &ConstantSet) -> Vec<Check> {
    let p = &set.params;
    let mut out = vec![
        Check::rel("constants.c1.closed_form", "c1 = int (1+|x|^2)^-n", set.c1, closed_form::c1(p), 1e-6),
        Check::rel("constants.c3.closed_form", "c3 = int (1+|x|^2)^-(n+2g)/2", set.c3, closed_form::c3(p), 1e-6),
    ];
    let ids = [("constants.relation.c2", "c2 = c_frac c1"), ("constants.relation.yamabe", "Y(S^n) = c2 / c1^((n-2g)/n)")];
    if set.relations.is_empty() {
        out.extend(ids.iter().map(|(id, r)| Check::skipped(id, r, "near_half")));
    }
    for ((id, r), rel) in ids.iter().zip(&set.relations) {
        out.push(Check::rel(id, r, rel.lhs, rel.rhs, rel.tol).with_note(rel.name));
    }
    out
}

/// Every entry of the set; absent entries are reported as skipped.
pub fn constant_values(set: &ConstantSet) -> BTreeMap<&'static str, Value> {
    let skip = || Value::String("skipped: near_half".into());
    let opt = |v: Option<f64>| v.map_or_else(skip, |x| json!(x));
    BTreeMap::from([
        ("c1", json!(set.c1)),
        ("c2", opt(set.c2)),
        ("c3", json!(set.c3)),
        ("c4", opt(set.c4)),
        ("c_frac", opt(set.c_frac)),
        ("c_frac_spread", opt(set.c_frac_spread)),
        ("d_star", opt(set.d_star)),
        ("d_star_spread", opt(set.d_star_spread)),
        ("d_gamma", opt(set.d_gamma)),
        ("p_poisson", json!(set.p_poisson)),
        ("g_green", opt(set.g_green)),
        ("c_star", opt(set.c_star)),
        ("yamabe_sphere", opt(set.yamabe_sphere)),
    ])
}
