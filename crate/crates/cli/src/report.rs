//! Named checks and the JSON/CSV/text renderings of a verification run.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// How `observed` is compared against `expected` and `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `|observed / expected - 1| <= tol`.
    Rel,
    /// `|observed - expected| <= tol`.
    Abs,
    /// `observed <= tol`.
    AtMost,
    /// `observed > tol`.
    Above,
    /// `observed == expected`, both booleans.
    Flag,
    /// The computation itself failed.
    Error,
    /// Not applicable to these parameters.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub paper_ref: String,
    pub observed: Value,
    pub expected: Value,
    pub tol: Option<f64>,
    pub pass: bool,
    pub rule: Rule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

impl Check {
    fn base(id: &str, paper_ref: &str, rule: Rule, observed: Value, expected: Value, tol: Option<f64>) -> Self {
        let mut c = Check {
            id: id.to_string(),
            paper_ref: paper_ref.to_string(),
            observed,
            expected,
            tol,
            pass: false,
            rule,
            note: None,
        };
        c.pass = c.evaluate();
        c
    }

    pub fn rel(id: &str, paper_ref: &str, observed: f64, expected: f64, tol: f64) -> Self {
        Self::base(id, paper_ref, Rule::Rel, num(observed), num(expected), Some(tol))
    }

    pub fn abs(id: &str, paper_ref: &str, observed: f64, expected: f64, tol: f64) -> Self {
        Self::base(id, paper_ref, Rule::Abs, num(observed), num(expected), Some(tol))
    }

    pub fn at_most(id: &str, paper_ref: &str, observed: f64, tol: f64) -> Self {
        Self::base(id, paper_ref, Rule::AtMost, num(observed), Value::Null, Some(tol))
    }

    pub fn above(id: &str, paper_ref: &str, observed: f64, floor: f64) -> Self {
        Self::base(id, paper_ref, Rule::Above, num(observed), Value::Null, Some(floor))
    }

    pub fn flag(id: &str, paper_ref: &str, observed: bool) -> Self {
        Self::base(id, paper_ref, Rule::Flag, Value::Bool(observed), Value::Bool(true), None)
    }

    pub fn error(id: &str, paper_ref: &str, message: impl Into<String>) -> Self {
        Self::base(id, paper_ref, Rule::Error, Value::String(message.into()), Value::Null, None)
    }

    pub fn skipped(id: &str, paper_ref: &str, reason: &str) -> Self {
        let mut c = Self::base(id, paper_ref, Rule::Skipped, Value::String(format!("skipped: {reason}")), Value::Null, None);
        c.pass = true;
        c
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn evaluate(&self) -> bool {
        let o = self.observed.as_f64();
        let e = self.expected.as_f64();
        match (self.rule, self.tol) {
            (Rule::Rel, Some(t)) => matches!((o, e), (Some(o), Some(e)) if (o / e - 1.0).abs() <= t),
            (Rule::Abs, Some(t)) => matches!((o, e), (Some(o), Some(e)) if (o - e).abs() <= t),
            (Rule::AtMost, Some(t)) => matches!(o, Some(o) if o <= t),
            (Rule::Above, Some(t)) => matches!(o, Some(o) if o > t),
            (Rule::Flag, _) => self.observed == self.expected,
            (Rule::Skipped, _) => true,
            _ => false,
        }
    }

    /// Replaces the tolerance of a numeric check and re-judges it.
    pub fn override_tol(&mut self, tol: f64) {
        if matches!(self.rule, Rule::Rel | Rule::Abs | Rule::AtMost | Rule::Above) {
            self.tol = Some(tol);
            self.pass = self.evaluate();
        }
    }

    fn cell(v: &Value) -> String {
        match v {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }

    /// One human-readable line.
    pub fn line(&self) -> String {
        let verdict = match (self.rule, self.pass) {
            (Rule::Skipped, _) => "SKIP",
            (_, true) => "PASS",
            (_, false) => "FAIL",
        };
        let mut s = format!("{verdict} {} observed={}", self.id, Self::cell(&self.observed));
        if !self.expected.is_null() {
            s.push_str(&format!(" expected={}", Self::cell(&self.expected)));
        }
        if let Some(t) = self.tol {
            s.push_str(&format!(" tol={t:e}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub n: usize,
    pub gamma: f64,
    pub version: &'static str,
}

impl Meta {
    pub fn new(n: usize, gamma: f64) -> Self {
        Self { n, gamma, version: env!("CARGO_PKG_VERSION") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub meta: Meta,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn apply_overrides(&mut self, overrides: &BTreeMap<String, f64>) {
        for c in &mut self.checks {
            if let Some(&t) = overrides.get(&c.id) {
                c.override_tol(t);
            }
        }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    n: usize,
    gamma: f64,
    id: &'a str,
    paper_ref: &'a str,
    observed: String,
    expected: String,
    tol: Option<f64>,
    pass: bool,
}

/// Reports as CSV, one row per check.
pub fn write_reports_csv(reports: &[Report], out: impl Write) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in reports {
        for c in &r.checks {
            w.serialize(CsvRow {
                n: r.meta.n,
                gamma: r.meta.gamma,
                id: &c.id,
                paper_ref: &c.paper_ref,
                observed: Check::cell(&c.observed),
                expected: Check::cell(&c.expected),
                tol: c.tol,
                pass: c.pass,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A single report as an object, several as an array.
pub fn write_reports_json(reports: &[Report], mut out: impl Write) -> Result<(), CliError> {
    if let [one] = reports {
        serde_json::to_writer_pretty(&mut out, one)?;
    } else {
        serde_json::to_writer_pretty(&mut out, reports)?;
    }
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_judge_as_documented() {
        assert!(Check::rel("a", "", 1.0005, 1.0, 1e-3).pass);
        assert!(!Check::rel("a", "", 1.01, 1.0, 1e-3).pass);
        assert!(Check::abs("a", "", 1e-7, 0.0, 1e-6).pass);
        assert!(Check::at_most("a", "", 2.0, 3.0).pass);
        assert!(!Check::above("a", "", 0.0, 0.0).pass);
        assert!(!Check::flag("a", "", false).pass);
        assert!(!Check::error("a", "", "boom").pass);
        assert!(Check::skipped("a", "", "near_half").pass);
        assert!(!Check::rel("a", "", f64::NAN, 1.0, 1.0).pass);
    }

    #[test]
    fn override_rejudges() {
        let mut c = Check::at_most("a", "", 2.0, 1.0);
        assert!(!c.pass);
        c.override_tol(2.5);
        assert!(c.pass && c.tol == Some(2.5));
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let r = Report { meta: Meta::new(2, 0.25), checks: vec![Check::at_most("x.y", "ref", 0.5, 1.0)] };
        let mut buf = Vec::new();
        write_reports_csv(&[r], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("n,gamma,id,paper_ref,observed,expected,tol,pass\n"), "{s}");
        assert!(!s.contains('\r'));
        assert!(s.contains("2,0.25,x.y,ref,0.5,,1.0,true\n"), "{s}");
    }
}
