//! Command-line surface. Unknown flags are rejected by clap.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracbubble_core::quadrature::DEFAULT_BUDGET;
use fracbubble_core::{make_params, FracParams};

use crate::error::CliError;

/// Environment variable overriding every evaluation budget.
pub const BUDGET_ENV: &str = "FRACBUBBLE_BUDGET";

/// `(n, gamma)` pairs of `verify` when neither is given.
pub const DEFAULT_MATRIX: [(usize, f64); 4] = [(2, 0.25), (2, 0.75), (3, 0.25), (3, 0.75)];

#[derive(Debug, Parser)]
#[command(name = "fracbubble", version, about = "Verification suites and sweeps for fractional bubbles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the constant set and its cross-relations.
    Constants(Common),
    /// Run named verification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// Emit a sweep table.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepKind,
        /// Scale ratios `l_i / l_j` (interaction sweeps, coincident centres).
        #[arg(long, value_delimiter = ',')]
        ratios: Vec<f64>,
        /// Separations (interaction sweeps with unit scales, barycenter sweeps).
        #[arg(long, value_delimiter = ',')]
        seps: Vec<f64>,
        /// Number of bubbles of a barycenter sweep.
        #[arg(long, default_value_t = 2)]
        p: usize,
        /// Bubble scales (sharp sweeps) or the common scale (barycenter sweeps).
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        /// Compared quantity of interaction sweeps.
        #[arg(long, value_enum, default_value_t = OrderArg::Value)]
        order: OrderArg,
        #[command(flatten)]
        common: Common,
    },
    /// Export the grid-solved extension of a bubble with a JSON sidecar.
    Field {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        common: Common,
    },
    /// List the integer zeros of a solvability condition at gamma = 1/2.
    Degeneracies {
        #[arg(long, value_enum)]
        condition: ConditionArg,
        #[arg(long, default_value_t = 50)]
        bound: u32,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Evaluation budget; takes precedence over the environment.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Tolerance override for one check, `ID=VALUE`; repeatable.
    #[arg(long = "tol", value_parser = parse_override)]
    pub tol: Vec<(String, f64)>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Bubbles,
    Extension,
    Interactions,
    Spectral,
    Energy,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Interaction,
    Barycenter,
    Sharp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Value,
    DlambdaI,
    DlambdaJ,
    GradA,
    HessA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    Dirichlet,
    Neumann,
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (id, v) = s.split_once('=').ok_or_else(|| format!("expected ID=VALUE, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|_| format!("tolerance `{v}` is not a number"))?;
    if !(v >= 0.0) {
        return Err(format!("tolerance must be non-negative, got {v}"));
    }
    Ok((id.to_string(), v))
}

/// Validated settings shared by every command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Empty only for `verify` without `--n/--gamma`, which runs the matrix.
    pub params: Vec<FracParams>,
    pub budget: usize,
    pub overrides: BTreeMap<String, f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// `default` is used when neither `--n` nor `--gamma` is given; `None`
    /// there means the default matrix.
    pub fn resolve(common: &Common, default: Option<(usize, f64)>, format: Format, env_budget: Option<&str>) -> Result<Self, CliError> {
        let pairs: Vec<(usize, f64)> = match (common.n, common.gamma) {
            (Some(n), Some(g)) => vec![(n, g)],
            (None, None) => match default {
                Some(d) => vec![d],
                None => DEFAULT_MATRIX.to_vec(),
            },
            _ => return Err(CliError::Config("--n and --gamma must be given together".into())),
        };
        let params = pairs.into_iter().map(|(n, g)| make_params(n, g)).collect::<Result<Vec<_>, _>>()?;
        let budget = match (common.budget, env_budget) {
            (Some(b), _) => b,
            (None, Some(s)) => s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{BUDGET_ENV} must be a positive integer, got `{s}`")))?,
            (None, None) => DEFAULT_BUDGET,
        };
        if budget == 0 {
            return Err(CliError::Config("budget must be positive".into()));
        }
        Ok(Self {
            params,
            budget,
            overrides: common.tol.iter().cloned().collect(),
            format: common.format.unwrap_or(format),
            out: common.out.clone(),
        })
    }

    pub fn single(&self) -> FracParams {
        self.params[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn common(n: Option<usize>, gamma: Option<f64>) -> Common {
        Common { n, gamma, budget: None, tol: vec![], format: None, out: None }
    }

    #[test]
    fn matrix_when_unspecified() {
        let c = RunConfig::resolve(&common(None, None), None, Format::Json, None).unwrap();
        assert_eq!(c.params.len(), 4);
    }

    #[test]
    fn half_pair_is_a_config_error() {
        let e = RunConfig::resolve(&common(Some(2), None), None, Format::Json, None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn invalid_params_exit_two() {
        let e = RunConfig::resolve(&common(Some(1), Some(0.5)), None, Format::Json, None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn budget_precedence() {
        let mut c = common(None, None);
        assert_eq!(RunConfig::resolve(&c, Some((2, 0.25)), Format::Json, Some("123")).unwrap().budget, 123);
        c.budget = Some(7);
        assert_eq!(RunConfig::resolve(&c, Some((2, 0.25)), Format::Json, Some("123")).unwrap().budget, 7);
        assert!(RunConfig::resolve(&common(None, None), None, Format::Json, Some("x")).is_err());
    }

    #[test]
    fn override_parser() {
        assert_eq!(parse_override("a.b=0.5").unwrap(), ("a.b".to_string(), 0.5));
        assert!(parse_override("a.b").is_err());
        assert!(parse_override("a=-1").is_err());
    }
}
