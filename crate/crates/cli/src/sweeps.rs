//! Sweep tables and the field/degeneracy exports.

use std::io::Write;
use std::path::Path;

use fracbubble_core::energy::barycenter_sweep;
use fracbubble_core::extension::estimates::SHARP_LAMBDAS;
use fracbubble_core::extension::{check_sharp_estimates, compare_grid_to_convolution, sharp_samples, GridSpec, HalfSpaceField};
use fracbubble_core::interactions::{epsilon_ij, verify_interaction, Order, RATIO_OFFSET};
use fracbubble_core::spectral::{find_half_degeneracy, Condition};
use fracbubble_core::{Bubble, FracParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConditionArg, OrderArg};
use crate::error::CliError;
use crate::report::Meta;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionRow {
    pub lambda_i: f64,
    pub lambda_j: f64,
    pub sep: f64,
    pub eps: f64,
    pub oracle: f64,
    pub asymptotic: f64,
    pub gap: f64,
    pub gap_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarycenterCsvRow {
    pub p: usize,
    pub sep: f64,
    pub eps_sum: f64,
    pub quotient: f64,
    pub bound: f64,
    pub deficit: f64,
    pub deficit_per_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpCsvRow {
    pub lambda: f64,
    pub value_dev: f64,
    pub y_derivative_dev: f64,
    pub x_gradient_dev: f64,
}

pub const DEFAULT_RATIOS: [f64; 3] = [10.0, 30.0, 100.0];

impl From<OrderArg> for Order {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Value => Order::Value,
            OrderArg::DlambdaI => Order::DLambda { wrt_i: true },
            OrderArg::DlambdaJ => Order::DLambda { wrt_i: false },
            OrderArg::GradA => Order::GradA,
            OrderArg::HessA => Order::HessA,
        }
    }
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::Dirichlet => Condition::Dirichlet,
            ConditionArg::Neumann => Condition::Neumann,
        }
    }
}

/// One row per scale ratio (coincident centres, offset along `e_1` for the
/// gradient) followed by one row per separation (unit scales). With neither
/// given, the default ratios are used.
pub fn interaction_rows(params: &FracParams, order: Order, ratios: &[f64], seps: &[f64]) -> Result<Vec<InteractionRow>, CliError> {
    let n = params.n();
    let ratios: Vec<f64> = if ratios.is_empty() && seps.is_empty() { DEFAULT_RATIOS.to_vec() } else { ratios.to_vec() };
    let mut pairs = Vec::new();
    for &q in &ratios {
        let mut ci = vec![0.0; n];
        if order == Order::GradA {
            ci[0] = RATIO_OFFSET;
        }
        pairs.push((Bubble::new(ci, q)?, Bubble::unit(n)));
    }
    for &d in seps {
        if !(d > 0.0) {
            return Err(CliError::Config(format!("separations must be positive, got {d}")));
        }
        let mut ci = vec![0.0; n];
        ci[0] = d;
        pairs.push((Bubble::new(ci, 1.0)?, Bubble::unit(n)));
    }
    pairs
        .par_iter()
        .map(|(bi, bj)| {
            let r = verify_interaction(bi, bj, params, order)?;
            Ok(InteractionRow {
                lambda_i: bi.scale(),
                lambda_j: bj.scale(),
                sep: bi.distance2(bj.center()).sqrt(),
                eps: epsilon_ij(bi, bj, params),
                oracle: r.oracle_quantity.magnitude(),
                asymptotic: r.asymptotic,
                gap: r.observed_gap,
                gap_ratio: r.gap_ratio,
            })
        })
        .collect()
}

pub fn barycenter_rows(params: &FracParams, p: usize, seps: &[f64], lambda: f64) -> Result<Vec<BarycenterCsvRow>, CliError> {
    Ok(barycenter_sweep(p, seps, lambda, params)?
        .into_iter()
        .map(|r| BarycenterCsvRow {
            p: r.p,
            sep: r.sep,
            eps_sum: r.eps_sum,
            quotient: r.quotient,
            bound: r.bound,
            deficit: r.deficit,
            deficit_per_eps: r.deficit_per_eps,
        })
        .collect())
}

pub fn sharp_rows(params: &FracParams, lambdas: &[f64]) -> Result<Vec<SharpCsvRow>, CliError> {
    let lambdas = if lambdas.is_empty() { SHARP_LAMBDAS.to_vec() } else { lambdas.to_vec() };
    let c = vec![0.0; params.n()];
    let rep = check_sharp_estimates(&c, &lambdas, &sharp_samples(&c), params)?;
    Ok(rep
        .rows
        .iter()
        .map(|r| SharpCsvRow { lambda: r.lambda, value_dev: r.deviations[0], y_derivative_dev: r.deviations[1], x_gradient_dev: r.deviations[2] })
        .collect())
}

/// Rows as CSV with a header and LF line ends.
pub fn write_csv<T: Serialize>(rows: &[T], out: impl Write) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, mut out: impl Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct FieldRow {
    y: f64,
    r: f64,
    value: f64,
}

#[derive(Serialize)]
struct GridSidecar {
    y_max: f64,
    r_max: f64,
    y_cells: usize,
    r_cells: usize,
}

#[derive(Serialize)]
struct FieldSidecar {
    meta: Meta,
    lambda: f64,
    grid: Option<GridSidecar>,
    provenance: &'static str,
    solve_residual: Option<f64>,
}

/// Grid-solved extension of the bubble of scale `lambda`.
pub fn solved_field(params: &FracParams, lambda: f64) -> Result<HalfSpaceField, CliError> {
    if !(lambda > 0.0) {
        return Err(CliError::Config(format!("lambda must be positive, got {lambda}")));
    }
    Ok(compare_grid_to_convolution(params, lambda, GridSpec::default_for(lambda))?.field)
}

/// Writes `(y, r, value)` rows to `csv_out` and the sidecar to `json_out`.
pub fn write_field(field: &HalfSpaceField, lambda: f64, csv_out: impl Write, json_out: impl Write) -> Result<(), CliError> {
    let mut rows = Vec::with_capacity(field.values().len());
    for (j, &y) in field.ys().iter().enumerate() {
        for (i, &r) in field.rs().iter().enumerate() {
            rows.push(FieldRow { y, r, value: field.at(j, i) });
        }
    }
    write_csv(&rows, csv_out)?;
    let sidecar = FieldSidecar {
        meta: Meta::new(field.params.n(), field.params.gamma()),
        lambda,
        grid: field.spec.map(|s| GridSidecar { y_max: s.y_max, r_max: s.r_max, y_cells: s.y_cells, r_cells: s.r_cells }),
        provenance: field.provenance.as_str(),
        solve_residual: field.solve_residual,
    };
    write_json(&sidecar, json_out)
}

/// Path of the sidecar next to a field CSV.
pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("json")
}

#[derive(Debug, Serialize)]
pub struct Degeneracies {
    pub condition: &'static str,
    pub n: usize,
    pub bound: u32,
    pub zeros: Vec<(u32, u32)>,
}

pub fn degeneracies(condition: ConditionArg, n: usize, bound: u32) -> Result<Degeneracies, CliError> {
    if bound > 1000 {
        return Err(CliError::Config(format!("search bound {bound} exceeds 1000")));
    }
    let zeros = find_half_degeneracy(condition.into(), n, bound)?;
    let condition = match condition {
        ConditionArg::Dirichlet => "dirichlet",
        ConditionArg::Neumann => "neumann",
    };
    Ok(Degeneracies { condition, n, bound, zeros })
}
