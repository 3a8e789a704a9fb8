//! The subcommands. Each writes one report to `out` and returns the verdict
//! that decides the exit code.

use std::io::Write;

use serde::Serialize;
use simplex_dynamics::algebra::ApproxElement;
use simplex_dynamics::oracle::map_iter;
use simplex_dynamics::predictor::{predict, DEFAULT_CESARO_HORIZON, DEFAULT_REGULAR_HORIZON};
use simplex_dynamics::profile::{
    empirical_limit_set, limit_set_with, match_sets, profile, DEFAULT_BURN_IN, DEFAULT_HORIZON, DEFAULT_MERGE_TOL,
    MATCH_TOL,
};
use simplex_dynamics::records::{
    AccumulationRecord, GroupRecord, LimitPointRecord, LimitReportRecord, PointRecord, ProfileRecord, ScalarRow,
};
use simplex_dynamics::series::{coeff_iter, DEFAULT_MAX_ITER, DEFAULT_TOL};
use simplex_dynamics::verify::{self, CheckOutcome, Status};
use simplex_dynamics::Error;

use crate::config::Experiment;
use crate::CliError;

/// Horizon escalations (x4 each) while empirical clusters are unstable.
const MAX_ESCALATIONS: usize = 3;
/// Scalar traces run this long unless a horizon is given.
const DEFAULT_SCALAR_HORIZON: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Profile,
    LimitSet,
    Predict,
    Iterate,
    Cesaro,
    Scalar { averaged: bool },
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

impl Command {
    pub fn default_format(self) -> Format {
        match self {
            Command::Iterate | Command::Scalar { .. } => Format::Csv,
            _ => Format::Json,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::LimitSet => "limit-set",
            Command::Predict => "predict",
            Command::Iterate => "iterate",
            Command::Cesaro => "cesaro",
            Command::Scalar { .. } => "scalar",
            Command::Verify => "verify",
        }
    }
}

/// Verdict of a command whose report was written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Inconclusive(String),
    Failed(String),
}

pub fn core_error(e: Error) -> CliError {
    match e {
        Error::Inconclusive(m) => CliError::Inconclusive(m),
        e @ Error::Internal(_) => CliError::Failed(e.to_string()),
        e => CliError::Invalid(e.to_string()),
    }
}

fn io_error(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(io_error)?;
    writeln!(out).map_err(io_error)
}

fn json_only(cmd: Command, format: Format) -> Result<(), CliError> {
    if format == Format::Csv {
        return Err(CliError::Invalid(format!("--format csv is not available for {}", cmd.name())));
    }
    Ok(())
}

pub fn run(cmd: Command, exp: &Experiment, format: Format, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match cmd {
        Command::Profile => {
            json_only(cmd, format)?;
            cmd_profile(exp, out)
        }
        Command::LimitSet => {
            json_only(cmd, format)?;
            cmd_limit_set(exp, out)
        }
        Command::Predict => {
            json_only(cmd, format)?;
            cmd_predict(exp, out)
        }
        Command::Iterate => cmd_iterate(exp, format, out),
        Command::Cesaro => cmd_cesaro(exp, format, out),
        Command::Scalar { averaged } => cmd_scalar(exp, averaged, format, out),
        Command::Verify => cmd_verify(exp, format, out),
    }
}

#[derive(Serialize)]
struct ProfileReport {
    group: GroupRecord,
    input: PointRecord,
    profile: ProfileRecord,
}

fn cmd_profile(exp: &Experiment, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let x = exp.element()?;
    let prof = profile(x).map_err(core_error)?;
    write_json(
        out,
        &ProfileReport {
            group: GroupRecord::from(exp.group.as_ref()),
            input: PointRecord::from(x),
            profile: ProfileRecord::from(&prof),
        },
    )?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct LimitSetReport {
    group: GroupRecord,
    input: PointRecord,
    profile: ProfileRecord,
    closed_form: AccumulationRecord,
    empirical: Option<AccumulationRecord>,
    matched: Option<bool>,
    /// Largest matched distance; absent when some point has no partner.
    max_distance: Option<f64>,
    status: Status,
    detail: String,
}

fn cmd_limit_set(exp: &Experiment, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let x = exp.element()?;
    let prof = profile(x).map_err(core_error)?;
    let closed = limit_set_with(x, &prof).map_err(core_error)?;
    let mut horizon = exp.params.horizon.unwrap_or(DEFAULT_HORIZON);
    let mut burn_in = exp.params.burn_in.unwrap_or(DEFAULT_BURN_IN.min(horizon / 3));
    let mut empirical = None;
    let mut last_error = String::new();
    for _ in 0..=MAX_ESCALATIONS {
        match empirical_limit_set(x, burn_in, horizon, DEFAULT_MERGE_TOL) {
            Ok(set) => {
                empirical = Some(set);
                break;
            }
            Err(Error::Inconclusive(m)) => {
                last_error = m;
                burn_in *= 4;
                horizon *= 4;
            }
            Err(e) => return Err(core_error(e)),
        }
    }
    let comparison = empirical
        .as_ref()
        .map(|emp| match_sets(&closed.approx_points(), &emp.approx_points(), MATCH_TOL));
    let (status, detail) = match &comparison {
        None => (Status::Inconclusive, last_error),
        Some(m) if m.matched => (Status::Pass, format!("{} points matched within {MATCH_TOL:e}", m.cardinality.0)),
        Some(m) => (
            Status::Fail,
            format!(
                "limit set mismatch: {} closed-form vs {} empirical points, max distance {:.3e}",
                m.cardinality.0, m.cardinality.1, m.max_distance
            ),
        ),
    };
    write_json(
        out,
        &LimitSetReport {
            group: GroupRecord::from(exp.group.as_ref()),
            input: PointRecord::from(x),
            profile: ProfileRecord::from(&prof),
            closed_form: AccumulationRecord::from(&closed),
            empirical: empirical.as_ref().map(AccumulationRecord::from),
            matched: comparison.as_ref().map(|m| m.matched),
            max_distance: comparison.as_ref().map(|m| m.max_distance).filter(|d| d.is_finite()),
            status,
            detail: detail.clone(),
        },
    )?;
    Ok(match status {
        Status::Pass => Outcome::Done,
        Status::Inconclusive => Outcome::Inconclusive(detail),
        Status::Fail => Outcome::Failed(detail),
    })
}

fn tol_and_budget(exp: &Experiment) -> (f64, usize) {
    (
        exp.params.tol.unwrap_or(DEFAULT_TOL),
        exp.params.max_iter.unwrap_or(DEFAULT_MAX_ITER),
    )
}

fn cmd_predict(exp: &Experiment, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let (x, p) = (exp.element()?, exp.series()?);
    let (tol, max_iter) = tol_and_budget(exp);
    let report = predict(p, x, tol, max_iter).map_err(core_error)?;
    write_json(out, &LimitReportRecord::from(&report))?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct TraceRow {
    step: usize,
    coeffs: Vec<f64>,
    /// Sup distance to the previous step, or to the predicted point for
    /// averaged traces.
    distance: f64,
}

fn write_trace(
    exp: &Experiment,
    format: Format,
    distance_column: &str,
    rows: impl Iterator<Item = TraceRow>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header = vec!["step".to_string()];
            header.extend(exp.group.labels().iter().cloned());
            header.push(distance_column.to_string());
            w.write_record(&header).map_err(io_error)?;
            for row in rows {
                let mut record = vec![row.step.to_string()];
                record.extend(row.coeffs.iter().map(f64::to_string));
                record.push(row.distance.to_string());
                w.write_record(&record).map_err(io_error)?;
            }
            w.flush().map_err(io_error)
        }
        Format::Json => {
            let rows: Vec<TraceRow> = rows.collect();
            write_json(out, &rows)
        }
    }
}

fn cmd_iterate(exp: &Experiment, format: Format, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let (x, p) = (exp.element()?, exp.series()?);
    let horizon = exp.params.horizon.unwrap_or(DEFAULT_REGULAR_HORIZON);
    let mut prev = x.to_approx();
    let rows = map_iter(p, x).take(horizon).enumerate().map(move |(i, y)| {
        let distance = y.sup_distance(&prev).expect("same group");
        prev = y.clone();
        TraceRow {
            step: i + 1,
            coeffs: y.coeffs().to_vec(),
            distance,
        }
    });
    write_trace(exp, format, "sup_delta", rows, out)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct CesaroReport {
    group: GroupRecord,
    input: PointRecord,
    series: std::collections::BTreeMap<String, String>,
    cesaro: LimitPointRecord,
    horizon: usize,
    running_average: PointRecord,
    distance: f64,
}

fn cmd_cesaro(exp: &Experiment, format: Format, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let (x, p) = (exp.element()?, exp.series()?);
    let (tol, max_iter) = tol_and_budget(exp);
    let horizon = exp.params.horizon.unwrap_or(DEFAULT_CESARO_HORIZON);
    let report = predict(p, x, tol, max_iter).map_err(core_error)?;
    let target = report.cesaro.to_approx();
    let mut sums = vec![0.0; exp.group.order()];
    let mut averages = map_iter(p, x).take(horizon).enumerate().map(|(i, y)| {
        sums.iter_mut().zip(y.coeffs()).for_each(|(s, c)| *s += c);
        let n = i + 1;
        let coeffs: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
        let distance = coeffs.iter().zip(target.coeffs()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        TraceRow { step: n, coeffs, distance }
    });
    match format {
        Format::Csv => write_trace(exp, format, "distance_to_prediction", averages, out)?,
        Format::Json => {
            let last = averages.by_ref().last();
            let (coeffs, distance) = match last {
                Some(row) => (row.coeffs, row.distance),
                None => (vec![0.0; exp.group.order()], f64::NAN),
            };
            let avg = ApproxElement::with_measured_slack(&exp.group, coeffs);
            write_json(
                out,
                &CesaroReport {
                    group: GroupRecord::from(exp.group.as_ref()),
                    input: PointRecord::from(x),
                    series: simplex_dynamics::records::series_map(p),
                    cesaro: LimitPointRecord::from(&report.cesaro),
                    horizon,
                    running_average: PointRecord::from(&avg),
                    distance,
                },
            )?;
        }
    }
    Ok(Outcome::Done)
}

fn cmd_scalar(exp: &Experiment, averaged: bool, format: Format, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let p = exp.series()?;
    let horizon = exp.params.horizon.unwrap_or(DEFAULT_SCALAR_HORIZON);
    let truncation = exp.params.truncation.unwrap_or_else(|| p.default_truncation());
    let states = coeff_iter::<f64>(p, truncation).map_err(core_error)?.take(horizon);
    let mut sums = vec![0.0; truncation + 1];
    let mut tail = 0.0;
    let rows = states.map(|s| {
        if !averaged {
            return ScalarRow::from(&s);
        }
        sums.iter_mut().zip(&s.coeffs).for_each(|(a, c)| *a += c);
        tail += s.tail_mass;
        let n = s.n as f64;
        ScalarRow {
            n: s.n,
            a0: sums[0] / n,
            sup_positive: sums[1..].iter().fold(0.0f64, |m, v| m.max(*v)) / n,
            tail_mass: tail / n,
        }
    });
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row).map_err(io_error)?;
            }
            w.flush().map_err(io_error)?;
        }
        Format::Json => write_json(out, &rows.collect::<Vec<_>>())?,
    }
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct VerifyReport {
    status: Status,
    checks: Vec<CheckOutcome>,
}

fn cmd_verify(exp: &Experiment, format: Format, out: &mut dyn Write) -> Result<Outcome, CliError> {
    if exp.element.is_none() && exp.series.is_none() {
        return Err(CliError::Invalid("config: verify needs an element, a series or both".into()));
    }
    let mut checks = Vec::new();
    if exp.element.is_none() {
        checks.push(verify::check_group_axioms(&exp.group));
    }
    if let Some(x) = &exp.element {
        checks.extend(verify::point_suite(x).map_err(core_error)?);
    }
    if let Some(p) = &exp.series {
        if !p.is_pure_power() {
            let truncation = exp.params.truncation.unwrap_or_else(|| p.default_truncation());
            checks.extend(verify::series_suite(p, truncation).map_err(core_error)?);
        }
        if let Some(x) = &exp.element {
            let regular = exp.params.horizon.unwrap_or(DEFAULT_REGULAR_HORIZON);
            checks.extend(verify::map_suite(p, x, regular, DEFAULT_CESARO_HORIZON).map_err(core_error)?);
        }
    }
    let status = verify::summarize(&checks);
    match format {
        Format::Json => write_json(out, &VerifyReport { status, checks: checks.clone() })?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for c in &checks {
                w.serialize(c).map_err(io_error)?;
            }
            w.flush().map_err(io_error)?;
        }
    }
    let names = |s: Status| -> String {
        checks
            .iter()
            .filter(|c| c.status == s)
            .map(|c| c.name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    Ok(match status {
        Status::Pass => Outcome::Done,
        Status::Inconclusive => Outcome::Inconclusive(names(Status::Inconclusive)),
        Status::Fail => Outcome::Failed(format!("violated invariants: {}", names(Status::Fail))),
    })
}
