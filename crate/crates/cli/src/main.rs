//! `simplex-dyn`: runs profiles, predictions, oracle traces and verification
//! suites for configured experiments.
//!
//! Exit codes: 0 success, 1 invalid input, 2 inconclusive numerics,
//! 3 verification failure.

mod commands;
mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use commands::{Command, Format, Outcome};
use config::{parse_configs, ExperimentConfig, Params};

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Io(String),
    Inconclusive(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) | CliError::Io(_) => 1,
            CliError::Inconclusive(_) => 2,
            CliError::Failed(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Invalid(m) => format!("invalid input: {m}"),
            CliError::Io(m) => format!("i/o error: {m}"),
            CliError::Inconclusive(m) => format!("inconclusive: {m}"),
            CliError::Failed(m) => format!("verification failed: {m}"),
        }
    }
}

fn outcome_code(outcome: &Outcome) -> u8 {
    match outcome {
        Outcome::Done => 0,
        Outcome::Inconclusive(_) => 2,
        Outcome::Failed(_) => 3,
    }
}

#[derive(Parser, Debug)]
#[command(name = "simplex-dyn", version, about = "Long-run behaviour of series iterated on finite group algebras")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Experiment config (JSON): one experiment or {"batch": [...]}.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; a directory for batch configs. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    horizon: Option<usize>,

    #[arg(long, global = true)]
    burn_in: Option<usize>,

    /// Tolerance of the extinction-value iteration.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true)]
    max_iter: Option<usize>,

    /// Truncation degree K of scalar coefficient traces.
    #[arg(long, global = true)]
    truncation: Option<usize>,

    /// Seed for "interior-random" elements without an explicit seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Return time, period, support subgroup and idempotent of the element.
    Profile,
    /// Closed-form limit set of the powers, compared with float clusters.
    LimitSet,
    /// Regular limit, accumulation points and Cesàro limit of the iterates.
    Predict,
    /// Float trace of the iterates (step, coefficients, sup delta).
    Iterate,
    /// Predicted Cesàro limit and the empirical running average.
    Cesaro,
    /// Scalar coefficient trace (n, a0, sup of positive-index coefficients, tail mass).
    Scalar {
        /// Emit running averages of the coefficient states.
        #[arg(long)]
        averaged: bool,
    },
    /// Runs every applicable invariant check on the instance.
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Profile => Command::Profile,
            Cmd::LimitSet => Command::LimitSet,
            Cmd::Predict => Command::Predict,
            Cmd::Iterate => Command::Iterate,
            Cmd::Cesaro => Command::Cesaro,
            Cmd::Scalar { averaged } => Command::Scalar { averaged },
            Cmd::Verify => Command::Verify,
        }
    }
}

fn run_experiment(
    cmd: Command,
    format: Format,
    config: &ExperimentConfig,
    base_dir: &Path,
    overrides: &Params,
    out: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let exp = config.build(base_dir, overrides)?;
    let outcome = commands::run(cmd, &exp, format, out)?;
    out.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(outcome)
}

fn open_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn report(result: Result<Outcome, CliError>) -> u8 {
    match result {
        Ok(outcome) => {
            match &outcome {
                Outcome::Inconclusive(m) => eprintln!("inconclusive: {m}"),
                Outcome::Failed(m) => eprintln!("verification failed: {m}"),
                Outcome::Done => {}
            }
            outcome_code(&outcome)
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn real_main(cli: Cli) -> u8 {
    let cmd = Command::from(cli.command);
    let format = cli.format.unwrap_or_else(|| cmd.default_format());
    let overrides = Params {
        horizon: cli.horizon,
        burn_in: cli.burn_in,
        tol: cli.tol,
        max_iter: cli.max_iter,
        truncation: cli.truncation,
        seed: cli.seed,
    };
    let Some(config_path) = cli.config else {
        return report(Err(CliError::Invalid("--config <path> is required".into())));
    };
    let text = match fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => return report(Err(CliError::Invalid(format!("cannot read {}: {e}", config_path.display())))),
    };
    let base_dir = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let (configs, batch) = match parse_configs(&text) {
        Ok(c) => c,
        Err(e) => return report(Err(e)),
    };

    if !batch {
        let result = match &cli.out {
            Some(path) => open_output(path)
                .and_then(|mut w| run_experiment(cmd, format, &configs[0], &base_dir, &overrides, &mut w)),
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                run_experiment(cmd, format, &configs[0], &base_dir, &overrides, &mut lock)
            }
        };
        return report(result);
    }

    let Some(dir) = cli.out else {
        return report(Err(CliError::Invalid("--out <dir> is required for batch configs".into())));
    };
    if let Err(e) = fs::create_dir_all(&dir) {
        return report(Err(CliError::Io(format!("cannot create {}: {e}", dir.display()))));
    }
    // experiments are independent; each one runs single-threaded into its own file
    let results: Vec<(String, Result<Outcome, CliError>)> = configs
        .par_iter()
        .enumerate()
        .map(|(i, config)| {
            let stem = config.name.clone().unwrap_or_else(|| format!("experiment-{i:03}"));
            let path = dir.join(format!("{stem}.{}", format.extension()));
            let result = open_output(&path)
                .and_then(|mut w| run_experiment(cmd, format, config, &base_dir, &overrides, &mut w));
            (stem, result)
        })
        .collect();
    let mut code = 0;
    for (stem, result) in results {
        let status = match &result {
            Ok(Outcome::Done) => "ok".to_string(),
            Ok(Outcome::Inconclusive(m)) => format!("inconclusive: {m}"),
            Ok(Outcome::Failed(m)) => format!("failed: {m}"),
            Err(e) => e.message(),
        };
        println!("{stem}: {status}");
        code = code.max(match &result {
            Ok(o) => outcome_code(o),
            Err(e) => e.code(),
        });
    }
    code
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational = !e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if informational { 0 } else { 1 });
        }
    };
    ExitCode::from(real_main(cli))
}
