//! Command-line front end. Exit status: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use super::report::{write_csv, write_json};
use super::{bench, bench_instances, BenchConfig, BenchOutcome, ReportFormat};
use crate::error::{Error, Result};
use crate::estimators::{shots_required, EstimatorKind};
use crate::formulation::{qubit_report, write_qubit_csv, Formulation};
use crate::instances::{exact_optimum, load_instance, InstanceFormat};

#[derive(Debug, Parser)]
#[command(name = "penalty-vqe", version, about = "Step-penalty VQE for multi-dimensional knapsack")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run multi-start VQE on one instance.
    Solve(SolveArgs),
    /// Print the exact optimum and a maximizing assignment.
    Exact {
        file: PathBuf,
        #[arg(long, default_value = "canonical", value_parser = parse_input_format)]
        input_format: InstanceFormat,
    },
    /// Qubit counts for the step-penalty and slack formulations (CSV).
    Qubits {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value = "canonical", value_parser = parse_input_format)]
        input_format: InstanceFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hoeffding shot budgets for FS and CVaR.
    Shots {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        range: i64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Run a sweep described by a TOML or JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_report_format)]
        format: Option<ReportFormat>,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, default_value = "canonical", value_parser = parse_input_format)]
    input_format: InstanceFormat,
    #[arg(long, default_value = "custom", value_parser = parse_formulation)]
    formulation: Formulation,
    #[arg(long, default_value = "cvar", value_parser = parse_estimator)]
    estimator: EstimatorKind,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 4000)]
    shots: u64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    maxfev: usize,
    #[arg(long, default_value_t = 1e-4)]
    xtol: f64,
    #[arg(long, default_value_t = crate::simulator::DEFAULT_QUBIT_CAP)]
    cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = parse_report_format)]
    format: ReportFormat,
}

fn parse_input_format(s: &str) -> std::result::Result<InstanceFormat, String> {
    match s {
        "canonical" => Ok(InstanceFormat::Canonical),
        "orlib" => Ok(InstanceFormat::Orlib),
        other => Err(format!("expected canonical or orlib, got {other:?}")),
    }
}

fn parse_formulation(s: &str) -> std::result::Result<Formulation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_estimator(s: &str) -> std::result::Result<EstimatorKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_report_format(s: &str) -> std::result::Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs the CLI against the given streams and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Exact { file, input_format } => {
            let inst = load_instance(&file, input_format)?;
            let (x, value) = exact_optimum(&inst)?;
            if let Some(recorded) = inst.known_optimum() {
                if recorded != value {
                    return Err(Error::OptimumMismatch {
                        name: inst.name().to_string(),
                        recorded,
                        computed: value,
                    });
                }
            }
            writeln!(stdout, "optimum {value}")?;
            writeln!(stdout, "assignment {x}")?;
        }
        Command::Qubits {
            files,
            input_format,
            out,
        } => {
            let instances = files
                .iter()
                .map(|f| load_instance(f, input_format))
                .collect::<Result<Vec<_>>>()?;
            let rows = qubit_report(&instances);
            with_output(out.as_deref(), stdout, |w| write_qubit_csv(&rows, w))?;
        }
        Command::Shots {
            epsilon,
            delta,
            range,
            alpha,
        } => {
            let b = shots_required(epsilon, delta, range, alpha)?;
            writeln!(stdout, "M_fs={} M_alpha={}", b.m_fs, b.m_alpha)?;
        }
        Command::Bench { config, out, format } => {
            let mut config = BenchConfig::load(&config)?;
            if out.is_some() {
                config.out = out;
            }
            if let Some(f) = format {
                config.format = f;
            }
            let outcome = bench(&config)?;
            emit(&outcome, &config, stdout)?;
        }
        Command::Solve(args) => {
            let inst = load_instance(&args.file, args.input_format)?;
            let config = BenchConfig {
                instances: vec![args.file.to_string_lossy().into_owned()],
                input_format: args.input_format,
                formulations: vec![args.formulation],
                estimators: vec![match args.estimator {
                    EstimatorKind::Fs => "fs".into(),
                    EstimatorKind::Cvar => format!("cvar:{}", args.alpha),
                }],
                alpha: args.alpha,
                shots: args.shots,
                trials: args.trials,
                seed: args.seed,
                maxfev: args.maxfev,
                xtol: args.xtol,
                cap: args.cap,
                out: args.out,
                format: args.format,
            };
            config.validate()?;
            let outcome = bench_instances(std::slice::from_ref(&inst), &config)?;
            if let Some(skip) = outcome.skipped.first() {
                return Err(Error::QubitCap {
                    qubits: skip.qubits,
                    cap: config.cap,
                });
            }
            emit(&outcome, &config, stdout)?;
        }
    }
    Ok(())
}

fn emit(outcome: &BenchOutcome, config: &BenchConfig, stdout: &mut dyn Write) -> Result<()> {
    with_output(config.out.as_deref(), stdout, |w| match config.format {
        ReportFormat::Csv => write_csv(outcome, config, w),
        ReportFormat::Json => write_json(outcome, config, w),
    })
}

fn with_output(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    write: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let mut file = BufWriter::new(File::create(p)?);
            write(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => write(stdout),
    }
}
