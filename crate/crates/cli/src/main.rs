use clap::{Parser, Subcommand};
use gencrit::commands::{self, CertifyArgs, ClassifyArgs, SolveArgs, DEFAULT_MAX_ITER};
use gencrit::report::{Report, Status};
use gencrit::suite;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(
    name = "gencrit",
    version,
    about = "Critical points on rank-deficient equality constraints"
)]
struct Cli {
    /// Add wall-clock timings to the report (makes it non-reproducible).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Regularity and generalized regularity of the constraint at a point.
    Classify {
        file: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long)]
        probes: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find a critical point and certify its multipliers.
    Solve {
        file: PathBuf,
        /// Comma-separated starting point; defaults to x_init from the file.
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Residual tolerance (overrides the file).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check criticality at a point and certify its multipliers.
    Certify {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the built-in reference results.
    PaperSuite {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (mut report, out) = match cli.command {
        Command::Classify {
            file,
            at,
            probes,
            radius,
            seed,
            out,
        } => (
            commands::classify(&ClassifyArgs {
                file,
                at,
                probes,
                radius,
                seed,
            }),
            out,
        ),
        Command::Solve {
            file,
            start,
            max_iter,
            tol,
            out,
        } => (
            commands::solve(&SolveArgs {
                file,
                start,
                max_iter,
                tol,
            }),
            out,
        ),
        Command::Certify { file, at, out } => (commands::certify(&CertifyArgs { file, at }), out),
        Command::PaperSuite { out } => (suite::paper_suite(), out),
    };
    if cli.timings {
        let mut t = serde_json::Map::new();
        t.insert(
            "total_seconds".into(),
            json!(started.elapsed().as_secs_f64()),
        );
        report.timings = Some(t);
    }
    emit(&report, out)
}

/// With `--out`, the JSON goes to the file and the summary to stdout;
/// otherwise the JSON goes to stdout and the summary to stderr.
fn emit(report: &Report, out: Option<PathBuf>) -> ExitCode {
    let json = report.to_json();
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, json) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(Status::InputError.exit_code());
            }
            print!("{}", report.summary_text());
        }
        None => {
            print!("{json}");
            eprint!("{}", report.summary_text());
        }
    }
    ExitCode::from(report.status.exit_code())
}
