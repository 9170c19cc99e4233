//! Command line driver: invariant tables, single spectral and solver jobs,
//! sweeps, classifier tables and the acceptance suite.
//!
//! Exit codes: 0 success, 1 failed check or runtime failure, 2 usage error.

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adiabatic_sw::geometry::{boothby_wang_invariants, ricci_matrix, trace3, BundleSpec};
use adiabatic_sw::harness::{self, verify, SolverJob, SpectrumJob};
use adiabatic_sw::sw::{self, ClassifierInput};
use adiabatic_sw::{exec, Error};

#[derive(Parser)]
#[command(name = "adiabatic", version, about = "Seiberg-Witten lattice laboratory on circle bundles")]
struct Cli {
    /// Directory for report files.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Overrides the seed of random starts and start vectors.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Boothby-Wang invariants over a delta ladder.
    Invariants {
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        ell: i64,
        #[arg(long, default_value_t = 1)]
        genus: i64,
        /// Transverse curvature of the base.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, value_delimiter = ',', default_values_t = harness::DEFAULT_DELTAS)]
        deltas: Vec<f64>,
    },
    /// Low spectrum of one operator, from a JSON job file.
    Spectrum { job: PathBuf },
    /// One critical-point search, from a JSON job file.
    Solve { job: PathBuf },
    /// Runs a sweep plan (JSON) and writes the report.
    Sweep { plan: PathBuf },
    /// Adiabatic classification for every torsion class.
    Classify {
        #[arg(long)]
        genus: i64,
        #[arg(long, allow_hyphen_values = true)]
        ell: i64,
        /// Classify a bundle that is not a pullback from the base.
        #[arg(long)]
        not_pullback: bool,
    },
    /// Runs the acceptance suite.
    Verify {
        /// Smaller grids and fewer starts.
        #[arg(long)]
        quick: bool,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(_) | Error::Json(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn emit<T: Serialize>(format: Format, rows: &[T]) -> Outcome {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(rows).map_err(Error::from)?),
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(std::io::stdout());
            for r in rows {
                w.serialize(r).map_err(Error::from)?;
            }
            w.flush().map_err(Error::from)?;
        }
    }
    Ok(())
}

fn save<T: Serialize>(dir: Option<&Path>, name: &str, rows: &[T]) -> Outcome {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        std::fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(rows).map_err(Error::from)? + "\n")
            .map_err(Error::from)?;
        harness::write_csv(&dir.join(format!("{name}.csv")), rows)?;
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct InvariantRow {
    ell: i64,
    delta: f64,
    lambda: f64,
    varphi: f64,
    b: f64,
    sigma: f64,
    kappa: f64,
    scal: f64,
    ricci_trace: f64,
}

#[derive(Serialize)]
struct ClassRow {
    genus: i64,
    ell: i64,
    k: i64,
    classification: String,
    detail: serde_json::Value,
}

fn run(cli: Cli) -> Outcome {
    let out = cli.output.as_deref();
    match cli.command {
        Command::Invariants { ell, genus, sigma, deltas } => {
            let mut rows = Vec::new();
            for delta in deltas {
                let inv = boothby_wang_invariants(&BundleSpec::new(ell, genus, delta, 0)?, sigma)?;
                rows.push(InvariantRow {
                    ell,
                    delta,
                    lambda: inv.lambda,
                    varphi: inv.varphi,
                    b: inv.b,
                    sigma: inv.sigma,
                    kappa: inv.kappa,
                    scal: inv.scal,
                    ricci_trace: trace3(&ricci_matrix(&inv)),
                });
            }
            save(out, "invariants", &rows)?;
            emit(cli.format, &rows)
        }
        Command::Spectrum { job } => {
            let job: SpectrumJob = read_json(&job)?;
            let report = harness::run_spectrum_job(&job, cli.seed)?;
            save(out, "spectrum", std::slice::from_ref(&report))?;
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?),
                Format::Csv => {
                    #[derive(Serialize)]
                    struct Pair {
                        delta: f64,
                        eigenvalue: f64,
                        residual: f64,
                    }
                    let rows: Vec<Pair> = report
                        .eigenvalues
                        .iter()
                        .zip(&report.residuals)
                        .map(|(&eigenvalue, &residual)| Pair { delta: report.delta, eigenvalue, residual })
                        .collect();
                    emit(Format::Csv, &rows)?;
                }
            }
            Ok(())
        }
        Command::Solve { job } => {
            let job: SolverJob = read_json(&job)?;
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("solve-out"));
            let summary = harness::run_solver_job(&job, &dir, cli.seed)?;
            emit(cli.format, std::slice::from_ref(&summary))?;
            if summary.converged {
                Ok(())
            } else {
                Err(Failure::Runtime(summary.error.unwrap_or_default()))
            }
        }
        Command::Sweep { plan } => {
            let mut plan: harness::SweepPlan = read_json(&plan)?;
            if let Some(s) = cli.seed {
                plan.seed = s;
            }
            let report = harness::run_sweep(&plan)?;
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("sweep-out"));
            let files = harness::write_report(&report, &dir)?;
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            emit(cli.format, &report.checks)?;
            if report.all_checks_pass() {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::Classify { genus, ell, not_pullback } => {
            let ks: Vec<i64> = if ell != 0 { (0..ell.abs()).collect() } else { (-genus..=genus).collect() };
            let mut rows = Vec::new();
            for k in ks {
                let input = if not_pullback {
                    ClassifierInput { k, ..ClassifierInput::not_pullback(genus, ell) }
                } else {
                    ClassifierInput::new(genus, ell, ell != 0 || k == 0, k)
                };
                let c = sw::classify_adiabatic(&input)?;
                let detail = serde_json::to_value(&c).map_err(Error::from)?;
                let kind = detail.get("kind").and_then(|v| v.as_str()).unwrap_or_default().to_string();
                rows.push(ClassRow { genus, ell, k, classification: kind, detail });
            }
            if cli.format == Format::Csv {
                #[derive(Serialize)]
                struct Flat<'a> {
                    genus: i64,
                    ell: i64,
                    k: i64,
                    classification: &'a str,
                    detail: String,
                }
                let flat: Vec<Flat> = rows
                    .iter()
                    .map(|r| Flat { genus: r.genus, ell: r.ell, k: r.k, classification: &r.classification, detail: r.detail.to_string() })
                    .collect();
                save(out, "classification", &flat)?;
                emit(Format::Csv, &flat)
            } else {
                if let Some(dir) = out {
                    std::fs::create_dir_all(dir).map_err(Error::from)?;
                    std::fs::write(dir.join("classification.json"), serde_json::to_string_pretty(&rows).map_err(Error::from)? + "\n")
                        .map_err(Error::from)?;
                }
                emit(Format::Json, &rows)
            }
        }
        Command::Verify { quick } => {
            let outcomes = verify::run(quick, cli.seed.unwrap_or(0));
            for o in &outcomes {
                eprintln!("{}", o.line());
            }
            save(out, "verify", &outcomes)?;
            emit(cli.format, &outcomes)?;
            if outcomes.iter().all(|o| o.passed) {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version go to stdout with status 0; real usage errors to stderr with 2.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(0) = cli.threads {
        eprintln!("--threads must be at least 1");
        return ExitCode::from(2);
    }
    let threads = cli.threads;
    match exec::with_threads(threads, move || run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: adiabatic [--output <dir>] [--format json|csv] [--seed <n>] [--threads <n>] <invariants|spectrum|solve|sweep|classify|verify>");
            ExitCode::from(2)
        }
    }
}
