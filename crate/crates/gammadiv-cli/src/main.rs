//! `gammadiv`: Γ-divergences, scale sweeps, derivatives and Markov bounds from
//! JSON inputs.
//!
//! Exit codes: 0 certified, 1 uncertified (or a bound that fails), 2 I/O or
//! parse error, 3 invalid input.

mod commands;
mod inputs;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gammadiv::{QuadraticFunction, SolverOptions};

use commands::{GaussianArgs, SweepKind, What};
use inputs::{read_json, CliError, ProblemInputs};
use report::{Config, MethodArg, RunReport};

#[derive(Parser)]
#[command(name = "gammadiv", version, about = "Gamma-divergence between discrete measures")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Duality-gap tolerance for certification.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, global = true, value_enum, default_value = "active-set")]
    method: MethodArg,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Exit 0 even when a solve is not certified.
    #[arg(long, global = true)]
    allow_uncertified: bool,
    /// Add wall-clock time to the report (reports are then not reproducible).
    #[arg(long, global = true)]
    timing: bool,
    /// Write the report or CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    /// `euclidean`, `manhattan`, or a JSON file `{points, matrix}`.
    #[arg(long)]
    cost: Option<String>,
    /// Scale b of Γ = b·Lip(c).
    #[arg(long)]
    scale_b: Option<f64>,
}

impl MeasureArgs {
    fn load(&self) -> Result<ProblemInputs, CliError> {
        ProblemInputs::load(&self.mu, &self.nu, self.cost.as_deref(), self.scale_b)
    }
}

#[derive(Subcommand)]
enum Command {
    /// G, R and/or W for a pair of measures.
    Compute {
        #[command(flatten)]
        measures: MeasureArgs,
        #[arg(long, value_enum, default_value = "gamma")]
        what: What,
    },
    /// CSV of G over a range of scales.
    Sweep {
        #[command(flatten)]
        measures: MeasureArgs,
        #[arg(long, value_enum)]
        mode: SweepKind,
        /// Comma-separated scales (δ for the transport sweep).
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
    },
    /// Directional derivative of G(·‖ν) at μ along ρ.
    Derivative {
        #[command(flatten)]
        measures: MeasureArgs,
        /// JSON `{points, weights}` with zero total weight.
        #[arg(long)]
        rho: PathBuf,
    },
    /// Performance bounds for Markov chains.
    Markov {
        #[command(subcommand)]
        command: MarkovCommand,
    },
    /// Re-check a report's digest and certificates.
    Verify { report: PathBuf },
    /// Seeded random instances checked against G ≤ min(R, W) and the certificates.
    Check {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 10)]
        max_points: usize,
    },
}

#[derive(Subcommand)]
enum MarkovCommand {
    /// Ergodic bound for kernel file `{states, P, Q, f, cost}`.
    Ergodic {
        #[arg(long)]
        kernel: PathBuf,
    },
    /// Solve f = risk map of (g, a) and test g against Γ.
    Membership {
        #[arg(long)]
        kernel: PathBuf,
    },
    /// Gaussian AR(1) kernel N(αx, σ²) with quadratic Γ.
    Gaussian {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        sigma: f64,
        /// Potential −b x² − c x − d as `b,c,d`, mapped through the risk map.
        #[arg(long, value_delimiter = ',')]
        potential: Option<Vec<f64>>,
        /// Constant a of the risk map.
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        /// Cost b x² + c x + d as `b,c,d`, tested for membership in R(Γ,p).
        #[arg(long = "cost", value_delimiter = ',')]
        cost_coeffs: Option<Vec<f64>>,
    },
}

enum Output {
    Report(RunReport),
    Text(String, bool),
}

fn quadratic(v: &Option<Vec<f64>>) -> Result<Option<QuadraticFunction>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[b, c, d]) => Ok(Some(QuadraticFunction::new(b, c, d))),
        Some(other) => Err(CliError::Invalid(format!("expected three coefficients b,c,d, got {}", other.len()))),
    }
}

fn run(cli: &Cli, echo: Vec<String>) -> Result<Output, CliError> {
    let g = &cli.global;
    if !(g.tol > 0.0) || g.max_iter == 0 {
        return Err(CliError::Invalid("--tol must be positive and --max-iter nonzero".into()));
    }
    let cfg = Config { tol: g.tol, max_iter: g.max_iter, seed: g.seed, method: g.method };
    let opts = SolverOptions { tol: g.tol, max_iter: g.max_iter, method: g.method.into() };
    Ok(match &cli.command {
        Command::Compute { measures, what } => Output::Report(commands::compute(echo, cfg, &opts, measures.load()?, *what)?),
        Command::Sweep { measures, mode, scales } => {
            let (csv, ok) = commands::sweep(&opts, measures.load()?, *mode, scales.clone())?;
            Output::Text(csv, ok)
        }
        Command::Derivative { measures, rho } => Output::Report(commands::derivative(echo, cfg, &opts, measures.load()?, rho)?),
        Command::Markov { command } => Output::Report(match command {
            MarkovCommand::Ergodic { kernel } => commands::ergodic(echo, cfg, &opts, kernel)?,
            MarkovCommand::Membership { kernel } => commands::membership(echo, cfg, kernel)?,
            MarkovCommand::Gaussian { alpha, sigma, potential, a, cost_coeffs } => {
                let args = GaussianArgs {
                    alpha: *alpha,
                    sigma: *sigma,
                    potential: quadratic(potential)?.map(|q| (q, *a)),
                    cost: quadratic(cost_coeffs)?,
                };
                commands::gaussian(echo, cfg, &args)?
            }
        }),
        Command::Verify { report } => {
            let r: RunReport = read_json(report)?;
            let v = report::verify(&r)?;
            if !v.digest_matches {
                return Err(CliError::Invalid("report digest does not match its inputs".into()));
            }
            let ok = v.all_optimal;
            let text = serde_json::to_string_pretty(&v).expect("serializes") + "\n";
            Output::Text(text, ok)
        }
        Command::Check { cases, max_points } => Output::Report(commands::check(echo, cfg, &opts, *cases, *max_points)?),
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GAMMA_DIV_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| CliError::Invalid(format!("GAMMA_DIV_THREADS={v} is not a count")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Invalid(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo: Vec<String> = std::env::args().skip(1).collect();
    let start = Instant::now();
    let result = threads_from_env().and_then(|_| run(&cli, echo)).and_then(|out| {
        let (text, ok) = match out {
            Output::Report(mut r) => {
                if cli.global.timing {
                    r.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
                }
                (serde_json::to_string_pretty(&r).expect("serializes") + "\n", r.certified)
            }
            Output::Text(t, ok) => (t, ok),
        };
        emit(&cli.global.out, &text)?;
        Ok(ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if cli.global.allow_uncertified => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("gammadiv: result not certified (pass --allow-uncertified to accept)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("gammadiv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
