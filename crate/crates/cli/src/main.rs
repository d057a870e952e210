//! `tmg`: analysis sweeps, solves, cross-checks and scaling runs for time
//! multigrid on DG time discretizations of `u' + u = f`.

mod analyze;
mod bench;
mod config;
mod output;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_damping, parse_levels, pick, FileConfig, Format};
use tmg_core::mg::LevelCount;
use tmg_core::stability::DampingChoice;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verification(String),
    NotConverged(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) | CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
            CliError::NotConverged(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::NotConverged(m) => write!(f, "solver did not converge: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<tmg_core::Error> for CliError {
    fn from(e: tmg_core::Error) -> Self {
        match e {
            tmg_core::Error::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "tmg", version, about = "Time multigrid for DG time stepping of u' + u = f")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Predicted two-grid factors and smoothing factors over a log-spaced tau grid.
    Analyze(analyze::AnalyzeArgs),
    /// Cross-check the analysis against the solver and brute-force operators.
    Verify(verify::VerifyArgs),
    /// Solve u' + u = f on [0, T] with the multigrid solver.
    Solve(solve::SolveArgs),
    /// Strong or weak scaling runs.
    Bench(bench::BenchArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// JSON config file with keys named like the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Polynomial degree(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub pt: Vec<usize>,
    /// Pre- and post-smoothing steps.
    #[arg(long)]
    pub nu: Option<usize>,
    #[arg(long)]
    pub nu1: Option<usize>,
    #[arg(long)]
    pub nu2: Option<usize>,
    /// `optimal` or a fixed damping in (0, 2).
    #[arg(long)]
    pub omega: Option<String>,
    /// `max` or a level count.
    #[arg(long)]
    pub levels: Option<String>,
    /// Number of time steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Relative residual tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker count(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub workers: Vec<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Common settings after merging flags over the config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub pt: Option<Vec<usize>>,
    pub nu1: usize,
    pub nu2: usize,
    pub damping: DampingChoice,
    pub levels: LevelCount,
    pub steps: Option<usize>,
    pub eps: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub workers: Option<Vec<usize>>,
    pub out: PathBuf,
    pub format: Format,
}

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl Settings {
    pub fn resolve(args: &CommonArgs, file: &FileConfig) -> CliResult<Self> {
        let nu1 = args.nu1.or(args.nu).or(file.nu1).or(file.nu).unwrap_or(1);
        let nu2 = args.nu2.or(args.nu).or(file.nu2).or(file.nu).unwrap_or(1);
        let omega = pick(args.omega.clone(), file.omega.as_ref().map(|k| k.as_flag()), "optimal".into());
        let levels = pick(args.levels.clone(), file.levels.as_ref().map(|k| k.as_flag()), "max".into());
        let s = Settings {
            pt: non_empty(args.pt.clone()).or_else(|| file.pt.as_ref().map(|v| v.to_vec())),
            nu1,
            nu2,
            damping: parse_damping(&omega)?,
            levels: parse_levels(&levels)?,
            steps: args.steps.or(file.steps),
            eps: pick(args.eps, file.eps, 1e-8),
            max_iters: pick(args.max_iters, file.max_iters, 250),
            seed: pick(args.seed, file.seed, 42),
            workers: non_empty(args.workers.clone()).or_else(|| file.workers.as_ref().map(|v| v.to_vec())),
            out: pick(args.out.clone(), file.out.clone(), PathBuf::from("tmg-out")),
            format: pick(args.format, file.format, Format::Csv),
        };
        if s.nu1 + s.nu2 == 0 {
            return Err(CliError::Usage("at least one smoothing step is required".into()));
        }
        if !(s.eps > 0.0 && s.eps < 1.0) {
            return Err(CliError::Usage(format!("eps must lie in (0, 1), got {}", s.eps)));
        }
        if s.workers.as_ref().is_some_and(|w| w.contains(&0)) {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        Ok(s)
    }

    pub fn single_worker(&self) -> CliResult<usize> {
        match self.workers.as_deref() {
            None => Ok(1),
            Some([w]) => Ok(*w),
            Some(list) => Err(CliError::Usage(format!("expected a single worker count, got {list:?}"))),
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(a) => analyze::run(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Solve(a) => solve::run(&a),
        Command::Bench(a) => bench::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        // convergence-factor measurements deliberately exhaust the cycle budget
        0 => "warn,tmg_core::mg=error",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
