//! `tmg solve`: multigrid solve of `u' + u = f` on `[0, T]`.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use tmg_core::basis::BasisSpec;
use tmg_core::block::BlockVector;
use tmg_core::dg::{add_initial_value, forward_solve, rhs_moments, TimeGrid};
use tmg_core::mg::{random_guess, solve_with, CycleConfig, SolveStats, TimeHierarchy};
use tmg_core::Executor;

use crate::config::{pick, FileConfig, Format};
use crate::output::{write_json, write_rows};
use crate::{CliError, CliResult, CommonArgs, Settings};

/// Right-hand side presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forcing {
    Zero,
    Constant(f64),
    /// `t^m`
    Poly(i32),
    /// `sin(w t)`
    Sin(f64),
}

impl Forcing {
    pub fn parse(text: &str) -> CliResult<Self> {
        let bad = || CliError::Usage(format!("unknown forcing `{text}`; use zero, constant[:c], poly:m or sin:w"));
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        match (name, arg) {
            ("zero", None) => Ok(Forcing::Zero),
            ("constant", None) => Ok(Forcing::Constant(1.0)),
            ("constant", Some(c)) => c.parse().map(Forcing::Constant).map_err(|_| bad()),
            ("poly", Some(m)) => m.parse().map(Forcing::Poly).map_err(|_| bad()),
            ("sin", Some(w)) => w.parse().map(Forcing::Sin).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }

    pub fn eval(self, t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Constant(c) => c,
            Forcing::Poly(m) => t.powi(m),
            Forcing::Sin(w) => (w * t).sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Init {
    Zero,
    Random,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Final time T.
    #[arg(long)]
    pub end: Option<f64>,
    /// Initial value u(0).
    #[arg(long)]
    pub u0: Option<f64>,
    /// Forcing: zero, constant[:c], poly:m or sin:w.
    #[arg(long = "f")]
    pub forcing: Option<String>,
    /// Initial iterate.
    #[arg(long, value_enum)]
    pub init: Option<Init>,
    /// Also solve by forward substitution and report the deviation.
    #[arg(long)]
    pub compare_sequential: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub p_t: usize,
    pub steps: usize,
    pub tau: f64,
    pub end: f64,
    pub u0: f64,
    pub forcing: String,
    pub levels: usize,
    pub endpoint: f64,
    pub max_deviation_sequential: Option<f64>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Serialize)]
struct ResidualRow {
    iteration: usize,
    residual: f64,
}

pub struct SolveOutput {
    pub solution: BlockVector,
    pub report: SolveReport,
}

pub fn solve_problem(args: &SolveArgs, file: &FileConfig, s: &Settings) -> CliResult<SolveOutput> {
    let p = match s.pt.as_deref() {
        None => 0,
        Some([p]) => *p,
        Some(list) => return Err(CliError::Usage(format!("solve takes a single degree, got {list:?}"))),
    };
    let end = pick(args.end, file.end, 1.0);
    let u0 = pick(args.u0, file.u0, 1.0);
    let forcing_text = pick(args.forcing.clone(), file.f.clone(), "zero".into());
    let forcing = Forcing::parse(&forcing_text)?;
    let init = match (args.init, file.init.as_deref()) {
        (Some(i), _) => i,
        (None, None) => Init::Zero,
        (None, Some(text)) => Init::from_str(text, true).map_err(CliError::Usage)?,
    };
    let steps = s.steps.unwrap_or(1024);
    if !(end > 0.0 && end.is_finite()) {
        return Err(CliError::Usage(format!("end time must be positive, got {end}")));
    }
    let basis = BasisSpec::new(p, Default::default())?;
    let grid = TimeGrid::uniform(end, steps)?;
    let hier = TimeHierarchy::new(&basis, grid.tau, steps, s.levels)?;
    let mut rhs = rhs_moments(|t| forcing.eval(t), &grid, &basis);
    add_initial_value(&mut rhs, hier.ops(0), u0);
    let guess = match init {
        Init::Zero => BlockVector::zeros(steps, basis.n_t()),
        Init::Random => random_guess(steps, basis.n_t(), s.seed),
    };
    let workers = s.single_worker()?;
    let cfg = CycleConfig {
        nu1: s.nu1,
        nu2: s.nu2,
        damping: s.damping,
        levels: s.levels,
        eps: s.eps,
        max_iters: s.max_iters,
        seed: s.seed,
        workers,
    };
    let (u, stats) = solve_with(&Executor::new(workers), &hier, &rhs, &guess, &cfg)?;
    let compare = args.compare_sequential || file.compare_sequential.unwrap_or(false);
    let max_deviation_sequential = if compare {
        Some(forward_solve(hier.finest(), &rhs)?.max_abs_diff(&u))
    } else {
        None
    };
    let report = SolveReport {
        p_t: p,
        steps,
        tau: grid.tau,
        end,
        u0,
        forcing: forcing_text,
        levels: hier.levels(),
        endpoint: basis.evaluate(u.block(steps - 1), 1.0),
        max_deviation_sequential,
        stats,
    };
    Ok(SolveOutput { solution: u, report })
}

fn write_solution(dir: &PathBuf, format: Format, u: &BlockVector, tau: f64, basis: &BasisSpec) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("solution.{}", format.extension()));
    let n_t = u.n_t();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(&path)?;
            let mut header = vec!["step".to_string(), "t_start".into(), "t_end".into()];
            header.extend((0..n_t).map(|k| format!("c{k}")));
            header.push("u_end".into());
            w.write_record(&header)?;
            for (n, block) in u.blocks().enumerate() {
                let mut rec = vec![n.to_string(), (n as f64 * tau).to_string(), ((n + 1) as f64 * tau).to_string()];
                rec.extend(block.iter().map(|c| c.to_string()));
                rec.push(basis.evaluate(block, 1.0).to_string());
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let blocks: Vec<&[f64]> = u.blocks().collect();
            write_json(&path, &serde_json::json!({ "tau": tau, "n_t": n_t, "coefficients": blocks }))?;
        }
    }
    Ok(path)
}

pub fn run(args: &SolveArgs) -> CliResult<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let s = Settings::resolve(&args.common, &file)?;
    let out = solve_problem(args, &file, &s)?;
    let r = &out.report;
    let basis = BasisSpec::new(r.p_t, Default::default())?;
    write_solution(&s.out, s.format, &out.solution, r.tau, &basis)?;
    let residuals: Vec<ResidualRow> = r
        .stats
        .residuals
        .iter()
        .enumerate()
        .map(|(iteration, &residual)| ResidualRow { iteration, residual })
        .collect();
    write_rows(&s.out, "residuals", s.format, &residuals)?;
    write_json(&s.out.join("stats.json"), r)?;

    println!("levels {}, iterations {}, converged {}", r.levels, r.stats.iterations, r.stats.converged);
    println!("measured convergence factor {:.6}", r.stats.convergence_factor);
    println!("u({}) = {:.15e}", r.end, r.endpoint);
    if let Some(d) = r.max_deviation_sequential {
        println!("max deviation from forward substitution {d:.3e}");
    }
    println!("wrote solution, residuals and stats to {}", s.out.display());
    if r.stats.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "{} cycles, residual {:e}",
            r.stats.iterations,
            r.stats.residuals.last().copied().unwrap_or(f64::NAN)
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tmg_core::mg::LevelCount;

    fn settings(common: CommonArgs) -> Settings {
        Settings::resolve(&common, &FileConfig::default()).unwrap()
    }

    fn args(common: CommonArgs) -> SolveArgs {
        SolveArgs { common, end: None, u0: None, forcing: None, init: None, compare_sequential: true }
    }

    #[test]
    fn forcing_presets() {
        assert_eq!(Forcing::parse("zero").unwrap(), Forcing::Zero);
        assert_eq!(Forcing::parse("constant:2").unwrap(), Forcing::Constant(2.0));
        assert_eq!(Forcing::parse("poly:3").unwrap().eval(2.0), 8.0);
        assert_eq!(Forcing::parse("sin:2").unwrap(), Forcing::Sin(2.0));
        assert!(Forcing::parse("poly").is_err());
        assert!(Forcing::parse("cosh:1").is_err());
    }

    #[test]
    fn backward_euler_endpoint() {
        let common = CommonArgs { steps: Some(256), eps: Some(1e-12), ..Default::default() };
        let s = settings(common.clone());
        let out = solve_problem(&args(common), &FileConfig::default(), &s).unwrap();
        let tau: f64 = 1.0 / 256.0;
        let exact = (1.0 + tau).powi(-256);
        assert!(out.report.stats.converged);
        assert!((out.report.endpoint - exact).abs() < 1e-10);
        assert!(out.report.max_deviation_sequential.unwrap() < 1e-10);
    }

    #[test]
    fn multiple_degrees_rejected() {
        let common = CommonArgs { pt: vec![0, 1], ..Default::default() };
        let s = settings(common.clone());
        assert!(matches!(solve_problem(&args(common), &FileConfig::default(), &s), Err(CliError::Usage(_))));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let common = CommonArgs { steps: Some(64), max_iters: Some(1), eps: Some(1e-12), ..Default::default() };
        let s = settings(common.clone());
        let out = solve_problem(&args(common), &FileConfig::default(), &s).unwrap();
        assert!(!out.report.stats.converged);
        assert_eq!(out.report.stats.iterations, 1);
    }

    #[test]
    fn levels_flag_reaches_hierarchy() {
        let common = CommonArgs { steps: Some(64), levels: Some("2".into()), ..Default::default() };
        let s = settings(common.clone());
        assert_eq!(s.levels, LevelCount::Count(2));
        assert_eq!(solve_problem(&args(common), &FileConfig::default(), &s).unwrap().report.levels, 2);
    }
}
