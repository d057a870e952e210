//! `tmg bench`: strong and weak scaling tables.

use clap::{Args, ValueEnum};
use tmg_core::bench::{run_strong_scaling, run_weak_scaling, ScalingMode, ScalingPlan, ScalingTable};

use crate::config::{pick, FileConfig, Format};
use crate::output::write_json;
use crate::{CliError, CliResult, CommonArgs, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Strong,
    Weak,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Timed repetitions per configuration (at least 3).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Time step size.
    #[arg(long)]
    pub tau: Option<f64>,
}

pub fn plan(args: &BenchArgs, file: &FileConfig, s: &Settings) -> CliResult<ScalingPlan> {
    let mode = match (args.mode, file.mode.as_deref()) {
        (Some(m), _) => m,
        (None, None) => Mode::Strong,
        (None, Some(text)) => Mode::from_str(text, true).map_err(CliError::Usage)?,
    };
    let (mode, default_steps) = match mode {
        Mode::Strong => (ScalingMode::Strong, 1 << 16),
        Mode::Weak => (ScalingMode::Weak, 1 << 14),
    };
    let workers = s.workers.clone().unwrap_or_else(|| vec![1, 2, 4]);
    let mut plan = ScalingPlan::new(mode, workers, s.steps.unwrap_or(default_steps));
    plan.degrees = s.pt.clone().unwrap_or_else(|| vec![0]);
    plan.tau = pick(args.tau, file.tau, plan.tau);
    plan.eps = s.eps;
    plan.repetitions = pick(args.reps, file.reps, 3);
    plan.nu1 = s.nu1;
    plan.nu2 = s.nu2;
    plan.seed = s.seed;
    plan.validate()?;
    Ok(plan)
}

fn print_table(table: &ScalingTable) {
    println!("{:>4} {:>8} {:>10} {:>12} {:>9} {:>10} {:>6}", "p_t", "workers", "steps", "median_s", "speedup", "time_ratio", "iters");
    for r in &table.rows {
        println!(
            "{:>4} {:>8} {:>10} {:>12.6} {:>9.3} {:>10.3} {:>6}",
            r.p_t, r.workers, r.steps, r.median_seconds, r.speedup, r.time_ratio, r.iterations
        );
    }
    for w in &table.warnings {
        log::warn!("{w}");
        eprintln!("warning: {w}");
    }
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let s = Settings::resolve(&args.common, &file)?;
    let plan = plan(args, &file, &s)?;
    let table = match plan.mode {
        ScalingMode::Strong => run_strong_scaling(&plan)?,
        ScalingMode::Weak => run_weak_scaling(&plan)?,
    };
    print_table(&table);
    let stem = match plan.mode {
        ScalingMode::Strong => "bench-strong",
        ScalingMode::Weak => "bench-weak",
    };
    std::fs::create_dir_all(&s.out)?;
    let path = s.out.join(format!("{stem}.{}", s.format.extension()));
    match s.format {
        Format::Csv => table.write_csv(std::fs::File::create(&path)?)?,
        Format::Json => write_json(&path, &table)?,
    }
    println!("wrote {} rows to {}", table.rows.len(), path.display());
    Ok(())
}
