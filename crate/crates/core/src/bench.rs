//! Strong and weak scaling runs of the multigrid solver on a shared-memory
//! worker pool.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::block::BlockVector;
use crate::error::{invalid, Error, Result};
use crate::mg::{random_guess, solve_with, CycleConfig, LevelCount, TimeHierarchy};
use crate::par::{available_workers, Executor};

/// Largest polynomial degree accepted by the harness.
pub const MAX_BENCH_DEGREE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    /// Fixed total problem size.
    Strong,
    /// Fixed number of steps per worker.
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPlan {
    pub mode: ScalingMode,
    pub workers: Vec<usize>,
    /// Total steps for strong scaling, steps per worker for weak scaling.
    pub steps: usize,
    pub degrees: Vec<usize>,
    pub tau: f64,
    pub eps: f64,
    pub repetitions: usize,
    pub nu1: usize,
    pub nu2: usize,
    pub seed: u64,
}

impl ScalingPlan {
    pub fn new(mode: ScalingMode, workers: Vec<usize>, steps: usize) -> Self {
        Self {
            mode,
            workers,
            steps,
            degrees: vec![0],
            tau: 1e-6,
            eps: 1e-8,
            repetitions: 3,
            nu1: 1,
            nu2: 1,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 3 {
            return invalid(format!("at least 3 repetitions are required, got {}", self.repetitions));
        }
        if self.workers.is_empty() {
            return invalid("no worker counts given");
        }
        if self.workers.iter().any(|w| !w.is_power_of_two()) {
            return invalid(format!("worker counts must be powers of two: {:?}", self.workers));
        }
        if self.workers.windows(2).any(|w| w[1] < w[0]) {
            return invalid(format!("worker counts must be nondecreasing: {:?}", self.workers));
        }
        if self.degrees.is_empty() || self.degrees.iter().any(|&p| p > MAX_BENCH_DEGREE) {
            return invalid(format!("degrees must be between 0 and {MAX_BENCH_DEGREE}: {:?}", self.degrees));
        }
        let max_workers = *self.workers.last().unwrap();
        if self.mode == ScalingMode::Strong && self.steps % max_workers != 0 {
            return invalid(format!("{} steps are not divisible by {max_workers} workers", self.steps));
        }
        if self.steps < 4 {
            return invalid(format!("at least 4 steps are required, got {}", self.steps));
        }
        if !(self.tau > 0.0) {
            return invalid(format!("time step must be positive, got {}", self.tau));
        }
        self.cycle(1).validate()
    }

    fn cycle(&self, workers: usize) -> CycleConfig {
        CycleConfig {
            nu1: self.nu1,
            nu2: self.nu2,
            eps: self.eps,
            seed: self.seed,
            workers,
            levels: LevelCount::Max,
            ..CycleConfig::default()
        }
    }

    fn steps_for(&self, workers: usize) -> usize {
        match self.mode {
            ScalingMode::Strong => self.steps,
            ScalingMode::Weak => self.steps * workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub workers: usize,
    pub steps: usize,
    pub p_t: usize,
    pub median_seconds: f64,
    /// `t(first) / t(workers)`.
    pub speedup: f64,
    /// `t(workers) / t(first)`.
    pub time_ratio: f64,
    pub iterations: usize,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub mode: ScalingMode,
    pub host_threads: usize,
    pub rows: Vec<ScalingRow>,
    pub warnings: Vec<String>,
}

pub const CSV_HEADER: [&str; 9] =
    ["mode", "p_t", "workers", "steps", "median_seconds", "speedup", "time_ratio", "iterations", "samples"];

impl ScalingTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("failed to write csv: {e}"));
        w.write_record(CSV_HEADER).map_err(io)?;
        let mode = match self.mode {
            ScalingMode::Strong => "strong",
            ScalingMode::Weak => "weak",
        };
        for r in &self.rows {
            let samples: Vec<String> = r.samples.iter().map(|s| format!("{s:.6e}")).collect();
            w.write_record([
                mode.to_string(),
                r.p_t.to_string(),
                r.workers.to_string(),
                r.steps.to_string(),
                format!("{:.6e}", r.median_seconds),
                format!("{:.4}", r.speedup),
                format!("{:.4}", r.time_ratio),
                r.iterations.to_string(),
                samples.join(";"),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("failed to write csv: {e}")))?;
        Ok(())
    }

    /// Rows for one degree, in plan order.
    pub fn rows_for(&self, p_t: usize) -> impl Iterator<Item = &ScalingRow> {
        self.rows.iter().filter(move |r| r.p_t == p_t)
    }
}

pub fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

struct Measurement {
    samples: Vec<f64>,
    iterations: usize,
    solution: BlockVector,
}

fn measure(plan: &ScalingPlan, p_t: usize, workers: usize) -> Result<Measurement> {
    let steps = plan.steps_for(workers);
    let basis = BasisSpec::lagrange(p_t);
    let hier = TimeHierarchy::new(&basis, plan.tau, steps, LevelCount::Max)?;
    let exec = Executor::new(workers);
    let cfg = plan.cycle(workers);
    let f = BlockVector::zeros(steps, basis.n_t());
    let guess = random_guess(steps, basis.n_t(), plan.seed);
    let mut samples = Vec::with_capacity(plan.repetitions);
    let mut last = None;
    for _ in 0..plan.repetitions {
        let start = Instant::now();
        let (u, stats) = solve_with(&exec, &hier, &f, &guess, &cfg)?;
        samples.push(start.elapsed().as_secs_f64());
        if !stats.converged {
            log::warn!("p_t={p_t} workers={workers}: solver did not converge");
        }
        last = Some((u, stats.iterations));
    }
    let (solution, iterations) = last.expect("at least one repetition");
    Ok(Measurement { samples, iterations, solution })
}

fn run(plan: &ScalingPlan, mode: ScalingMode) -> Result<ScalingTable> {
    plan.validate()?;
    if plan.mode != mode {
        return invalid("plan mode does not match the requested scaling study");
    }
    let host = available_workers();
    let mut warnings = Vec::new();
    for &w in &plan.workers {
        if w > host {
            let msg = format!("{w} workers requested but the host exposes {host} hardware threads");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let mut rows = Vec::new();
    for &p_t in &plan.degrees {
        let mut base: Option<(f64, Measurement)> = None;
        for &w in &plan.workers {
            let m = measure(plan, p_t, w)?;
            let t = median(&m.samples);
            let t0 = base.as_ref().map_or(t, |b| b.0);
            if let Some((_, b)) = &base {
                if mode == ScalingMode::Strong && b.solution != m.solution {
                    let msg = format!("p_t={p_t}: solution with {w} workers differs from the baseline");
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
            }
            if let Some(prev) = rows.last().filter(|r: &&ScalingRow| r.p_t == p_t) {
                if mode == ScalingMode::Strong && t > prev.median_seconds {
                    warnings.push(format!("p_t={p_t}: time increased from {} to {w} workers", prev.workers));
                }
            }
            rows.push(ScalingRow {
                workers: w,
                steps: plan.steps_for(w),
                p_t,
                median_seconds: t,
                speedup: t0 / t,
                time_ratio: t / t0,
                iterations: m.iterations,
                samples: m.samples.clone(),
            });
            if base.is_none() {
                base = Some((t, m));
            }
        }
    }
    Ok(ScalingTable { mode, host_threads: host, rows, warnings })
}

/// Solves the same problem with every worker count of the plan.
pub fn run_strong_scaling(plan: &ScalingPlan) -> Result<ScalingTable> {
    run(plan, ScalingMode::Strong)
}

/// Solves problems of `workers * steps` steps for every worker count.
pub fn run_weak_scaling(plan: &ScalingPlan) -> Result<ScalingTable> {
    run(plan, ScalingMode::Weak)
}
