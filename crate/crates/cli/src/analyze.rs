//! `tmg analyze`: theory sweeps over tau.

use clap::Args;
use serde::Serialize;
use tmg_core::basis::BasisSpec;
use tmg_core::fourier::predicted_rho_with;
use tmg_core::stability::smoothing_factor;
use tmg_core::Executor;

use crate::config::{pick, FileConfig};
use crate::output::{log_grid, write_rows};
use crate::{CliError, CliResult, CommonArgs, Settings};

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Single time step; overrides the tau range.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub tau_min: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    /// Number of log-spaced tau values.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeRow {
    pub tau: f64,
    pub p_t: usize,
    pub nu1: usize,
    pub nu2: usize,
    pub omega: f64,
    pub alpha: f64,
    pub rho_theory: f64,
    pub theta_max: f64,
    pub mu_s: f64,
}

pub const DEFAULT_ANALYSIS_STEPS: usize = 1024;

pub fn tau_values(args: &AnalyzeArgs, file: &FileConfig) -> CliResult<Vec<f64>> {
    if let Some(tau) = args.tau.or(file.tau) {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(CliError::Usage(format!("tau must be positive, got {tau}")));
        }
        return Ok(vec![tau]);
    }
    let lo = pick(args.tau_min, file.tau_min, 1e-6);
    let hi = pick(args.tau_max, file.tau_max, 1e6);
    let n = pick(args.points, file.points, 49);
    if !(lo > 0.0 && hi.is_finite()) || lo > hi || n == 0 || (n > 1 && lo == hi) {
        return Err(CliError::Usage(format!("empty tau range [{lo}, {hi}] with {n} points")));
    }
    Ok(log_grid(lo, hi, n))
}

pub fn rows(settings: &Settings, taus: &[f64]) -> CliResult<Vec<AnalyzeRow>> {
    let exec = Executor::new(settings.single_worker()?);
    let n_l = settings.steps.unwrap_or(DEFAULT_ANALYSIS_STEPS);
    let mut out = Vec::new();
    for &p in settings.pt.as_deref().unwrap_or(&[0]) {
        let basis = BasisSpec::new(p, Default::default())?;
        for &tau in taus {
            let rho = predicted_rho_with(&exec, &basis, tau, n_l, settings.nu1, settings.nu2, settings.damping)?;
            let smooth = smoothing_factor(&basis, tau, settings.damping, n_l)?;
            out.push(AnalyzeRow {
                tau,
                p_t: p,
                nu1: settings.nu1,
                nu2: settings.nu2,
                omega: rho.omega,
                alpha: smooth.alpha,
                rho_theory: rho.rho,
                theta_max: rho.theta_max,
                mu_s: smooth.mu_s,
            });
        }
    }
    Ok(out)
}

pub fn run(args: &AnalyzeArgs) -> CliResult<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let settings = Settings::resolve(&args.common, &file)?;
    let taus = tau_values(args, &file)?;
    let rows = rows(&settings, &taus)?;
    println!("{:>4} {:>12} {:>10} {:>12} {:>12} {:>10}", "p_t", "tau", "omega", "rho_theory", "theta_max", "mu_s");
    for r in &rows {
        println!(
            "{:>4} {:>12.4e} {:>10.6} {:>12.4e} {:>12.6} {:>10.6}",
            r.p_t, r.tau, r.omega, r.rho_theory, r.theta_max, r.mu_s
        );
    }
    let path = write_rows(&settings.out, "analyze", settings.format, &rows)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(extra: &[&str]) -> AnalyzeArgs {
        use clap::Parser;
        #[derive(Parser)]
        struct Wrap {
            #[command(flatten)]
            a: AnalyzeArgs,
        }
        let mut argv = vec!["x"];
        argv.extend_from_slice(extra);
        Wrap::parse_from(argv).a
    }

    #[test]
    fn closed_form_row_at_unit_step() {
        let a = args(&["--pt", "0", "--nu", "1"]);
        let s = Settings::resolve(&a.common, &FileConfig::default()).unwrap();
        let taus = tau_values(&a, &FileConfig::default()).unwrap();
        let rows = rows(&s, &taus).unwrap();
        assert_eq!(rows.len(), 49);
        let unit = rows.iter().find(|r| r.tau == 1.0).unwrap();
        assert!((unit.rho_theory - 0.2).abs() < 1e-12);
    }

    #[test]
    fn linear_elements_dip_near_three() {
        let a = args(&["--pt", "1", "--nu", "1", "--tau-min", "1", "--tau-max", "10"]);
        let s = Settings::resolve(&a.common, &FileConfig::default()).unwrap();
        let rows = rows(&s, &tau_values(&a, &FileConfig::default()).unwrap()).unwrap();
        let min = rows.iter().min_by(|x, y| x.rho_theory.total_cmp(&y.rho_theory)).unwrap();
        assert!(min.rho_theory <= 1e-3, "{min:?}");
        assert!((min.tau - 3.0).abs() < 0.5);
    }

    #[test]
    fn empty_range_is_rejected() {
        let a = args(&["--tau-min", "10", "--tau-max", "1"]);
        assert!(matches!(tau_values(&a, &FileConfig::default()), Err(CliError::Usage(_))));
        let a = args(&["--points", "0"]);
        assert!(matches!(tau_values(&a, &FileConfig::default()), Err(CliError::Usage(_))));
    }
}
