//! `tmg verify`: theory-versus-numerics cross-checks.

use clap::{Args, ValueEnum};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use tmg_core::basis::BasisSpec;
use tmg_core::dense::{prolongation_matrix, restriction_matrix, smoother_matrix, system_matrix, two_grid_matrix};
use tmg_core::dg::{add_initial_value, assemble_local, forward_solve, rhs_moments, GlobalSystem, TimeGrid};
use tmg_core::fourier::{
    fourier_mode, frequencies, gamma_raw, predicted_rho_with, symbol_smoother, symbol_system, transfer_symbols,
    twogrid_symbol,
};
use tmg_core::linalg::{eigenvalues, to_complex, CMatrix};
use tmg_core::mg::{build_transfers, measure_convergence_factor_with, random_guess, CycleConfig, LevelCount, TimeHierarchy};
use tmg_core::stability::{all_frequency_bound, smoothing_factor, DampingChoice};
use tmg_core::Executor;

use crate::config::FileConfig;
use crate::output::{log_grid, write_rows};
use crate::{CliError, CliResult, CommonArgs, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Symbols,
    Rho,
    Smoothing,
    Order,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Symbols => "symbols",
            Suite::Rho => "rho",
            Suite::Smoothing => "smoothing",
            Suite::Order => "order",
        }
    }

    fn default_degrees(self) -> Vec<usize> {
        match self {
            Suite::Symbols | Suite::Order => vec![0, 1, 2],
            Suite::Rho => vec![0],
            Suite::Smoothing => (0..=5).collect(),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    pub suite: Suite,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// One assertion: `value <= tolerance` (or within the band for slopes).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub suite: &'static str,
    pub check: String,
    pub p_t: usize,
    pub tau: f64,
    pub nu: usize,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn row(suite: Suite, check: &str, p_t: usize, tau: f64, nu: usize, value: f64, tolerance: f64) -> CheckRow {
    CheckRow {
        suite: suite.name(),
        check: check.to_string(),
        p_t,
        tau,
        nu,
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

fn cvec(n: usize, seed: u64) -> Vec<Complex64> {
    let re = random_guess(1, n, seed);
    let im = random_guess(1, n, seed ^ 0x9e37_79b9);
    re.as_slice().iter().zip(im.as_slice()).map(|(&a, &b)| Complex64::new(a - 0.5, b - 0.5)).collect()
}

fn mat_vec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (m * DVector::from_column_slice(v)).as_slice().to_vec()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest distance in a greedy matching of `a` (largest modulus first) to `b`.
fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[j].norm().total_cmp(&a[i].norm()));
    let mut worst: f64 = 0.0;
    for i in order {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, z)| (j, (z - a[i]).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((j, d)) => {
                used[j] = true;
                worst = worst.max(d);
            }
            None => return f64::INFINITY,
        }
    }
    if a.len() == b.len() {
        worst
    } else {
        f64::INFINITY
    }
}

fn symbols(degrees: &[usize], s: &Settings) -> CliResult<Vec<CheckRow>> {
    let n_l = 16;
    let nu = s.nu1;
    let mut rows = Vec::new();
    let mut seed = s.seed;
    for &p in degrees {
        let basis = BasisSpec::lagrange(p);
        let n_t = p + 1;
        for tau in [0.1, 1.0, 10.0] {
            let fine = assemble_local(&basis, tau)?;
            let coarse = assemble_local(&basis, 2.0 * tau)?;
            let t = build_transfers(&basis, tau)?;
            let omega = s.damping.omega(fine.alpha());
            let l = to_complex(&system_matrix(&fine, n_l, true));
            let sm = to_complex(&smoother_matrix(&fine, n_l, true, omega)?);
            let r = to_complex(&restriction_matrix(&t, n_l));
            let pr = to_complex(&prolongation_matrix(&t, n_l));
            let freqs = frequencies(n_l)?;
            let (mut e_sys, mut e_smooth, mut e_restrict, mut e_prolong) = (0f64, 0f64, 0f64, 0f64);
            for theta in freqs.all() {
                seed += 1;
                let v = cvec(n_t, seed);
                let mode = fourier_mode(n_l, &v, theta);
                let want = fourier_mode(n_l, &mat_vec(&symbol_system(&fine, theta).matrix, &v), theta);
                e_sys = e_sys.max(max_diff(&mat_vec(&l, mode.as_slice()), want.as_slice()));
                let want = fourier_mode(n_l, &mat_vec(&symbol_smoother(&fine, theta, omega, 1).matrix, &v), theta);
                e_smooth = e_smooth.max(max_diff(&mat_vec(&sm, mode.as_slice()), want.as_slice()));
                let (r_hat, _) = transfer_symbols(&t, theta);
                let want = fourier_mode(n_l / 2, &mat_vec(&r_hat, &v), 2.0 * theta);
                e_restrict = e_restrict.max(max_diff(&mat_vec(&r, mode.as_slice()), want.as_slice()));
            }
            let mut union = Vec::new();
            for theta in freqs.low() {
                seed += 1;
                let w = cvec(n_t, seed);
                let coarse_mode = fourier_mode(n_l / 2, &w, 2.0 * theta);
                let (_, p_lo) = transfer_symbols(&t, theta);
                let (_, p_hi) = transfer_symbols(&t, gamma_raw(theta));
                let lo = fourier_mode(n_l, &mat_vec(&p_lo, &w), theta);
                let hi = fourier_mode(n_l, &mat_vec(&p_hi, &w), gamma_raw(theta));
                let want: Vec<Complex64> = lo.as_slice().iter().zip(hi.as_slice()).map(|(a, b)| a + b).collect();
                e_prolong = e_prolong.max(max_diff(&mat_vec(&pr, coarse_mode.as_slice()), &want));
                union.extend(eigenvalues(&twogrid_symbol(&fine, &coarse, &t, theta, nu, s.nu2, omega)?.matrix));
            }
            let dense = two_grid_matrix(&fine, &coarse, &t, n_l, true, nu, s.nu2, omega)?;
            let e_spec = spectrum_distance(&union, &eigenvalues(&to_complex(&dense)));
            rows.push(row(Suite::Symbols, "system", p, tau, nu, e_sys, 1e-12));
            rows.push(row(Suite::Symbols, "smoother", p, tau, nu, e_smooth, 1e-12));
            rows.push(row(Suite::Symbols, "restriction", p, tau, nu, e_restrict, 1e-12));
            rows.push(row(Suite::Symbols, "prolongation", p, tau, nu, e_prolong, 1e-12));
            rows.push(row(Suite::Symbols, "two_grid_spectrum", p, tau, nu, e_spec, 1e-9));
        }
    }
    Ok(rows)
}

fn rho(degrees: &[usize], s: &Settings, exec: &Executor) -> CliResult<Vec<CheckRow>> {
    let n_l = s.steps.unwrap_or(1024);
    let mut rows = Vec::new();
    for &p in degrees {
        let basis = BasisSpec::lagrange(p);
        for nu in [1, 2, 5] {
            for tau in [1e-4, 1e-2, 1.0, 1e2] {
                let hier = TimeHierarchy::new(&basis, tau, n_l, LevelCount::Count(2))?;
                let cfg = CycleConfig {
                    nu1: nu,
                    nu2: nu,
                    damping: s.damping,
                    levels: LevelCount::Count(2),
                    eps: 1e-100,
                    max_iters: s.max_iters,
                    seed: s.seed,
                    workers: exec.workers(),
                };
                let measured = measure_convergence_factor_with(exec, &hier, &cfg)?.convergence_factor;
                let predicted = predicted_rho_with(exec, &basis, tau, n_l, nu, nu, s.damping)?.rho;
                let rel = (measured - predicted).abs() / predicted.max(f64::MIN_POSITIVE);
                rows.push(row(Suite::Rho, "measured_vs_predicted", p, tau, nu, rel, 0.1));
                if p == 0 && nu == 1 && s.damping == DampingChoice::Optimal {
                    let exact = 1.0 / (2.0 + 2.0 * tau + tau * tau);
                    rows.push(row(Suite::Rho, "closed_form", p, tau, nu, (predicted - exact).abs() / exact, 1e-9));
                }
            }
        }
    }
    Ok(rows)
}

fn smoothing(degrees: &[usize], s: &Settings) -> CliResult<Vec<CheckRow>> {
    let n_l = s.steps.unwrap_or(1024);
    let mut rows = Vec::new();
    for &p in degrees {
        let basis = BasisSpec::lagrange(p);
        let (mut mu, mut all, mut alpha) = ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0));
        for tau in log_grid(1e-6, 1e6, 49) {
            let r = smoothing_factor(&basis, tau, DampingChoice::Optimal, n_l)?;
            if r.mu_s > mu.0 {
                mu = (r.mu_s, tau);
            }
            let excess = r.rho_all - all_frequency_bound(r.alpha);
            if excess > all.0 || all.1 == 0.0 {
                all = (excess, tau);
            }
            let out_of_range = (r.alpha.abs() - 1.0).max(0.0);
            if out_of_range > alpha.0 || alpha.1 == 0.0 {
                alpha = (out_of_range, tau);
            }
        }
        rows.push(row(Suite::Smoothing, "mu_s", p, mu.1, 1, mu.0, 1.0 / 2f64.sqrt() + 1e-12));
        rows.push(row(Suite::Smoothing, "all_frequency_excess", p, all.1, 1, all.0, 1e-12));
        rows.push(row(Suite::Smoothing, "alpha_excess", p, alpha.1, 1, alpha.0, 1e-12));
    }
    Ok(rows)
}

/// Endpoint error for `u' + u = cos t`, `u(0) = 1` on `[0, 1]`.
fn endpoint_error(p: usize, steps: usize) -> CliResult<f64> {
    let basis = BasisSpec::lagrange(p);
    let grid = TimeGrid::uniform(1.0, steps)?;
    let sys = GlobalSystem::new(assemble_local(&basis, grid.tau)?, steps, false)?;
    let mut rhs = rhs_moments(f64::cos, &grid, &basis);
    add_initial_value(&mut rhs, &sys.ops, 1.0);
    let u = forward_solve(&sys, &rhs)?;
    let exact = 0.5 * (1f64.cos() + 1f64.sin()) + 0.5 * (-1f64).exp();
    Ok((basis.evaluate(u.block(steps - 1), 1.0) - exact).abs())
}

fn order(degrees: &[usize]) -> CliResult<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for &p in degrees {
        if p > 3 {
            return Err(CliError::Usage(format!("order check supports p_t <= 3, got {p}")));
        }
        let coarse = [64, 16, 8, 4][p];
        let slope = (endpoint_error(p, coarse)? / endpoint_error(p, 2 * coarse)?).log2();
        let expect = (2 * p + 1) as f64;
        let mut r = row(Suite::Order, "endpoint_slope", p, 1.0 / coarse as f64, 0, (slope - expect).abs(), 0.2);
        r.check = format!("endpoint_slope={slope:.3}");
        rows.push(r);
    }
    Ok(rows)
}

pub fn checks(suite: Suite, s: &Settings) -> CliResult<Vec<CheckRow>> {
    let degrees = s.pt.clone().unwrap_or_else(|| suite.default_degrees());
    let exec = Executor::new(s.single_worker()?);
    match suite {
        Suite::Symbols => symbols(&degrees, s),
        Suite::Rho => rho(&degrees, s, &exec),
        Suite::Smoothing => smoothing(&degrees, s),
        Suite::Order => order(&degrees),
    }
}

pub fn run(args: &VerifyArgs) -> CliResult<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let settings = Settings::resolve(&args.common, &file)?;
    let rows = checks(args.suite, &settings)?;
    println!("{:<6} {:<28} {:>4} {:>10} {:>3} {:>12} {:>10}", "result", "check", "p_t", "tau", "nu", "value", "tolerance");
    for r in &rows {
        println!(
            "{:<6} {:<28} {:>4} {:>10.3e} {:>3} {:>12.3e} {:>10.1e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.check,
            r.p_t,
            r.tau,
            r.nu,
            r.value,
            r.tolerance
        );
    }
    let path = write_rows(&settings.out, &format!("verify-{}", args.suite.name()), settings.format, &rows)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} at (p_t={}, tau={:e}, nu={})", r.check, r.p_t, r.tau, r.nu))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}
