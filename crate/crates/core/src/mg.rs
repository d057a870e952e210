//! Time multigrid: hierarchy, transfers, damped block Jacobi smoothing,
//! two-grid and V-cycles.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::block::BlockVector;
use crate::dg::{assemble_local, forward_solve, GlobalSystem, LocalOperators};
use crate::error::{invalid, Result};
use crate::linalg::real_inverse;
use crate::par::Executor;
use crate::quadrature::gauss_legendre;
use crate::stability::DampingChoice;

/// Local transfer blocks between a fine step pair and one coarse step.
///
/// Prolongation writes `R_1^T c` into the first and `R_2^T c` into the
/// second fine step below a coarse step; restriction is its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfers {
    pub r1: DMatrix<f64>,
    pub r2: DMatrix<f64>,
}

/// L2-projection transfer blocks. They do not depend on `tau_fine`, which
/// is only validated.
pub fn build_transfers(basis: &BasisSpec, tau_fine: f64) -> Result<Transfers> {
    if !(tau_fine > 0.0) || !tau_fine.is_finite() {
        return invalid(format!("time step must be positive, got {tau_fine}"));
    }
    let n_t = basis.n_t();
    let gauss = gauss_legendre(n_t)?;
    let mut m = DMatrix::zeros(n_t, n_t);
    let mut m1 = DMatrix::zeros(n_t, n_t);
    let mut m2 = DMatrix::zeros(n_t, n_t);
    for (&x, &w) in gauss.nodes.iter().zip(&gauss.weights) {
        let fine = basis.values(x);
        let first = basis.values(0.5 * x);
        let second = basis.values(0.5 * (1.0 + x));
        for k in 0..n_t {
            for l in 0..n_t {
                m[(k, l)] += w * fine[l] * fine[k];
                m1[(k, l)] += w * first[l] * fine[k];
                m2[(k, l)] += w * second[l] * fine[k];
            }
        }
    }
    let m_inv = real_inverse(&m, "mass matrix")?;
    Ok(Transfers { r1: (&m_inv * m1).transpose(), r2: (&m_inv * m2).transpose() })
}

impl Transfers {
    /// `c_j = R_1 r_{2j} + R_2 r_{2j+1}`.
    pub fn restrict_into(&self, fine: &BlockVector, coarse: &mut BlockVector, exec: &Executor) -> Result<()> {
        check_pair(fine, coarse)?;
        let n_t = fine.n_t();
        let src = fine.as_slice();
        exec.for_each_block(coarse.as_mut_slice(), n_t, |j, c| {
            let a = &src[2 * j * n_t..(2 * j + 1) * n_t];
            let b = &src[(2 * j + 1) * n_t..(2 * j + 2) * n_t];
            for (k, ck) in c.iter_mut().enumerate() {
                let mut s = 0.0;
                for l in 0..n_t {
                    s += self.r1[(k, l)] * a[l] + self.r2[(k, l)] * b[l];
                }
                *ck = s;
            }
        });
        Ok(())
    }

    /// `u_{2j} += R_1^T c_j`, `u_{2j+1} += R_2^T c_j`.
    pub fn prolongate_add(&self, coarse: &BlockVector, fine: &mut BlockVector, exec: &Executor) -> Result<()> {
        check_pair(fine, coarse)?;
        let n_t = fine.n_t();
        let src = coarse.as_slice();
        exec.for_each_block(fine.as_mut_slice(), n_t, |n, u| {
            let c = &src[(n / 2) * n_t..(n / 2 + 1) * n_t];
            let r = if n % 2 == 0 { &self.r1 } else { &self.r2 };
            for (k, uk) in u.iter_mut().enumerate() {
                let mut s = 0.0;
                for l in 0..n_t {
                    s += r[(l, k)] * c[l];
                }
                *uk += s;
            }
        });
        Ok(())
    }
}

fn check_pair(fine: &BlockVector, coarse: &BlockVector) -> Result<()> {
    if fine.n_t() != coarse.n_t() || fine.n_blocks() != 2 * coarse.n_blocks() {
        return invalid(format!(
            "cannot transfer between {} fine and {} coarse steps",
            fine.n_blocks(),
            coarse.n_blocks()
        ));
    }
    Ok(())
}

/// How many levels to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LevelCount {
    Count(usize),
    /// Coarsen until the coarsest grid has at most the threshold of steps.
    #[default]
    Max,
}

/// Default largest coarsest grid for [`LevelCount::Max`].
pub const DEFAULT_COARSEST_STEPS: usize = 8;

/// Nested uniform grids, finest first. Level `l + 1` has half the steps of
/// level `l` and twice its step size.
#[derive(Debug, Clone)]
pub struct TimeHierarchy {
    systems: Vec<GlobalSystem>,
    transfers: Vec<Transfers>,
}

impl TimeHierarchy {
    pub fn new(basis: &BasisSpec, tau: f64, steps: usize, levels: LevelCount) -> Result<Self> {
        Self::with_coarsest(basis, tau, steps, levels, DEFAULT_COARSEST_STEPS)
    }

    pub fn with_coarsest(
        basis: &BasisSpec,
        tau: f64,
        steps: usize,
        levels: LevelCount,
        coarsest_max: usize,
    ) -> Result<Self> {
        let count = match levels {
            LevelCount::Count(c) => {
                if c < 2 {
                    return invalid(format!("a hierarchy needs at least 2 levels, got {c}"));
                }
                let factor = 1usize.checked_shl((c - 1) as u32).unwrap_or(0);
                if factor == 0 || steps % factor != 0 || steps / factor < 2 {
                    return invalid(format!("{steps} steps cannot be coarsened into {c} levels"));
                }
                c
            }
            LevelCount::Max => {
                let (mut n, mut c) = (steps, 1);
                while n % 2 == 0 && n / 2 >= 2 && n > coarsest_max.max(2) {
                    n /= 2;
                    c += 1;
                }
                if c < 2 {
                    return invalid(format!("{steps} steps cannot be coarsened"));
                }
                c
            }
        };
        let mut systems = Vec::with_capacity(count);
        let mut transfers = Vec::with_capacity(count - 1);
        for l in 0..count {
            let tau_l = tau * (1u64 << l) as f64;
            systems.push(GlobalSystem::new(assemble_local(basis, tau_l)?, steps >> l, false)?);
            if l + 1 < count {
                transfers.push(build_transfers(basis, tau_l)?);
            }
        }
        Ok(Self { systems, transfers })
    }

    pub fn levels(&self) -> usize {
        self.systems.len()
    }

    pub fn system(&self, level: usize) -> &GlobalSystem {
        &self.systems[level]
    }

    pub fn ops(&self, level: usize) -> &LocalOperators {
        &self.systems[level].ops
    }

    pub fn transfers(&self, level: usize) -> &Transfers {
        &self.transfers[level]
    }

    pub fn finest(&self) -> &GlobalSystem {
        &self.systems[0]
    }

    pub fn steps(&self) -> usize {
        self.systems[0].steps
    }

    pub fn n_t(&self) -> usize {
        self.systems[0].n_t()
    }
}

/// Solver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    pub nu1: usize,
    pub nu2: usize,
    pub damping: DampingChoice,
    pub levels: LevelCount,
    pub eps: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            nu1: 1,
            nu2: 1,
            damping: DampingChoice::Optimal,
            levels: LevelCount::Max,
            eps: 1e-8,
            max_iters: 250,
            seed: 42,
            workers: 1,
        }
    }
}

impl CycleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu1 + self.nu2 == 0 {
            return invalid("at least one smoothing step is required");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid(format!("tolerance must lie in (0, 1), got {}", self.eps));
        }
        if self.workers == 0 {
            return invalid("workers must be at least 1");
        }
        self.damping.validate()
    }

    /// Damping used on `level`; the optimal choice is recomputed per level.
    pub fn omega(&self, ops: &LocalOperators) -> f64 {
        self.damping.omega(ops.alpha())
    }
}

/// Accumulated wall time per cycle phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub smoothing: f64,
    pub residual: f64,
    pub transfer: f64,
    pub coarse: f64,
}

struct Clock<'a>(Option<&'a mut PhaseTimes>);

impl Clock<'_> {
    fn add(&mut self, pick: fn(&mut PhaseTimes) -> &mut f64, d: Duration) {
        if let Some(t) = self.0.as_deref_mut() {
            *pick(t) += d.as_secs_f64();
        }
    }
}

/// Outcome of [`solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub convergence_factor: f64,
    pub converged: bool,
    pub seed: u64,
    pub workers: usize,
    pub times: PhaseTimes,
    pub total_time: f64,
}

impl SolveStats {
    /// `max_{k >= 1} r_{k+1} / r_k` over the recorded history `r_0, r_1, ...`.
    /// The first cycle from the initial guess is left out unless it is the
    /// only one.
    pub fn max_ratio(residuals: &[f64]) -> f64 {
        let ratios: Vec<f64> = residuals
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect();
        let tail = if ratios.len() > 1 { &ratios[1..] } else { &ratios[..] };
        tail.iter().copied().fold(0.0, f64::max)
    }
}

/// Uniform `[0, 1)` coefficients from a seeded generator, in block order.
pub fn random_guess(steps: usize, n_t: usize, seed: u64) -> BlockVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BlockVector::from_fn(steps, n_t, |_, _| rng.random::<f64>())
}

/// `nu` damped block Jacobi sweeps `u <- u + omega D^{-1} (f - L u)`.
pub fn block_jacobi_sweep(
    sys: &GlobalSystem,
    u: &mut BlockVector,
    f: &BlockVector,
    omega: f64,
    nu: usize,
    exec: &Executor,
) -> Result<()> {
    if !u.same_shape(f) || u.n_blocks() != sys.steps || u.n_t() != sys.n_t() {
        return invalid("smoother operands do not match the system");
    }
    if nu == 0 {
        return Ok(());
    }
    let n_t = sys.n_t();
    let ops = &sys.ops;
    let mut prev = u.clone();
    for sweep in 0..nu {
        if sweep > 0 {
            prev.as_mut_slice().copy_from_slice(u.as_slice());
        }
        let old = prev.as_slice();
        let fs = f.as_slice();
        let last = sys.steps - 1;
        exec.for_each_block(u.as_mut_slice(), n_t, |n, y| {
            let mine = &old[n * n_t..(n + 1) * n_t];
            let mut rhs = fs[n * n_t..(n + 1) * n_t].to_vec();
            let incoming = if n > 0 {
                Some(ops.right_value(&old[(n - 1) * n_t..n * n_t]))
            } else if sys.periodic {
                Some(ops.right_value(&old[last * n_t..]))
            } else {
                None
            };
            if let Some(v) = incoming {
                for (r, l) in rhs.iter_mut().zip(ops.left()) {
                    *r += l * v;
                }
            }
            ops.solve_km_in_place(&mut rhs);
            for ((yk, &ok), rk) in y.iter_mut().zip(mine).zip(&rhs) {
                *yk = ok + omega * (rk - ok);
            }
        });
    }
    Ok(())
}

fn cycle(
    hier: &TimeHierarchy,
    level: usize,
    u: &mut BlockVector,
    f: &BlockVector,
    cfg: &CycleConfig,
    exec: &Executor,
    recurse: bool,
    clock: &mut Clock<'_>,
) -> Result<()> {
    if level + 1 >= hier.levels() {
        return invalid(format!("level {level} has no coarser level"));
    }
    let sys = hier.system(level);
    let omega = cfg.omega(&sys.ops);

    let t = Instant::now();
    block_jacobi_sweep(sys, u, f, omega, cfg.nu1, exec)?;
    clock.add(|p| &mut p.smoothing, t.elapsed());

    let t = Instant::now();
    let mut r = BlockVector::zeros(sys.steps, sys.n_t());
    sys.residual_into(u, f, &mut r, exec)?;
    clock.add(|p| &mut p.residual, t.elapsed());

    let coarse = hier.system(level + 1);
    let t = Instant::now();
    let mut rc = BlockVector::zeros(coarse.steps, coarse.n_t());
    hier.transfers(level).restrict_into(&r, &mut rc, exec)?;
    clock.add(|p| &mut p.transfer, t.elapsed());

    let ec = if recurse && level + 2 < hier.levels() {
        let mut ec = BlockVector::zeros(coarse.steps, coarse.n_t());
        cycle(hier, level + 1, &mut ec, &rc, cfg, exec, true, clock)?;
        ec
    } else {
        let t = Instant::now();
        let ec = forward_solve(coarse, &rc)?;
        clock.add(|p| &mut p.coarse, t.elapsed());
        ec
    };

    let t = Instant::now();
    hier.transfers(level).prolongate_add(&ec, u, exec)?;
    clock.add(|p| &mut p.transfer, t.elapsed());

    let t = Instant::now();
    block_jacobi_sweep(sys, u, f, omega, cfg.nu2, exec)?;
    clock.add(|p| &mut p.smoothing, t.elapsed());
    Ok(())
}

/// One two-grid cycle on `level` with an exact solve on `level + 1`.
pub fn two_grid_cycle(
    hier: &TimeHierarchy,
    level: usize,
    u: &mut BlockVector,
    f: &BlockVector,
    cfg: &CycleConfig,
    exec: &Executor,
) -> Result<()> {
    cycle(hier, level, u, f, cfg, exec, false, &mut Clock(None))
}

/// One V-cycle starting on the finest level.
pub fn v_cycle(hier: &TimeHierarchy, u: &mut BlockVector, f: &BlockVector, cfg: &CycleConfig, exec: &Executor) -> Result<()> {
    cycle(hier, 0, u, f, cfg, exec, true, &mut Clock(None))
}

/// Iterates V-cycles from `guess` until `||r_k|| <= eps ||r_0||` or
/// `max_iters`. Residuals at rounding level of `f` also count as converged.
pub fn solve(
    hier: &TimeHierarchy,
    f: &BlockVector,
    guess: &BlockVector,
    cfg: &CycleConfig,
) -> Result<(BlockVector, SolveStats)> {
    cfg.validate()?;
    solve_with(&Executor::new(cfg.workers), hier, f, guess, cfg)
}

pub fn solve_with(
    exec: &Executor,
    hier: &TimeHierarchy,
    f: &BlockVector,
    guess: &BlockVector,
    cfg: &CycleConfig,
) -> Result<(BlockVector, SolveStats)> {
    cfg.validate()?;
    let start = Instant::now();
    let sys = hier.finest();
    let mut u = guess.clone();
    let mut r = BlockVector::zeros(sys.steps, sys.n_t());
    let mut times = PhaseTimes::default();

    sys.residual_into(&u, f, &mut r, exec)?;
    let r0 = r.norm();
    let target = (cfg.eps * r0).max(1e-14 * f.norm());
    let mut residuals = vec![r0];
    let mut converged = r0 <= target;
    while !converged && residuals.len() <= cfg.max_iters {
        cycle(hier, 0, &mut u, f, cfg, exec, true, &mut Clock(Some(&mut times)))?;
        let t = Instant::now();
        sys.residual_into(&u, f, &mut r, exec)?;
        times.residual += t.elapsed().as_secs_f64();
        let rk = r.norm();
        residuals.push(rk);
        converged = rk <= target;
    }
    let iterations = residuals.len() - 1;
    if !converged {
        log::warn!("no convergence after {iterations} cycles (residual {:e})", residuals[iterations]);
    }
    let stats = SolveStats {
        iterations,
        convergence_factor: SolveStats::max_ratio(&residuals),
        residuals,
        converged,
        seed: cfg.seed,
        workers: exec.workers(),
        times,
        total_time: start.elapsed().as_secs_f64(),
    };
    Ok((u, stats))
}

/// Measured factor `max_{k >= 1} ||r_{k+1}|| / ||r_k||` for `f = 0` from a random
/// start seeded by `cfg.seed`, iterating until the residual dropped by
/// `cfg.eps` or `cfg.max_iters` cycles ran.
pub fn measure_convergence_factor(hier: &TimeHierarchy, cfg: &CycleConfig) -> Result<f64> {
    measure_convergence_factor_with(&Executor::new(cfg.workers), hier, cfg).map(|s| s.convergence_factor)
}

pub fn measure_convergence_factor_with(exec: &Executor, hier: &TimeHierarchy, cfg: &CycleConfig) -> Result<SolveStats> {
    let f = BlockVector::zeros(hier.steps(), hier.n_t());
    let guess = random_guess(hier.steps(), hier.n_t(), cfg.seed);
    solve_with(exec, hier, &f, &guess, cfg).map(|(_, s)| s)
}
