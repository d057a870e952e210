//! Blockwise Fourier analysis of the periodic time-multigrid operators.
//!
//! A blockwise Fourier mode with frequency `theta` has blocks
//! `psi_n = U (e^{i n theta}, ..., e^{i n theta})^T`. Every operator of the
//! two-grid cycle maps such modes (or pairs of modes `{theta, gamma(theta)}`)
//! into themselves, acting through a small complex matrix, its symbol.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::block::{BlockVector, Scalar};
use crate::dg::{assemble_local, LocalOperators};
use crate::error::{invalid, Result};
use crate::linalg::{inverse, matrix_power, spectral_radius, to_complex, CMatrix};
use crate::mg::{build_transfers, Transfers};
use crate::par::Executor;
use crate::stability::{alpha, DampingChoice};

/// Frequencies `theta_k = 2 k pi / N_L`, `k = 1 - N_L/2 ..= N_L/2`, split
/// into low (`(-pi/2, pi/2]`) and high.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySet {
    n_l: usize,
}

fn is_low_index(k: i64, n_l: usize) -> bool {
    // theta in (-pi/2, pi/2]  <=>  -N/4 < k <= N/4
    let n = n_l as i64;
    4 * k > -n && 4 * k <= n
}

impl FrequencySet {
    /// Frequency set for any even `n_l >= 2`.
    pub(crate) fn even(n_l: usize) -> Result<Self> {
        if n_l < 2 || n_l % 2 != 0 {
            return invalid(format!("frequency set needs an even number of steps, got {n_l}"));
        }
        Ok(Self { n_l })
    }

    pub fn n_l(&self) -> usize {
        self.n_l
    }

    pub fn theta(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.n_l as f64
    }

    pub fn all_indices(&self) -> impl Iterator<Item = i64> {
        let half = (self.n_l / 2) as i64;
        (1 - half)..=half
    }

    pub fn low_indices(&self) -> Vec<i64> {
        self.all_indices().filter(|&k| is_low_index(k, self.n_l)).collect()
    }

    pub fn high_indices(&self) -> Vec<i64> {
        self.all_indices().filter(|&k| !is_low_index(k, self.n_l)).collect()
    }

    pub fn all(&self) -> Vec<f64> {
        self.all_indices().map(|k| self.theta(k)).collect()
    }

    pub fn low(&self) -> Vec<f64> {
        self.low_indices().into_iter().map(|k| self.theta(k)).collect()
    }

    pub fn high(&self) -> Vec<f64> {
        self.high_indices().into_iter().map(|k| self.theta(k)).collect()
    }

    /// Index `k` of `theta`, if `theta` belongs to the set.
    pub fn index_of(&self, theta: f64) -> Option<i64> {
        let k = (theta * self.n_l as f64 / (2.0 * PI)).round() as i64;
        let half = (self.n_l / 2) as i64;
        let in_range = k > -half && k <= half;
        (in_range && (self.theta(k) - theta).abs() < 1e-9).then_some(k)
    }

    /// `gamma(k) = k - sign(k) N_L / 2` with `sign(0) = -1`.
    pub fn gamma_index(&self, k: i64) -> i64 {
        let half = (self.n_l / 2) as i64;
        if k > 0 {
            k - half
        } else {
            k + half
        }
    }

    /// Maps a low frequency to its high partner `theta - sign(theta) pi`.
    pub fn gamma(&self, theta: f64) -> Result<f64> {
        match self.index_of(theta) {
            Some(k) if is_low_index(k, self.n_l) => Ok(self.theta(self.gamma_index(k))),
            _ => invalid(format!("{theta} is not a low frequency of the {}-step grid", self.n_l)),
        }
    }
}

/// Frequency set of an `n_l`-step grid; `n_l` must be a power of two >= 4.
pub fn frequencies(n_l: usize) -> Result<FrequencySet> {
    if n_l < 4 || !n_l.is_power_of_two() {
        return invalid(format!("number of steps must be a power of two >= 4, got {n_l}"));
    }
    FrequencySet::even(n_l)
}

/// `gamma` without membership checks; `sign(0) = -1`.
pub fn gamma_raw(theta: f64) -> f64 {
    if theta > 0.0 {
        theta - PI
    } else {
        theta + PI
    }
}

/// A complex symbol attached to one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSymbol {
    pub theta: f64,
    pub matrix: CMatrix,
}

impl FourierSymbol {
    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.matrix)
    }
}

fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, -theta)
}

/// `K + M - e^{-i theta} N`.
pub fn symbol_system(ops: &LocalOperators, theta: f64) -> FourierSymbol {
    let matrix = to_complex(ops.km()) - to_complex(ops.n()) * phase(theta);
    FourierSymbol { theta, matrix }
}

/// `((1 - w) I + e^{-i theta} w (K + M)^{-1} N)^nu`.
pub fn symbol_smoother(ops: &LocalOperators, theta: f64, omega: f64, nu: usize) -> FourierSymbol {
    let s = crate::stability::local_iteration_matrix(ops, theta, omega);
    FourierSymbol { theta, matrix: matrix_power(&s, nu) }
}

/// Restriction and prolongation symbols
/// `R(theta) = e^{-i theta} R_1 + R_2`, `P(theta) = (e^{i theta} R_1^T + R_2^T) / 2`.
pub fn transfer_symbols(transfers: &Transfers, theta: f64) -> (CMatrix, CMatrix) {
    let r1 = to_complex(&transfers.r1);
    let r2 = to_complex(&transfers.r2);
    let r_hat = &r1 * phase(theta) + &r2;
    let p_hat = (r1.transpose() * phase(-theta) + r2.transpose()) * Complex64::new(0.5, 0.0);
    (r_hat, p_hat)
}

fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Two-grid symbol on the harmonics pair `{theta, gamma(theta)}`:
/// `diag(S^nu2) [I - P L_c(2 theta)^{-1} R diag(L)] diag(S^nu1)`.
#[allow(clippy::too_many_arguments)]
pub fn twogrid_symbol(
    fine: &LocalOperators,
    coarse: &LocalOperators,
    transfers: &Transfers,
    theta: f64,
    nu1: usize,
    nu2: usize,
    omega: f64,
) -> Result<FourierSymbol> {
    if !(theta > -PI / 2.0 && theta <= PI / 2.0 + 1e-12) {
        return invalid(format!("two-grid symbol needs a low frequency, got {theta}"));
    }
    let n_t = fine.n_t();
    let theta_h = gamma_raw(theta);

    let l_pair = block_diag(&symbol_system(fine, theta).matrix, &symbol_system(fine, theta_h).matrix);
    let (r_lo, p_lo) = transfer_symbols(transfers, theta);
    let (r_hi, p_hi) = transfer_symbols(transfers, theta_h);

    let mut restrict = CMatrix::zeros(n_t, 2 * n_t);
    restrict.view_mut((0, 0), (n_t, n_t)).copy_from(&r_lo);
    restrict.view_mut((0, n_t), (n_t, n_t)).copy_from(&r_hi);
    let mut prolong = CMatrix::zeros(2 * n_t, n_t);
    prolong.view_mut((0, 0), (n_t, n_t)).copy_from(&p_lo);
    prolong.view_mut((n_t, 0), (n_t, n_t)).copy_from(&p_hi);

    let coarse_inv = inverse(&symbol_system(coarse, 2.0 * theta).matrix, "coarse-grid symbol")?;
    let correction = CMatrix::identity(2 * n_t, 2 * n_t) - prolong * coarse_inv * restrict * l_pair;

    let pre = block_diag(
        &symbol_smoother(fine, theta, omega, nu1).matrix,
        &symbol_smoother(fine, theta_h, omega, nu1).matrix,
    );
    let post = block_diag(
        &symbol_smoother(fine, theta, omega, nu2).matrix,
        &symbol_smoother(fine, theta_h, omega, nu2).matrix,
    );
    Ok(FourierSymbol { theta, matrix: post * correction * pre })
}

/// Predicted two-grid convergence factor and the low frequency attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoPrediction {
    pub rho: f64,
    pub theta_max: f64,
    pub omega: f64,
}

/// `max_{theta in low} rho(M(theta))` on an `n_l`-step grid.
pub fn predicted_rho(
    basis: &BasisSpec,
    tau: f64,
    n_l: usize,
    nu1: usize,
    nu2: usize,
    damping: DampingChoice,
) -> Result<RhoPrediction> {
    predicted_rho_with(&Executor::sequential(), basis, tau, n_l, nu1, nu2, damping)
}

pub fn predicted_rho_with(
    exec: &Executor,
    basis: &BasisSpec,
    tau: f64,
    n_l: usize,
    nu1: usize,
    nu2: usize,
    damping: DampingChoice,
) -> Result<RhoPrediction> {
    damping.validate()?;
    let freqs = frequencies(n_l)?;
    let fine = assemble_local(basis, tau)?;
    let coarse = assemble_local(basis, 2.0 * tau)?;
    let transfers = build_transfers(basis, tau)?;
    let omega = damping.omega(alpha(basis, tau)?);
    let low = freqs.low();
    let radii = exec.map_collect(low.len(), |i| {
        twogrid_symbol(&fine, &coarse, &transfers, low[i], nu1, nu2, omega).map(|s| s.spectral_radius())
    });
    let mut best = RhoPrediction { rho: f64::NEG_INFINITY, theta_max: 0.0, omega };
    for (theta, r) in low.iter().zip(radii) {
        let r = r?;
        if r > best.rho {
            best.rho = r;
            best.theta_max = *theta;
        }
    }
    Ok(best)
}

/// Coefficients of one harmonics pair: the vector's component in
/// `span{Phi(theta), Phi(gamma(theta))}` is `U1 Phi(theta) + U2 Phi(gamma(theta))`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicPair {
    pub theta: f64,
    pub u1: CMatrix,
    pub u2: CMatrix,
}

/// A block vector split over the harmonics pairs of all low frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicsDecomposition {
    pub n_l: usize,
    pub n_t: usize,
    pub pairs: Vec<HarmonicPair>,
}

impl HarmonicsDecomposition {
    /// Largest coefficient norm attached to frequencies other than `theta`.
    pub fn max_norm_off(&self, theta: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for p in &self.pairs {
            if (p.theta - theta).abs() > 1e-12 {
                worst = worst.max(p.u1.norm());
            }
            if (gamma_raw(p.theta) - theta).abs() > 1e-12 {
                worst = worst.max(p.u2.norm());
            }
        }
        worst
    }
}

/// Blockwise DFT: `u_hat_k[l] = (1/N) sum_n u_n[l] e^{-i n theta_k}`,
/// grouped into harmonics pairs with diagonal coefficient matrices.
pub fn block_dft<T: Scalar + Into<Complex64>>(u: &BlockVector<T>) -> Result<HarmonicsDecomposition> {
    let n_l = u.n_blocks();
    let freqs = FrequencySet::even(n_l)?;
    let n_t = u.n_t();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_l);
    // coeffs[l][k mod N]
    let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); n_l]; n_t];
    for (l, row) in coeffs.iter_mut().enumerate() {
        for (n, slot) in row.iter_mut().enumerate() {
            *slot = u.block(n)[l].into();
        }
        fft.process(row);
    }
    let coefficient = |k: i64| -> CMatrix {
        let idx = k.rem_euclid(n_l as i64) as usize;
        let shift = phase(freqs.theta(k)) / n_l as f64;
        CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n_t, |l, _| coeffs[l][idx] * shift))
    };
    let pairs = freqs
        .low_indices()
        .into_iter()
        .map(|k| HarmonicPair {
            theta: freqs.theta(k),
            u1: coefficient(k),
            u2: coefficient(freqs.gamma_index(k)),
        })
        .collect();
    Ok(HarmonicsDecomposition { n_l, n_t, pairs })
}

/// Reassembles `sum_pairs [U1 Phi(theta) + U2 Phi(gamma(theta))]`.
pub fn block_idft(h: &HarmonicsDecomposition) -> BlockVector<Complex64> {
    let mut out = BlockVector::<Complex64>::zeros(h.n_l, h.n_t);
    for pair in &h.pairs {
        for (u, theta) in [(&pair.u1, pair.theta), (&pair.u2, gamma_raw(pair.theta))] {
            // U Phi_n = e^{i n theta} (row sums of U)
            let rows: Vec<Complex64> = (0..h.n_t).map(|l| u.row(l).iter().sum()).collect();
            for n in 0..h.n_l {
                let e = Complex64::from_polar(1.0, (n + 1) as f64 * theta);
                for (slot, r) in out.block_mut(n).iter_mut().zip(&rows) {
                    *slot += r * e;
                }
            }
        }
    }
    out
}

/// Blockwise Fourier mode `psi_n = v e^{i n theta}`, `n = 1..=N_L`.
pub fn fourier_mode(n_l: usize, v: &[Complex64], theta: f64) -> BlockVector<Complex64> {
    BlockVector::from_fn(n_l, v.len(), |n, l| v[l] * Complex64::from_polar(1.0, (n + 1) as f64 * theta))
}
