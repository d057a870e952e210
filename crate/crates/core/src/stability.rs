//! Damping, stability values and smoothing factors of the block Jacobi
//! smoother.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::dg::{assemble_local, stability_function, LocalOperators};
use crate::error::{invalid, Result};
use crate::fourier::frequencies;
use crate::linalg::{to_complex, CMatrix};

/// Damping parameter of the block Jacobi smoother.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum DampingChoice {
    /// `omega*(tau)`, recomputed from the level's step size.
    #[default]
    Optimal,
    Fixed(f64),
}

impl DampingChoice {
    pub fn fixed(omega: f64) -> Result<Self> {
        let d = DampingChoice::Fixed(omega);
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if let DampingChoice::Fixed(w) = *self {
            if !(w > 0.0 && w < 2.0) {
                return invalid(format!("damping must lie in (0, 2), got {w}"));
            }
            if w > 1.0 {
                log::warn!("damping {w} > 1 converges but does not smooth uniformly");
            }
        }
        Ok(())
    }

    /// Damping for a level whose stability value is `alpha`.
    pub fn omega(&self, alpha: f64) -> f64 {
        match *self {
            DampingChoice::Optimal => optimal_omega(alpha),
            DampingChoice::Fixed(w) => w,
        }
    }
}

/// `alpha(tau) = R(-tau)`; for `tau > 0` this is the nonzero eigenvalue of
/// `(K + M)^{-1} N` of the assembled operators.
pub fn alpha(basis: &BasisSpec, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return invalid(format!("alpha needs tau >= 0, got {tau}"));
    }
    if tau == 0.0 {
        return Ok(stability_function(basis, Complex64::new(0.0, 0.0))?.re);
    }
    Ok(assemble_local(basis, tau)?.alpha())
}

/// Min-max optimal damping: `1 / (1 + alpha^2)` for `alpha >= 0`, else 1.
pub fn optimal_omega(alpha: f64) -> f64 {
    if alpha >= 0.0 {
        1.0 / (1.0 + alpha * alpha)
    } else {
        1.0
    }
}

/// `|1 - omega + e^{-i theta} omega alpha|`, written as the square root of
/// `(1-w)^2 + 2 w (1-w) alpha cos(theta) + alpha^2 w^2`.
pub fn smoothing_symbol_modulus(omega: f64, alpha: f64, theta: f64) -> f64 {
    let one_minus = 1.0 - omega;
    let sq = one_minus * one_minus
        + 2.0 * omega * one_minus * alpha * theta.cos()
        + alpha * alpha * omega * omega;
    sq.max(0.0).sqrt()
}

/// Local iteration matrix `(1 - w) I + e^{-i theta} w (K + M)^{-1} N`.
pub fn local_iteration_matrix(ops: &LocalOperators, theta: f64, omega: f64) -> CMatrix {
    let n_t = ops.n_t();
    let phase = Complex64::from_polar(1.0, -theta);
    CMatrix::identity(n_t, n_t) * Complex64::new(1.0 - omega, 0.0) + to_complex(&ops.km_inv_n()) * (phase * omega)
}

/// Smoothing analysis of one `(p_t, tau, omega)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub p_t: usize,
    pub tau: f64,
    pub omega: f64,
    pub alpha: f64,
    /// Asymptotic smoothing factor over the high frequencies.
    pub mu_s: f64,
    /// Same maximum over all frequencies.
    pub rho_all: f64,
}

pub fn smoothing_factor(basis: &BasisSpec, tau: f64, damping: DampingChoice, n_l: usize) -> Result<SmoothingReport> {
    damping.validate()?;
    let freqs = frequencies(n_l)?;
    let a = alpha(basis, tau)?;
    let omega = damping.omega(a);
    let rho = |theta: f64| (1.0 - omega).abs().max(smoothing_symbol_modulus(omega, a, theta));
    let mu_s = freqs.high().into_iter().map(rho).fold(0.0, f64::max);
    let rho_all = freqs.all().into_iter().map(rho).fold(0.0, f64::max);
    Ok(SmoothingReport { p_t: basis.degree(), tau, omega, alpha: a, mu_s, rho_all })
}

/// Supremum of the symbol modulus over `[pi/2, pi]` at the optimal damping.
pub fn continuous_smoothing_bound(alpha: f64) -> f64 {
    if alpha >= 0.0 {
        alpha / (1.0 + alpha * alpha).sqrt()
    } else {
        alpha.abs()
    }
}

/// Bound on the symbol modulus over all frequencies at optimal damping:
/// `|alpha| (1 + |alpha|) / (1 + alpha^2)`.
pub fn all_frequency_bound(alpha: f64) -> f64 {
    alpha.abs() * (1.0 + alpha.abs()) / (1.0 + alpha * alpha)
}

/// Frequency that maximizes the symbol modulus on `[pi/2, pi]`.
pub fn smoothing_argmax(alpha: f64) -> f64 {
    if alpha >= 0.0 {
        PI / 2.0
    } else {
        PI
    }
}
