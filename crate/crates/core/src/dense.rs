//! Dense assembly of the global operators for small grids.
//!
//! These matrices are only meant as reference implementations to check the
//! matrix-free kernels and the Fourier symbols against.

use nalgebra::DMatrix;

use crate::dg::LocalOperators;
use crate::error::Result;
use crate::linalg::real_inverse;
use crate::mg::Transfers;

fn place(out: &mut DMatrix<f64>, row: usize, col: usize, block: &DMatrix<f64>, scale: f64) {
    let n = block.nrows();
    let mut view = out.view_mut((row * n, col * n), (n, n));
    view += block * scale;
}

/// `I (x) (K + M) - U (x) N`, with `U` the lower shift or its circulant closure.
pub fn system_matrix(ops: &LocalOperators, steps: usize, periodic: bool) -> DMatrix<f64> {
    let n_t = ops.n_t();
    let mut out = DMatrix::zeros(steps * n_t, steps * n_t);
    for n in 0..steps {
        place(&mut out, n, n, ops.km(), 1.0);
        if n > 0 {
            place(&mut out, n, n - 1, ops.n(), -1.0);
        } else if periodic && steps > 1 {
            place(&mut out, 0, steps - 1, ops.n(), -1.0);
        }
    }
    out
}

/// Iteration matrix `I - omega D^{-1} L` of the damped block Jacobi smoother.
pub fn smoother_matrix(ops: &LocalOperators, steps: usize, periodic: bool, omega: f64) -> Result<DMatrix<f64>> {
    let n_t = ops.n_t();
    let l = system_matrix(ops, steps, periodic);
    let d_inv = real_inverse(ops.km(), "K + M")?;
    let mut block_inv = DMatrix::zeros(steps * n_t, steps * n_t);
    for n in 0..steps {
        place(&mut block_inv, n, n, &d_inv, 1.0);
    }
    let id = DMatrix::identity(steps * n_t, steps * n_t);
    Ok(id - block_inv * l * omega)
}

/// Restriction from `fine_steps` to `fine_steps / 2` steps.
pub fn restriction_matrix(t: &Transfers, fine_steps: usize) -> DMatrix<f64> {
    let n_t = t.r1.nrows();
    let coarse = fine_steps / 2;
    let mut out = DMatrix::zeros(coarse * n_t, fine_steps * n_t);
    for j in 0..coarse {
        place(&mut out, j, 2 * j, &t.r1, 1.0);
        place(&mut out, j, 2 * j + 1, &t.r2, 1.0);
    }
    out
}

pub fn prolongation_matrix(t: &Transfers, fine_steps: usize) -> DMatrix<f64> {
    restriction_matrix(t, fine_steps).transpose()
}

/// `S^nu2 (I - P L_c^{-1} R L) S^nu1` on `steps` fine steps.
#[allow(clippy::too_many_arguments)]
pub fn two_grid_matrix(
    fine: &LocalOperators,
    coarse: &LocalOperators,
    t: &Transfers,
    steps: usize,
    periodic: bool,
    nu1: usize,
    nu2: usize,
    omega: f64,
) -> Result<DMatrix<f64>> {
    let n = steps * fine.n_t();
    let l = system_matrix(fine, steps, periodic);
    let lc_inv = real_inverse(&system_matrix(coarse, steps / 2, periodic), "coarse system")?;
    let r = restriction_matrix(t, steps);
    let p = r.transpose();
    let correction = DMatrix::identity(n, n) - p * lc_inv * r * l;
    let s = smoother_matrix(fine, steps, periodic, omega)?;
    Ok(s.pow(nu2 as u32) * correction * s.pow(nu1 as u32))
}
