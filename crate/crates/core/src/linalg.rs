//! Small dense helpers shared by the analysis and solver modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Eigenvalues of a dense complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    if m.nrows() == 0 {
        return Vec::new();
    }
    // The QR iteration can stall at machine-epsilon deflation tolerance on
    // matrices with repeated eigenvalues, so the tolerance is relaxed stepwise.
    let max_iter = 1000 * m.nrows();
    for eps in [4.0 * f64::EPSILON, 64.0 * f64::EPSILON, 1e-12] {
        if let Some(schur) = nalgebra::Schur::try_new(m.clone(), eps, max_iter) {
            let (_, t) = schur.unpack();
            return t.diagonal().iter().copied().collect();
        }
    }
    panic!("Schur iteration did not converge for a {}x{} matrix", m.nrows(), m.ncols());
}

/// Eigenvalues of a dense real matrix (possibly complex conjugate pairs).
pub fn real_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    eigenvalues(&to_complex(m))
}

pub fn spectral_radius(m: &CMatrix) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn matrix_power(m: &CMatrix, exp: usize) -> CMatrix {
    let mut out = CMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..exp {
        out = &out * m;
    }
    out
}

pub fn inverse(m: &CMatrix, what: &str) -> Result<CMatrix> {
    m.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular(what.to_string()))
}

pub fn real_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular(what.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schur_eigenvalues_of_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let mut ev = real_eigenvalues(&m);
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn triangular_complex_spectrum() {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let m = CMatrix::from_row_slice(3, 3, &[
            2.0 * one, i, one,
            Complex64::new(0.0, 0.0), -i, one,
            Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.5 * one,
        ]);
        let mut ev: Vec<f64> = eigenvalues(&m).iter().map(|z| z.norm()).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 0.5).abs() < 1e-13);
        assert!((ev[1] - 1.0).abs() < 1e-13);
        assert!((ev[2] - 2.0).abs() < 1e-13);
        assert!((spectral_radius(&m) - 2.0).abs() < 1e-13);
    }
}
