use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// A sequence of `n_blocks` coefficient vectors of length `n_t`, stored
/// contiguously block after block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector<T = f64> {
    n_t: usize,
    data: Vec<T>,
}

pub trait Scalar:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + 'static
{
    fn abs_sq(self) -> f64;
    fn from_f64(x: f64) -> Self;
}

impl Scalar for f64 {
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn from_f64(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

impl<T: Scalar> BlockVector<T> {
    pub fn zeros(n_blocks: usize, n_t: usize) -> Self {
        assert!(n_t > 0, "block length must be positive");
        Self { n_t, data: vec![T::default(); n_blocks * n_t] }
    }

    pub fn from_vec(n_t: usize, data: Vec<T>) -> Result<Self> {
        if n_t == 0 || data.len() % n_t != 0 {
            return invalid(format!("data length {} is not a multiple of block length {n_t}", data.len()));
        }
        Ok(Self { n_t, data })
    }

    pub fn from_fn(n_blocks: usize, n_t: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut v = Self::zeros(n_blocks, n_t);
        for n in 0..n_blocks {
            for l in 0..n_t {
                v.data[n * n_t + l] = f(n, l);
            }
        }
        v
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_blocks(&self) -> usize {
        self.data.len() / self.n_t
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, n: usize) -> &[T] {
        &self.data[n * self.n_t..(n + 1) * self.n_t]
    }

    pub fn block_mut(&mut self, n: usize) -> &mut [T] {
        let n_t = self.n_t;
        &mut self.data[n * n_t..(n + 1) * n_t]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn blocks(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.n_t)
    }

    /// Euclidean norm, accumulated sequentially in storage order.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt()
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|x| *x = T::default());
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_t == other.n_t && self.data.len() == other.data.len()
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: T, x: &Self) {
        assert!(self.same_shape(x), "axpy on mismatched block vectors");
        for (y, &xv) in self.data.iter_mut().zip(&x.data) {
            *y = *y + a * xv;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.same_shape(other), "difference of mismatched block vectors");
        Self {
            n_t: self.n_t,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs_sq().sqrt())
            .fold(0.0, f64::max)
    }
}

impl BlockVector<f64> {
    pub fn to_complex(&self) -> BlockVector<Complex64> {
        BlockVector {
            n_t: self.n_t,
            data: self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_norm() {
        let v = BlockVector::from_fn(3, 2, |n, l| (2 * n + l) as f64);
        assert_eq!(v.n_blocks(), 3);
        assert_eq!(v.block(1), &[2.0, 3.0]);
        assert!((v.norm() - (0.0f64 + 1.0 + 4.0 + 9.0 + 16.0 + 25.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(BlockVector::from_vec(3, vec![0.0; 7]).is_err());
        assert!(BlockVector::from_vec(3, vec![0.0; 9]).is_ok());
    }
}
