//! Discontinuous Galerkin discretization of `u' + u = f` in time.
//!
//! On each step `(t_{n-1}, t_n)` of length `tau` the coefficients satisfy
//! `(K + M) u_n = f_n + N u_{n-1}` with
//!
//! * `K[k,l] = -∫ psi_l psi_k' dt + psi_l(t_n) psi_k(t_n)`
//! * `M[k,l] = ∫ psi_l psi_k dt`
//! * `N[k,l] = psi_l(t_{n-1}^-) psi_k(t_{n-1}^+)`
//!
//! `N` is the outer product of the left-endpoint values of the current step
//! with the right-endpoint values of the previous one, and the kernels below
//! use that rank-one form directly.

use nalgebra::{DMatrix, DVector, DVectorViewMut, Dyn, LU};
use num_complex::Complex64;

use crate::basis::BasisSpec;
use crate::block::BlockVector;
use crate::error::{invalid, Error, Result};
use crate::linalg::to_complex;
use crate::par::Executor;
use crate::quadrature::{gauss_legendre, radau_rule};

/// Per-step matrices for one `(p_t, tau)` pair plus a reusable LU of `K + M`.
#[derive(Debug, Clone)]
pub struct LocalOperators {
    basis: BasisSpec,
    tau: f64,
    k: DMatrix<f64>,
    m: DMatrix<f64>,
    n: DMatrix<f64>,
    km: DMatrix<f64>,
    km_lu: LU<f64, Dyn, Dyn>,
    left: Vec<f64>,
    right: Vec<f64>,
}

/// Reference-interval `K` and unit-length `M` (so `M_tau = tau * M`).
fn reference_matrices(basis: &BasisSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n_t = basis.n_t();
    let gauss = gauss_legendre(n_t)?;
    let right = basis.right_values();
    let mut k = DMatrix::zeros(n_t, n_t);
    let mut m = DMatrix::zeros(n_t, n_t);
    for (&x, &w) in gauss.nodes.iter().zip(&gauss.weights) {
        let vals = basis.values(x);
        let ders: Vec<f64> = (0..n_t).map(|i| basis.derivative(i, x)).collect();
        for r in 0..n_t {
            for c in 0..n_t {
                k[(r, c)] -= w * vals[c] * ders[r];
                m[(r, c)] += w * vals[c] * vals[r];
            }
        }
    }
    for r in 0..n_t {
        for c in 0..n_t {
            k[(r, c)] += right[c] * right[r];
        }
    }
    Ok((k, m))
}

/// Assembles `K`, `M`, `N` for step size `tau`.
pub fn assemble_local(basis: &BasisSpec, tau: f64) -> Result<LocalOperators> {
    if !(tau > 0.0) || !tau.is_finite() {
        return invalid(format!("time step must be positive, got {tau}"));
    }
    let (k, m_ref) = reference_matrices(basis)?;
    let m = m_ref * tau;
    let left = basis.left_values();
    let right = basis.right_values();
    let n_t = basis.n_t();
    let n = DMatrix::from_fn(n_t, n_t, |r, c| left[r] * right[c]);
    let km = &k + &m;
    let km_lu = km.clone().lu();
    if !km_lu.is_invertible() {
        return Err(Error::Singular(format!("K + M singular for tau = {tau}")));
    }
    Ok(LocalOperators { basis: basis.clone(), tau, k, m, n, km, km_lu, left, right })
}

impl LocalOperators {
    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_t(&self) -> usize {
        self.basis.n_t()
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn n(&self) -> &DMatrix<f64> {
        &self.n
    }

    /// `K + M`, the diagonal block of the global system.
    pub fn km(&self) -> &DMatrix<f64> {
        &self.km
    }

    /// Left-endpoint values `psi_k(t_{n-1})`.
    pub fn left(&self) -> &[f64] {
        &self.left
    }

    /// Right-endpoint values `psi_k(t_n)`.
    pub fn right(&self) -> &[f64] {
        &self.right
    }

    /// Solves `(K + M) x = b` in place.
    pub fn solve_km_in_place(&self, b: &mut [f64]) {
        let n_t = b.len();
        let mut view = DVectorViewMut::from_slice(b, n_t);
        let ok = self.km_lu.solve_mut(&mut view);
        debug_assert!(ok);
    }

    /// `(K + M)^{-1} N` as a dense matrix.
    pub fn km_inv_n(&self) -> DMatrix<f64> {
        let mut out = self.n.clone();
        self.km_lu.solve_mut(&mut out);
        out
    }

    /// The nonzero eigenvalue of `(K + M)^{-1} N`, which is `R(-tau)`.
    ///
    /// `N` has rank one, so its single nonzero eigenvalue equals the trace.
    pub fn alpha(&self) -> f64 {
        self.km_inv_n().trace()
    }

    /// `y = (K + M) x`.
    #[inline]
    pub(crate) fn km_apply(&self, x: &[f64], y: &mut [f64]) {
        let n_t = x.len();
        for r in 0..n_t {
            let mut s = 0.0;
            for c in 0..n_t {
                s += self.km[(r, c)] * x[c];
            }
            y[r] = s;
        }
    }

    /// Right-endpoint value of the polynomial with coefficients `x`.
    #[inline]
    pub(crate) fn right_value(&self, x: &[f64]) -> f64 {
        self.right.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// `I_N ⊗ (K + M) + U_N ⊗ N`, or its circulant variant when `periodic`.
/// Never stored densely.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub ops: LocalOperators,
    pub steps: usize,
    pub periodic: bool,
}

impl GlobalSystem {
    pub fn new(ops: LocalOperators, steps: usize, periodic: bool) -> Result<Self> {
        if steps == 0 {
            return invalid("a global system needs at least one step");
        }
        Ok(Self { ops, steps, periodic })
    }

    pub fn n_t(&self) -> usize {
        self.ops.n_t()
    }

    fn check(&self, u: &BlockVector) -> Result<()> {
        if u.n_t() != self.n_t() || u.n_blocks() != self.steps {
            return invalid(format!(
                "block vector {}x{} does not match system {}x{}",
                u.n_blocks(),
                u.n_t(),
                self.steps,
                self.n_t()
            ));
        }
        Ok(())
    }

    /// Endpoint value carried into step `n` from its predecessor, if any.
    #[inline]
    fn incoming(&self, u: &[f64], n: usize) -> Option<f64> {
        let n_t = self.n_t();
        if n > 0 {
            Some(self.ops.right_value(&u[(n - 1) * n_t..n * n_t]))
        } else if self.periodic {
            Some(self.ops.right_value(&u[(self.steps - 1) * n_t..]))
        } else {
            None
        }
    }

    /// `out = L u`, computed blockwise.
    pub fn apply_into(&self, u: &BlockVector, out: &mut BlockVector, exec: &Executor) -> Result<()> {
        self.check(u)?;
        self.check(out)?;
        let src = u.as_slice();
        let n_t = self.n_t();
        exec.for_each_block(out.as_mut_slice(), n_t, |n, y| {
            self.ops.km_apply(&src[n * n_t..(n + 1) * n_t], y);
            if let Some(prev) = self.incoming(src, n) {
                for (yk, lk) in y.iter_mut().zip(&self.ops.left) {
                    *yk -= lk * prev;
                }
            }
        });
        Ok(())
    }

    /// `out = f - L u`.
    pub fn residual_into(
        &self,
        u: &BlockVector,
        f: &BlockVector,
        out: &mut BlockVector,
        exec: &Executor,
    ) -> Result<()> {
        self.check(f)?;
        self.apply_into(u, out, exec)?;
        let fs = f.as_slice();
        let n_t = self.n_t();
        exec.for_each_block(out.as_mut_slice(), n_t, |n, y| {
            for (yk, fk) in y.iter_mut().zip(&fs[n * n_t..(n + 1) * n_t]) {
                *yk = fk - *yk;
            }
        });
        Ok(())
    }
}

/// Applies the global system to `u`.
pub fn apply_global(sys: &GlobalSystem, u: &BlockVector) -> Result<BlockVector> {
    let mut out = BlockVector::zeros(sys.steps, sys.n_t());
    sys.apply_into(u, &mut out, &Executor::sequential())?;
    Ok(out)
}

/// A uniform time grid `t_n = t0 + n tau`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub tau: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tau: f64, steps: usize) -> Result<Self> {
        if !(tau > 0.0) || steps == 0 {
            return invalid(format!("invalid grid: tau = {tau}, steps = {steps}"));
        }
        Ok(Self { t0, tau, steps })
    }

    /// `steps` uniform steps covering `[0, end]`.
    pub fn uniform(end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return invalid("grid needs at least one step");
        }
        Self::new(0.0, end / steps as f64, steps)
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.tau * self.steps as f64
    }
}

/// Right-hand side moments `f_n[l] = ∫ f psi_l dt`, approximated by the
/// left-Radau rule with `p_t + 1` stages.
pub fn rhs_moments(f: impl Fn(f64) -> f64, grid: &TimeGrid, basis: &BasisSpec) -> BlockVector {
    let radau = radau_rule(basis.n_t()).expect("n_t >= 1");
    let n_t = basis.n_t();
    let psi: Vec<Vec<f64>> = radau.nodes().iter().map(|&c| basis.values(c)).collect();
    let mut out = BlockVector::zeros(grid.steps, n_t);
    for n in 0..grid.steps {
        let t_start = grid.t0 + n as f64 * grid.tau;
        let block = out.block_mut(n);
        for (q, (&c, &b)) in radau.nodes().iter().zip(radau.weights()).enumerate() {
            let fv = grid.tau * b * f(t_start + c * grid.tau);
            for l in 0..n_t {
                block[l] += fv * psi[q][l];
            }
        }
    }
    out
}

/// Folds the initial value into the first block: `f_1 += N (u0 e_end)`,
/// i.e. `u0` times the left-endpoint values of the basis.
pub fn add_initial_value(rhs: &mut BlockVector, ops: &LocalOperators, u0: f64) {
    for (r, l) in rhs.block_mut(0).iter_mut().zip(ops.left()) {
        *r += u0 * l;
    }
}

/// Exact solve of the non-periodic system by block forward substitution.
pub fn forward_solve(sys: &GlobalSystem, rhs: &BlockVector) -> Result<BlockVector> {
    if sys.periodic {
        return Err(Error::Unsupported("forward substitution needs a non-periodic system".into()));
    }
    sys.check(rhs)?;
    let n_t = sys.n_t();
    let mut u = rhs.clone();
    let data = u.as_mut_slice();
    let mut prev = 0.0;
    for n in 0..sys.steps {
        let block = &mut data[n * n_t..(n + 1) * n_t];
        if n > 0 {
            for (b, l) in block.iter_mut().zip(sys.ops.left()) {
                *b += l * prev;
            }
        }
        sys.ops.solve_km_in_place(block);
        prev = sys.ops.right_value(block);
    }
    Ok(u)
}

/// Stability function `R(z) = v_R^T (K - z M)^{-1} v_L` of the scheme,
/// evaluated with unit step size.
pub fn stability_function(basis: &BasisSpec, z: Complex64) -> Result<Complex64> {
    let (k, m) = reference_matrices(basis)?;
    let a = to_complex(&k) - to_complex(&m) * z;
    let lu = a.lu();
    let scale = a_norm(&k, &m, z);
    let min_pivot = lu.u().diagonal().iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * scale) {
        return Err(Error::Singular(format!("K - zM is singular at z = {z}")));
    }
    let rhs = DVector::from_iterator(basis.n_t(), basis.left_values().into_iter().map(|v| Complex64::new(v, 0.0)));
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("K - zM is singular at z = {z}")))?;
    Ok(basis
        .right_values()
        .iter()
        .zip(x.iter())
        .map(|(r, xi)| xi * r)
        .sum())
}

fn a_norm(k: &DMatrix<f64>, m: &DMatrix<f64>, z: Complex64) -> f64 {
    k.norm() + z.norm() * m.norm()
}

/// Jump heights `|u^n(t_{n-1}) - u^{n-1}(t_{n-1})|` per step; step 1
/// compares against the initial value.
pub fn jump_error_estimator(u: &BlockVector, u0: f64, basis: &BasisSpec) -> Vec<f64> {
    let left = basis.left_values();
    let right = basis.right_values();
    let dot = |w: &[f64], x: &[f64]| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let mut prev = u0;
    u.blocks()
        .map(|b| {
            let jump = (dot(&left, b) - prev).abs();
            prev = dot(&right, b);
            jump
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(p: usize, tau: f64, steps: usize, periodic: bool) -> GlobalSystem {
        GlobalSystem::new(assemble_local(&BasisSpec::lagrange(p), tau).unwrap(), steps, periodic).unwrap()
    }

    #[test]
    fn piecewise_constant_matrices() {
        for tau in [0.1, 1.0, 7.5] {
            let ops = assemble_local(&BasisSpec::lagrange(0), tau).unwrap();
            assert!((ops.k()[(0, 0)] - 1.0).abs() < 1e-15);
            assert!((ops.m()[(0, 0)] - tau).abs() < 1e-15);
            assert!((ops.n()[(0, 0)] - 1.0).abs() < 1e-15);
        }
        let ops = assemble_local(&BasisSpec::lagrange(0), 1.0).unwrap();
        assert!((ops.alpha() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_step() {
        assert!(assemble_local(&BasisSpec::lagrange(1), 0.0).is_err());
        assert!(assemble_local(&BasisSpec::lagrange(1), -1.0).is_err());
    }

    #[test]
    fn n_has_rank_one_and_m_is_spd() {
        for p in 0..6 {
            for basis in [BasisSpec::lagrange(p), BasisSpec::legendre(p)] {
                let ops = assemble_local(&basis, 0.3).unwrap();
                let sv = ops.n().clone().svd(false, false).singular_values;
                let big = sv.iter().filter(|&&s| s > 1e-12 * sv[0]).count();
                assert_eq!(big, 1);
                assert!((ops.m() - ops.m().transpose()).norm() < 1e-14);
                assert!(ops.m().clone().cholesky().is_some());
            }
        }
    }

    #[test]
    fn apply_examples() {
        let u = BlockVector::from_vec(1, vec![1.0, 1.0]).unwrap();
        let out = apply_global(&sys(0, 1.0, 2, false), &u).unwrap();
        assert_eq!(out.as_slice(), &[2.0, 1.0]);
        let out = apply_global(&sys(0, 1.0, 2, true), &u).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 1.0]);
        let z = BlockVector::zeros(2, 1);
        assert_eq!(apply_global(&sys(0, 1.0, 2, false), &z).unwrap().as_slice(), &[0.0, 0.0]);
        assert!(apply_global(&sys(0, 1.0, 3, false), &u).is_err());
    }

    #[test]
    fn rhs_examples() {
        let basis = BasisSpec::lagrange(0);
        let grid = TimeGrid::new(0.0, 0.5, 4).unwrap();
        assert!(rhs_moments(|_| 0.0, &grid, &basis).as_slice().iter().all(|&v| v == 0.0));
        assert!(rhs_moments(|_| 1.0, &grid, &basis).as_slice().iter().all(|&v| v == 0.5));

        // p=1, f(t)=t on one step (0,1): Radau order 3 is exact for t*psi (degree 2)
        let basis = BasisSpec::lagrange(1);
        let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
        let moments = rhs_moments(|t| t, &grid, &basis);
        let g = gauss_legendre(4).unwrap();
        for l in 0..2 {
            let exact = g.integrate(0.0, 1.0, |t| t * basis.value(l, t));
            assert!((moments.block(0)[l] - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn backward_euler_recursion() {
        let s = sys(0, 0.1, 20, false);
        let mut rhs = BlockVector::zeros(20, 1);
        add_initial_value(&mut rhs, &s.ops, 1.0);
        let u = forward_solve(&s, &rhs).unwrap();
        for n in 0..20 {
            let expect = 1.1f64.powi(-(n as i32 + 1));
            assert!((u.block(n)[0] - expect).abs() < 1e-14);
        }
        let jumps = jump_error_estimator(&u, 1.0, s.ops.basis());
        assert!((jumps[0] - (1.0 - 1.0 / 1.1)).abs() < 1e-14);
        assert!((jumps[0] - 0.0909).abs() < 1e-4);
    }

    #[test]
    fn backward_euler_with_radau_rhs() {
        // (1 + tau) u_1 = tau f(t_0) + u_0
        let tau = 0.25;
        let s = sys(0, tau, 1, false);
        let f = |t: f64| 3.0 + t.sin();
        let mut rhs = rhs_moments(f, &TimeGrid::new(0.2, tau, 1).unwrap(), s.ops.basis());
        add_initial_value(&mut rhs, &s.ops, 0.7);
        let u = forward_solve(&s, &rhs).unwrap();
        let expect = (tau * f(0.2) + 0.7) / (1.0 + tau);
        assert!((u.block(0)[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn forward_solve_inverts_apply() {
        for p in 0..4 {
            let s = sys(p, 0.37, 11, false);
            let w = BlockVector::from_fn(11, p + 1, |n, l| ((n * 7 + l * 3) as f64).cos());
            let rhs = apply_global(&s, &w).unwrap();
            let u = forward_solve(&s, &rhs).unwrap();
            assert!(u.max_abs_diff(&w) < 1e-12);
            let res = rhs.sub(&apply_global(&s, &u).unwrap());
            assert!(res.norm() <= 1e-12 * rhs.norm());
        }
    }

    #[test]
    fn forward_solve_rejects_periodic() {
        let s = sys(1, 0.1, 4, true);
        assert!(matches!(forward_solve(&s, &BlockVector::zeros(4, 2)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn stability_function_examples() {
        let b0 = BasisSpec::lagrange(0);
        let r = stability_function(&b0, Complex64::new(-1.0, 0.0)).unwrap();
        assert!((r - 0.5).norm() < 1e-15);
        for p in 0..6 {
            let r = stability_function(&BasisSpec::lagrange(p), Complex64::new(0.0, 0.0)).unwrap();
            assert!((r - 1.0).norm() < 1e-12);
        }
        let r = stability_function(&BasisSpec::lagrange(1), Complex64::new(-3.0, 0.0)).unwrap();
        assert!(r.norm() < 1e-14);
        // pole of 1/(1 - z) at z = 1
        assert!(matches!(stability_function(&b0, Complex64::new(1.0, 0.0)), Err(Error::Singular(_))));
    }

    #[test]
    fn exact_on_trial_space() {
        // u(t) = 1 + 2t - t^2 (degree 2) solves u' + u = f with f = u' + u
        let u_exact = |t: f64| 1.0 + 2.0 * t - t * t;
        let f = |t: f64| (2.0 - 2.0 * t) + u_exact(t);
        let basis = BasisSpec::lagrange(2);
        let grid = TimeGrid::new(0.0, 0.2, 10).unwrap();
        let s = GlobalSystem::new(assemble_local(&basis, grid.tau).unwrap(), 10, false).unwrap();
        let mut rhs = rhs_moments(f, &grid, &basis);
        add_initial_value(&mut rhs, &s.ops, u_exact(0.0));
        let u = forward_solve(&s, &rhs).unwrap();
        let jumps = jump_error_estimator(&u, u_exact(0.0), &basis);
        assert!(jumps.iter().all(|&j| j <= 1e-12), "{jumps:?}");
        let end = basis.evaluate(u.block(9), 1.0);
        assert!((end - u_exact(2.0)).abs() < 1e-12);
    }
}
