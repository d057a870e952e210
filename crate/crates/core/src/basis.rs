//! Polynomial bases of degree `p_t` on the reference step [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quadrature::{legendre, radau_rule};

/// How the local basis of one time step is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum NodeRule {
    /// Lagrange polynomials through the left-Radau points (`c_1 = 0`).
    #[default]
    LagrangeAtRadauPoints,
    /// `sqrt(2k+1) P_k(2x - 1)`, orthonormal on [0, 1].
    ScaledLegendre,
}

/// Polynomial degree plus node rule; `n_t = p_t + 1` functions per step.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    degree: usize,
    rule: NodeRule,
    nodes: Vec<f64>,
    // barycentric-style denominators  prod_{j != k} (c_k - c_j)
    denominators: Vec<f64>,
}

impl BasisSpec {
    pub fn new(degree: usize, rule: NodeRule) -> Result<Self> {
        let (nodes, denominators) = match rule {
            NodeRule::LagrangeAtRadauPoints => {
                let nodes = radau_rule(degree + 1)?.rule.nodes;
                let den = (0..nodes.len())
                    .map(|k| {
                        (0..nodes.len())
                            .filter(|&j| j != k)
                            .map(|j| nodes[k] - nodes[j])
                            .product()
                    })
                    .collect();
                (nodes, den)
            }
            NodeRule::ScaledLegendre => (Vec::new(), Vec::new()),
        };
        Ok(Self { degree, rule, nodes, denominators })
    }

    /// Default basis: Lagrange at left-Radau points.
    pub fn lagrange(degree: usize) -> Self {
        Self::new(degree, NodeRule::LagrangeAtRadauPoints).expect("radau nodes exist for every degree")
    }

    pub fn legendre(degree: usize) -> Self {
        Self::new(degree, NodeRule::ScaledLegendre).expect("legendre basis exists for every degree")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_t(&self) -> usize {
        self.degree + 1
    }

    pub fn rule(&self) -> NodeRule {
        self.rule
    }

    /// Value of basis function `k` at reference point `x`.
    pub fn value(&self, k: usize, x: f64) -> f64 {
        match self.rule {
            NodeRule::LagrangeAtRadauPoints => {
                let num: f64 = (0..self.nodes.len())
                    .filter(|&j| j != k)
                    .map(|j| x - self.nodes[j])
                    .product();
                num / self.denominators[k]
            }
            NodeRule::ScaledLegendre => {
                ((2 * k + 1) as f64).sqrt() * legendre(k, 2.0 * x - 1.0).0
            }
        }
    }

    /// Derivative of basis function `k` with respect to the reference variable.
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        match self.rule {
            NodeRule::LagrangeAtRadauPoints => {
                let n = self.nodes.len();
                let mut sum = 0.0;
                for m in (0..n).filter(|&m| m != k) {
                    let prod: f64 = (0..n)
                        .filter(|&j| j != k && j != m)
                        .map(|j| x - self.nodes[j])
                        .product();
                    sum += prod;
                }
                sum / self.denominators[k]
            }
            NodeRule::ScaledLegendre => {
                2.0 * ((2 * k + 1) as f64).sqrt() * legendre(k, 2.0 * x - 1.0).1
            }
        }
    }

    /// All basis values at `x`.
    pub fn values(&self, x: f64) -> Vec<f64> {
        (0..self.n_t()).map(|k| self.value(k, x)).collect()
    }

    /// Basis values at the left end of the step, `psi_k(0)`.
    pub fn left_values(&self) -> Vec<f64> {
        self.values(0.0)
    }

    /// Basis values at the right end of the step, `psi_k(1)`.
    pub fn right_values(&self) -> Vec<f64> {
        self.values(1.0)
    }

    /// Evaluates the polynomial with coefficients `coeffs` at `x`.
    pub fn evaluate(&self, coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().enumerate().map(|(k, c)| c * self.value(k, x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use nalgebra::DMatrix;

    #[test]
    fn lagrange_is_cardinal_at_radau_points() {
        let b = BasisSpec::lagrange(3);
        let nodes = radau_rule(4).unwrap().rule.nodes;
        for (k, &c) in nodes.iter().enumerate() {
            for j in 0..4 {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((b.value(j, c) - expect).abs() < 1e-13);
            }
        }
        // left endpoint functional is e_1
        assert_eq!(b.left_values()[0], 1.0);
        assert!(b.left_values()[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for basis in [BasisSpec::lagrange(4), BasisSpec::legendre(4)] {
            let h = 1e-6;
            for k in 0..5 {
                for &x in &[0.1, 0.37, 0.8] {
                    let fd = (basis.value(k, x + h) - basis.value(k, x - h)) / (2.0 * h);
                    assert!((fd - basis.derivative(k, x)).abs() < 1e-6, "{:?} k={k}", basis.rule());
                }
            }
        }
    }

    #[test]
    fn gram_matrix_nonsingular() {
        for p in 0..8 {
            for basis in [BasisSpec::lagrange(p), BasisSpec::legendre(p)] {
                let g = gauss_legendre(p + 1).unwrap();
                let n = basis.n_t();
                let gram = DMatrix::from_fn(n, n, |i, j| {
                    g.integrate(0.0, 1.0, |x| basis.value(i, x) * basis.value(j, x))
                });
                assert!(gram.determinant().abs() > 1e-12, "p={p}");
            }
        }
    }

    #[test]
    fn scaled_legendre_is_orthonormal() {
        let b = BasisSpec::legendre(5);
        let g = gauss_legendre(6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let v = g.integrate(0.0, 1.0, |x| b.value(i, x) * b.value(j, x));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-13);
            }
        }
    }
}
