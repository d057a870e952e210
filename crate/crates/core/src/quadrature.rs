//! Gauss–Legendre and left-Radau quadrature on the reference interval [0, 1].
//!
//! Nodes come from the Golub–Welsch eigenvalue problem for the Jacobi
//! recurrence and are then polished by Newton iteration on the defining
//! polynomial, which keeps them accurate to a few ulps up to degree ~40.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};

/// A quadrature rule on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f` on `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&c, &w)| w * f(a + c * h))
            .sum::<f64>()
            * h
    }
}

/// Left-Radau rule with `s` stages: `c_1 = 0`, exact for polynomials of
/// degree `2s - 2` (order `2s - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct RadauRule {
    pub rule: QuadratureRule,
}

impl RadauRule {
    pub fn stages(&self) -> usize {
        self.rule.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.rule.weights
    }
}

/// Legendre polynomial `P_n(x)` and its derivative on [-1, 1].
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = next;
    }
    let n_f = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // P_n'(±1) = (±1)^{n+1} n(n+1)/2
        let sign = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        sign * n_f * (n_f + 1.0) / 2.0
    } else {
        n_f * (p_prev - x * p) / (1.0 - x * x)
    };
    (p, dp)
}

/// Zeros of the degree-`n` Jacobi polynomial with weight (1-x)^a (1+x)^b.
fn jacobi_zeros(n: usize, a: f64, b: f64) -> Vec<f64> {
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let jf = j as f64;
        let s = 2.0 * jf + a + b;
        jac[(j, j)] = if j == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if j + 1 < n {
            let k = jf + 1.0;
            let s = 2.0 * k + a + b;
            let num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
            let den = s * s * (s + 1.0) * (s - 1.0);
            let off = (num / den).sqrt();
            jac[(j, j + 1)] = off;
            jac[(j + 1, j)] = off;
        }
    }
    let mut z: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    z.sort_by(|x, y| x.partial_cmp(y).unwrap());
    z
}

fn newton_polish(mut x: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    for _ in 0..8 {
        let (v, dv) = f(x);
        if dv == 0.0 {
            break;
        }
        let step = v / dv;
        x -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    x
}

/// Gauss–Legendre rule with `n` points on [0, 1], exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return invalid("Gauss-Legendre rule needs at least one point");
    }
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for x0 in jacobi_zeros(n, 0.0, 0.0) {
        let x = newton_polish(x0, |x| legendre(n, x));
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(0.5 * (x + 1.0));
        weights.push(0.5 * w);
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Left-Radau rule with `s` stages on [0, 1].
pub fn radau_rule(s: usize) -> Result<RadauRule> {
    if s == 0 {
        return invalid("Radau rule needs at least one stage");
    }
    let sf = s as f64;
    let mut nodes = vec![-1.0];
    let mut weights = vec![2.0 / (sf * sf)];
    if s > 1 {
        // interior nodes: zeros of P_{s-1} + P_s other than x = -1
        let q = |x: f64| {
            let (a, da) = legendre(s - 1, x);
            let (b, db) = legendre(s, x);
            (a + b, da + db)
        };
        for x0 in jacobi_zeros(s - 1, 0.0, 1.0) {
            let x = newton_polish(x0, q);
            let (p, _) = legendre(s - 1, x);
            nodes.push(x);
            weights.push((1.0 - x) / (sf * sf * p * p));
        }
    }
    Ok(RadauRule {
        rule: QuadratureRule {
            nodes: nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
            weights: weights.iter().map(|w| 0.5 * w).collect(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moment(rule: &QuadratureRule, m: i32) -> f64 {
        rule.nodes.iter().zip(&rule.weights).map(|(c, b)| b * c.powi(m)).sum()
    }

    #[test]
    fn radau_single_stage() {
        let r = radau_rule(1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_eq!(r.weights(), &[1.0]);
    }

    #[test]
    fn radau_two_stage_matches_moment_solution() {
        // b1 + b2 = 1, b2 c2 = 1/2, b2 c2^2 = 1/3  =>  c2 = 2/3, b = (1/4, 3/4)
        let r = radau_rule(2).unwrap();
        assert_eq!(r.nodes()[0], 0.0);
        assert!((r.nodes()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.weights()[0] - 0.25).abs() < 1e-15);
        assert!((r.weights()[1] - 0.75).abs() < 1e-15);
        assert!((moment(&r.rule, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn radau_exactness_up_to_degree_2s_minus_2() {
        for s in 1..=12 {
            let r = radau_rule(s).unwrap();
            assert_eq!(r.nodes()[0], 0.0);
            assert!(r.weights().iter().all(|&b| b != 0.0));
            for m in 0..=(2 * s - 2) as i32 {
                let err = (moment(&r.rule, m) - 1.0 / (m as f64 + 1.0)).abs();
                assert!(err < 1e-13, "s={s} m={m} err={err}");
            }
        }
    }

    #[test]
    fn radau_rejects_zero_stages() {
        assert!(radau_rule(0).is_err());
    }

    #[test]
    fn gauss_exactness() {
        for n in 1..=15 {
            let g = gauss_legendre(n).unwrap();
            for m in 0..=(2 * n - 1) as i32 {
                let err = (moment(&g, m) - 1.0 / (m as f64 + 1.0)).abs();
                assert!(err < 1e-13, "n={n} m={m} err={err}");
            }
        }
    }

    #[test]
    fn legendre_endpoint_derivative() {
        for n in 1..8 {
            let (p, dp) = legendre(n, 1.0);
            assert!((p - 1.0).abs() < 1e-14);
            assert!((dp - (n * (n + 1)) as f64 / 2.0).abs() < 1e-12);
        }
    }
}
