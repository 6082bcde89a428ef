use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};

/// Gauss–Jacobi rule for the Beta(a, b) probability measure on [0, 1].
///
/// Nodes are eigenvalues of the Jacobi matrix of the weight (1−t)^{b−1}(1+t)^{a−1}
/// on [−1, 1] mapped through y = (1+t)/2 (Golub–Welsch); weights are the squared
/// first eigenvector components, which already sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl BetaRule {
    pub fn new(a: f64, b: f64, k: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) || k == 0 {
            return Err(invalid(format!("Beta({a},{b}) rule with {k} nodes")));
        }
        let (al, be) = (b - 1.0, a - 1.0);
        let s = al + be;
        let mut j = DMatrix::zeros(k, k);
        for i in 0..k {
            let fi = i as f64;
            j[(i, i)] = if i == 0 { (be - al) / (s + 2.0) } else { (be * be - al * al) / ((2.0 * fi + s) * (2.0 * fi + s + 2.0)) };
            if i + 1 < k {
                let m = fi + 1.0;
                let off2 = if i == 0 {
                    4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + s).powi(2) * (3.0 + s))
                } else {
                    4.0 * m * (m + al) * (m + be) * (m + s) / ((2.0 * m + s).powi(2) * (2.0 * m + s + 1.0) * (2.0 * m + s - 1.0))
                };
                j[(i, i + 1)] = off2.sqrt();
                j[(i + 1, i)] = off2.sqrt();
            }
        }
        let eig = SymmetricEigen::new(j);
        let mut pairs: Vec<(f64, f64)> = (0..k).map(|i| ((1.0 + eig.eigenvalues[i]) / 2.0, eig.eigenvectors[(0, i)].powi(2))).collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Ok(Self { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1 / total).collect() })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&y, &w)| w * f(y)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta;

    #[test]
    fn reproduces_beta_moments() {
        for &(a, b) in &[(0.5, 0.5), (1.0, 1.0), (2.0, 5.0), (0.3, 1.7), (1.5, 0.5)] {
            let rule = BetaRule::new(a, b, 12).unwrap();
            for k in 0..20 {
                let exact = beta(a + k as f64, b) / beta(a, b);
                let approx = rule.integrate(|y| y.powi(k));
                assert!((approx - exact).abs() < 1e-12 * exact.max(1e-3), "a={a} b={b} k={k}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn uniform_midpoint() {
        let rule = BetaRule::new(1.0, 1.0, 1).unwrap();
        assert!((rule.nodes[0] - 0.5).abs() < 1e-15);
    }
}
