use serde::{Deserialize, Serialize};

use super::graph::{DemeGraph, EdgeId};
use crate::error::{invalid, Error, Result};

pub(crate) const SIMPLEX_TOL: f64 = 1e-12;

/// A finitely supported point of the infinite simplex, masses nonincreasing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint(Vec<f64>);

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(x: SimplexPoint) -> Self {
        x.0
    }
}

impl SimplexPoint {
    /// Sorts the masses into nonincreasing order and drops zeros.
    pub fn new(mut masses: Vec<f64>) -> Result<Self> {
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0 && **m <= 1.0)) {
            return Err(invalid(format!("simplex mass {m} outside [0,1]")));
        }
        masses.retain(|&m| m > 0.0);
        masses.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = masses.iter().sum();
        if total > 1.0 + SIMPLEX_TOL {
            return Err(invalid(format!("simplex masses sum to {total} > 1")));
        }
        Ok(Self(masses))
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn masses(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Total mass ⟨x⟩.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// ⟨x,x⟩.
    pub fn self_dot(&self) -> f64 {
        self.0.iter().map(|m| m * m).sum()
    }

    /// Power sum Σ x_i^k.
    pub fn power_sum(&self, k: u32) -> f64 {
        self.0.iter().map(|m| m.powi(k as i32)).sum()
    }

    /// Splits every interval in two halves.
    pub fn halved(&self) -> Self {
        Self(self.0.iter().flat_map(|&m| [m / 2.0, m / 2.0]).collect())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|m| m * factor).collect())
    }

    fn l2_distance(&self, other: &Self) -> f64 {
        let len = self.0.len().max(other.0.len());
        let get = |x: &[f64], i: usize| x.get(i).copied().unwrap_or(0.0);
        (0..len).map(|i| (get(&self.0, i) - get(&other.0, i)).powi(2)).sum::<f64>().sqrt()
    }
}

/// One point (x, m) of Δ^V × [0,1]^E.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentPoint {
    offspring: Vec<SimplexPoint>,
    migration: Vec<f64>,
}

impl EnvironmentPoint {
    pub fn new(graph: &DemeGraph, offspring: Vec<SimplexPoint>, migration: Vec<f64>) -> Result<Self> {
        if offspring.len() != graph.num_demes() || migration.len() != graph.num_edges() {
            return Err(Error::MismatchedGraph);
        }
        if let Some(m) = migration.iter().find(|m| !(m.is_finite() && **m >= 0.0 && **m <= 1.0)) {
            return Err(invalid(format!("migration proportion {m} outside [0,1]")));
        }
        for v in 0..graph.num_demes() {
            let out: f64 = graph.out_edges(v).iter().map(|&e| migration[e]).sum();
            if out > 1.0 + SIMPLEX_TOL {
                return Err(invalid(format!("deme {v} sends a fraction {out} > 1")));
            }
        }
        Ok(Self { offspring, migration })
    }

    /// The origin 0_{V,E}.
    pub fn zero(graph: &DemeGraph) -> Self {
        Self { offspring: vec![SimplexPoint::zero(); graph.num_demes()], migration: vec![0.0; graph.num_edges()] }
    }

    pub fn num_demes(&self) -> usize {
        self.offspring.len()
    }

    pub fn num_edges(&self) -> usize {
        self.migration.len()
    }

    pub fn offspring(&self, v: usize) -> &SimplexPoint {
        &self.offspring[v]
    }

    pub fn offspring_all(&self) -> &[SimplexPoint] {
        &self.offspring
    }

    pub fn migration(&self, e: EdgeId) -> f64 {
        self.migration[e]
    }

    pub fn migration_all(&self) -> &[f64] {
        &self.migration
    }

    pub fn is_zero(&self) -> bool {
        self.offspring.iter().all(SimplexPoint::is_zero) && self.migration.iter().all(|&m| m == 0.0)
    }

    /// h_V: halves the offspring masses, leaves migration alone.
    pub fn halved(&self) -> Self {
        Self { offspring: self.offspring.iter().map(SimplexPoint::halved).collect(), migration: self.migration.clone() }
    }

    /// A stable fingerprint of the exact bit pattern, used as a cache key.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for x in &self.offspring {
            x.0.len().hash(&mut h);
            x.0.iter().for_each(|m| m.to_bits().hash(&mut h));
        }
        self.migration.iter().for_each(|m| m.to_bits().hash(&mut h));
        h.finish()
    }
}

/// d((x,m),(y,n)) = sup_v ‖x^v − y^v‖₂ + ‖m − n‖_∞.
pub fn simplex_distance(a: &EnvironmentPoint, b: &EnvironmentPoint) -> Result<f64> {
    if a.num_demes() != b.num_demes() || a.num_edges() != b.num_edges() {
        return Err(Error::MismatchedGraph);
    }
    let off = a.offspring.iter().zip(&b.offspring).map(|(x, y)| x.l2_distance(y)).fold(0.0, f64::max);
    let mig = a.migration.iter().zip(&b.migration).map(|(m, n)| (m - n).abs()).fold(0.0, f64::max);
    Ok(off + mig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_unsorted_agree() {
        let a = SimplexPoint::new(vec![0.1, 0.5, 0.0, 0.2]).unwrap();
        let b = SimplexPoint::new(vec![0.5, 0.2, 0.1]).unwrap();
        assert_eq!(a, b);
        assert!(SimplexPoint::new(vec![0.7, 0.4]).is_err());
    }

    #[test]
    fn distance_examples() {
        let g = DemeGraph::complete(2).unwrap();
        let zero = EnvironmentPoint::zero(&g);
        let unit = EnvironmentPoint::new(&g, vec![SimplexPoint::new(vec![1.0]).unwrap(), SimplexPoint::zero()], vec![0.0, 0.0]).unwrap();
        let mig = EnvironmentPoint::new(&g, vec![SimplexPoint::zero(); 2], vec![0.3, 0.0]).unwrap();
        assert_eq!(simplex_distance(&zero, &zero).unwrap(), 0.0);
        assert_eq!(simplex_distance(&zero, &unit).unwrap(), 1.0);
        assert!((simplex_distance(&zero, &mig).unwrap() - 0.3).abs() < 1e-15);
        let other = EnvironmentPoint::zero(&DemeGraph::single());
        assert_eq!(simplex_distance(&zero, &other), Err(Error::MismatchedGraph));
    }

    #[test]
    fn halving_identity() {
        let x = SimplexPoint::new(vec![0.4, 0.3, 0.05]).unwrap();
        assert!((x.halved().self_dot() - 0.5 * x.self_dot()).abs() < 1e-14);
        assert_eq!(SimplexPoint::new(vec![1.0]).unwrap().halved().masses(), &[0.5, 0.5]);
    }
}
