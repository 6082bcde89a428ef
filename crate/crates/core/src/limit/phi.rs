use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{Deme, DemeGraph, EdgeId, EnvironmentPoint, SimplexPoint};

/// How the scalar parameter y of a one-dimensional family maps into Δ^V × [0,1]^E.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Embedding {
    /// x^deme = y · shape, everything else zero.
    Offspring { deme: Deme, shape: SimplexPoint },
    /// m_e = y on every listed edge, no offspring mass.
    Migration { edges: Vec<EdgeId> },
}

/// One piece of a σ-finite measure Φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PhiComponent {
    /// weight · δ_point.
    Atom { weight: f64, point: EnvironmentPoint },
    /// weight · y^{−power} Beta(a, b)(dy), pushed forward by the embedding.
    Beta { weight: f64, a: f64, b: f64, power: f64, embedding: Embedding },
    /// weight · δ_offspring ⊗ ∏_e Beta(a_e, b_e)(dm_e): a fixed offspring
    /// configuration with independent Beta migration fractions.
    ProductBeta { weight: f64, offspring: Vec<SimplexPoint>, migration: Vec<(EdgeId, f64, f64)> },
}

/// The large-event intensity measure, a finite sum of components.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Phi {
    pub components: Vec<PhiComponent>,
}

impl Embedding {
    pub fn point(&self, graph: &DemeGraph, y: f64) -> Result<EnvironmentPoint> {
        let mut off = vec![SimplexPoint::zero(); graph.num_demes()];
        let mut mig = vec![0.0; graph.num_edges()];
        match self {
            Embedding::Offspring { deme, shape } => off[*deme] = shape.scaled(y)?,
            Embedding::Migration { edges } => edges.iter().for_each(|&e| mig[e] = y),
        }
        EnvironmentPoint::new(graph, off, mig)
    }

    fn halved(&self) -> Self {
        match self {
            Embedding::Offspring { deme, shape } => Embedding::Offspring { deme: *deme, shape: shape.halved() },
            other => other.clone(),
        }
    }
}

impl PhiComponent {
    pub fn weight(&self) -> f64 {
        match self {
            PhiComponent::Atom { weight, .. } | PhiComponent::Beta { weight, .. } | PhiComponent::ProductBeta { weight, .. } => *weight,
        }
    }

    fn halved(&self) -> Self {
        match self {
            PhiComponent::Atom { weight, point } => PhiComponent::Atom { weight: *weight, point: point.halved() },
            PhiComponent::Beta { weight, a, b, power, embedding } => {
                PhiComponent::Beta { weight: *weight, a: *a, b: *b, power: *power, embedding: embedding.halved() }
            }
            PhiComponent::ProductBeta { weight, offspring, migration } => PhiComponent::ProductBeta {
                weight: *weight,
                offspring: offspring.iter().map(SimplexPoint::halved).collect(),
                migration: migration.clone(),
            },
        }
    }

    /// Builds the environment point of a product component at the given migration fractions.
    pub(crate) fn product_point(
        graph: &DemeGraph,
        offspring: &[SimplexPoint],
        migration: &[(EdgeId, f64, f64)],
        m: &[f64],
    ) -> Result<EnvironmentPoint> {
        let mut mig = vec![0.0; graph.num_edges()];
        for (&(e, _, _), &y) in migration.iter().zip(m) {
            mig[e] = y;
        }
        EnvironmentPoint::new(graph, offspring.to_vec(), mig)
    }

    fn validate(&self, graph: &DemeGraph) -> Result<()> {
        if !(self.weight().is_finite() && self.weight() >= 0.0) {
            return Err(invalid(format!("component weight {} must be finite and nonnegative", self.weight())));
        }
        let one_out_edge_per_deme = |edges: &mut dyn Iterator<Item = EdgeId>| -> Result<()> {
            let mut seen = vec![false; graph.num_demes()];
            for e in edges {
                if e >= graph.num_edges() {
                    return Err(invalid(format!("edge {e} not in graph")));
                }
                let v = graph.edge(e).0;
                if seen[v] {
                    return Err(invalid(format!("deme {v} could lose its whole population: several random out-edges")));
                }
                seen[v] = true;
            }
            Ok(())
        };
        match self {
            PhiComponent::Atom { point, .. } => {
                if point.num_demes() != graph.num_demes() || point.num_edges() != graph.num_edges() {
                    return Err(crate::Error::MismatchedGraph);
                }
                for v in 0..graph.num_demes() {
                    let out: f64 = graph.out_edges(v).iter().map(|&e| point.migration(e)).sum();
                    if out >= 1.0 {
                        return Err(invalid(format!("atom sends the whole of deme {v} away")));
                    }
                }
                Ok(())
            }
            PhiComponent::Beta { a, b, power, embedding, .. } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(invalid(format!("Beta({a},{b}) parameters must be positive")));
                }
                match embedding {
                    Embedding::Offspring { deme, .. } => {
                        if *deme >= graph.num_demes() {
                            return Err(invalid(format!("deme {deme} not in graph")));
                        }
                        if *power > 2.0 {
                            return Err(invalid("offspring densities may diverge at most like y^-2"));
                        }
                    }
                    Embedding::Migration { edges } => {
                        if *power > 1.0 {
                            return Err(invalid("migration densities may diverge at most like y^-1"));
                        }
                        one_out_edge_per_deme(&mut edges.iter().copied())?;
                    }
                }
                Ok(())
            }
            PhiComponent::ProductBeta { offspring, migration, .. } => {
                if offspring.len() != graph.num_demes() {
                    return Err(crate::Error::MismatchedGraph);
                }
                if migration.iter().any(|&(_, a, b)| !(a > 0.0 && b > 0.0)) {
                    return Err(invalid("Beta parameters must be positive"));
                }
                one_out_edge_per_deme(&mut migration.iter().map(|m| m.0))
            }
        }
    }
}

impl Phi {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atoms(atoms: impl IntoIterator<Item = (f64, EnvironmentPoint)>) -> Self {
        Self { components: atoms.into_iter().map(|(weight, point)| PhiComponent::Atom { weight, point }).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.weight() == 0.0)
    }

    /// (h_V)_*Φ.
    pub fn halved(&self) -> Self {
        Self { components: self.components.iter().map(PhiComponent::halved).collect() }
    }

    pub fn validate(&self, graph: &DemeGraph) -> Result<()> {
        self.components.iter().try_for_each(|c| c.validate(graph))
    }
}

/// The triple (Φ, κ, μ) defining a limit coalescent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub phi: Phi,
    pub kappa: Vec<f64>,
    pub mu: Vec<f64>,
}

impl RateSpec {
    pub fn validate(&self, graph: &DemeGraph) -> Result<()> {
        if self.kappa.len() != graph.num_demes() || self.mu.len() != graph.num_edges() {
            return Err(crate::Error::MismatchedGraph);
        }
        if let Some(r) = self.kappa.iter().chain(&self.mu).find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(invalid(format!("rate {r} must be finite and nonnegative")));
        }
        self.phi.validate(graph)
    }

    /// Kingman plus migration only.
    pub fn neutral(kappa: Vec<f64>, mu: Vec<f64>) -> Self {
        Self { phi: Phi::zero(), kappa, mu }
    }
}
