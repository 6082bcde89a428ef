use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{Deme, DemeGraph};

/// Law of the individual fitness W in the random-fitness model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessLaw {
    /// P(W ≥ z) = z^{−α} for z ≥ 1, so the tail constant is 1 and E[W] = α/(α−1).
    Pareto,
    /// W ≡ 1: plain Wright–Fisher couples. Only useful to exercise estimators.
    Constant,
}

/// One atom of Ξ, given as the fractions of the children of the focal deme
/// that descend from each prolific couple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiAtom {
    pub weight: f64,
    pub families: Vec<f64>,
}

impl XiAtom {
    /// ⟨x,x⟩ at the gene-copy level: each couple fraction f gives four copies of f/4.
    pub fn gene_self_dot(&self) -> f64 {
        self.families.iter().map(|f| f * f / 4.0).sum()
    }
}

/// Parameters of the toroidal Ξ Fleming–Viot approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FvTorusParams {
    pub l1: usize,
    pub l2: usize,
    pub rho: f64,
    pub sigma: f64,
    pub lambda: f64,
    /// ν as (radius, probability) pairs.
    pub radii: Vec<(f64, f64)>,
    /// (a_w, b_w) for every deme; a single entry is broadcast to all demes.
    pub source_beta: Vec<(f64, f64)>,
    /// Ξ as a finite mixture; weights are normalized.
    pub xi: Vec<XiAtom>,
}

impl FvTorusParams {
    pub fn default_3x3() -> Self {
        Self {
            l1: 3,
            l2: 3,
            rho: 1.2,
            sigma: 1.0,
            lambda: 2.0,
            radii: vec![(1.0, 1.0)],
            source_beta: vec![(1.0, 4.0)],
            xi: vec![XiAtom { weight: 1.0, families: vec![0.5] }],
        }
    }

    pub fn deme(&self, x: usize, y: usize) -> Deme {
        (x % self.l1) + self.l1 * (y % self.l2)
    }

    pub fn coords(&self, v: Deme) -> (usize, usize) {
        (v % self.l1, v / self.l1)
    }

    /// Euclidean distance on the torus.
    pub fn distance(&self, v: Deme, w: Deme) -> f64 {
        let (a, b) = (self.coords(v), self.coords(w));
        let wrap = |d: usize, l: usize| d.min(l - d) as f64;
        wrap(a.0.abs_diff(b.0), self.l1).hypot(wrap(a.1.abs_diff(b.1), self.l2))
    }

    /// Unordered nearest-neighbour pairs, deduplicated on short cycles.
    pub fn neighbour_pairs(&self) -> Vec<(Deme, Deme)> {
        let mut out = Vec::new();
        for y in 0..self.l2 {
            for x in 0..self.l1 {
                let v = self.deme(x, y);
                for w in [self.deme(x + 1, y), self.deme(x, y + 1)] {
                    let pair = (v.min(w), v.max(w));
                    if v != w && !out.contains(&pair) {
                        out.push(pair);
                    }
                }
            }
        }
        out
    }

    /// Demes strictly within distance r·ρ of `centre`.
    pub fn ball(&self, centre: Deme, r: f64) -> Vec<Deme> {
        (0..self.l1 * self.l2).filter(|&w| self.distance(centre, w) < r * self.rho).collect()
    }

    pub fn source_params(&self, w: Deme) -> (f64, f64) {
        if self.source_beta.len() == 1 {
            self.source_beta[0]
        } else {
            self.source_beta[w]
        }
    }

    /// (λ/|V|) ∫⟨x,x⟩ dΞ.
    pub fn big_lambda(&self) -> f64 {
        let total: f64 = self.xi.iter().map(|a| a.weight).sum();
        let dot: f64 = self.xi.iter().map(|a| a.weight * a.gene_self_dot()).sum::<f64>() / total;
        self.lambda / (self.l1 * self.l2) as f64 * dot
    }
}

/// Reproduction rule of a user-assembled model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomReproduction {
    /// Every child picks a uniform couple.
    WrightFisher,
    /// Every child has its own couple, so no two siblings exist.
    DistinctCouples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "preset")]
pub enum Preset {
    TwoDemeWf {
        sigma: f64,
    },
    LargeOffspring {
        sigma: f64,
        phi: f64,
        psi: f64,
        gamma: f64,
    },
    BetaFitness {
        alpha: f64,
        a: f64,
        b: f64,
        fitness: FitnessLaw,
    },
    FvTorus(FvTorusParams),
    /// Fixed migration fractions per edge and a chosen reproduction rule.
    Custom {
        migration: Vec<f64>,
        reproduction: CustomReproduction,
    },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::TwoDemeWf { .. } => "two_deme_wf",
            Preset::LargeOffspring { .. } => "large_offspring",
            Preset::BetaFitness { .. } => "beta_fitness",
            Preset::FvTorus(_) => "fv_torus",
            Preset::Custom { .. } => "custom",
        }
    }
}

/// A finite-N population model on a deme graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub graph: DemeGraph,
    pub population_scale: u64,
    pub preset: Preset,
}

impl ModelSpec {
    pub fn two_deme_wf(n: u64, sigma: f64) -> Result<Self> {
        Self::new(DemeGraph::complete(2)?, n, Preset::TwoDemeWf { sigma })
    }

    pub fn large_offspring(n: u64, sigma: f64, phi: f64, psi: f64, gamma: f64) -> Result<Self> {
        Self::new(DemeGraph::complete(2)?, n, Preset::LargeOffspring { sigma, phi, psi, gamma })
    }

    pub fn beta_fitness(n: u64, alpha: f64, a: f64, b: f64, fitness: FitnessLaw) -> Result<Self> {
        Self::new(DemeGraph::complete(2)?, n, Preset::BetaFitness { alpha, a, b, fitness })
    }

    pub fn fv_torus(n: u64, params: FvTorusParams) -> Result<Self> {
        let graph = DemeGraph::complete(params.l1 * params.l2)?;
        Self::new(graph, n, Preset::FvTorus(params))
    }

    pub fn custom(graph: DemeGraph, n: u64, migration: Vec<f64>, reproduction: CustomReproduction) -> Result<Self> {
        Self::new(graph, n, Preset::Custom { migration, reproduction })
    }

    pub fn new(graph: DemeGraph, population_scale: u64, preset: Preset) -> Result<Self> {
        let spec = Self { graph, population_scale, preset };
        spec.validate()?;
        Ok(spec)
    }

    /// N(v).
    pub fn deme_size(&self, v: Deme) -> u64 {
        self.graph.deme_size(v, self.population_scale)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.graph.num_demes();
        if (0..k).any(|v| self.deme_size(v) < 2) {
            return Err(invalid("every deme needs at least two individuals"));
        }
        if (0..k).any(|v| self.deme_size(v) > u32::MAX as u64) {
            return Err(invalid("deme sizes above 2^32 are not supported"));
        }
        let nonneg =
            |name: &str, x: f64| if x.is_finite() && x >= 0.0 { Ok(()) } else { Err(invalid(format!("{name} = {x} must be nonnegative"))) };
        let positive =
            |name: &str, x: f64| if x.is_finite() && x > 0.0 { Ok(()) } else { Err(invalid(format!("{name} = {x} must be positive"))) };
        let two_demes =
            || if k == 2 && self.graph.num_edges() == 2 { Ok(()) } else { Err(invalid("preset lives on two demes joined both ways")) };
        let equal_sizes = || {
            if (0..k).all(|v| self.deme_size(v) == self.population_scale) {
                Ok(())
            } else {
                Err(invalid("preset requires unit relative deme sizes"))
            }
        };
        match &self.preset {
            Preset::TwoDemeWf { sigma } => {
                two_demes()?;
                equal_sizes()?;
                nonneg("sigma", *sigma)
            }
            Preset::LargeOffspring { sigma, phi, psi, gamma } => {
                two_demes()?;
                equal_sizes()?;
                nonneg("sigma", *sigma)?;
                positive("phi", *phi)?;
                positive("gamma", *gamma)?;
                if !(*psi > 0.0 && *psi < 1.0) {
                    return Err(invalid(format!("psi = {psi} must lie in (0,1)")));
                }
                Ok(())
            }
            Preset::BetaFitness { alpha, a, b, .. } => {
                two_demes()?;
                equal_sizes()?;
                positive("a", *a)?;
                positive("b", *b)?;
                if !(*alpha > 1.0 && *alpha < 2.0) {
                    return Err(invalid(format!("alpha = {alpha} must lie in (1,2)")));
                }
                Ok(())
            }
            Preset::FvTorus(p) => {
                equal_sizes()?;
                if p.l1 == 0 || p.l2 == 0 || p.l1 * p.l2 != k {
                    return Err(invalid("torus dimensions do not match the graph"));
                }
                if self.graph.num_edges() != k * (k - 1) {
                    return Err(invalid("torus graph must be complete"));
                }
                positive("rho", p.rho)?;
                nonneg("sigma", p.sigma)?;
                nonneg("lambda", p.lambda)?;
                if p.radii.is_empty() || p.radii.iter().any(|&(r, w)| !(r > 0.0 && w > 0.0)) {
                    return Err(invalid("radius law needs positive radii and weights"));
                }
                if !(p.source_beta.len() == 1 || p.source_beta.len() == k) || p.source_beta.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0)) {
                    return Err(invalid("source Beta parameters: one pair or one per deme, all positive"));
                }
                if p.xi.is_empty()
                    || p.xi.iter().any(|a| {
                        a.weight.is_nan()
                            || a.weight <= 0.0
                            || a.families.iter().any(|f| f.is_nan() || *f <= 0.0)
                            || a.families.iter().sum::<f64>() > 1.0
                    })
                {
                    return Err(invalid("Xi atoms need positive weights and family fractions summing to at most 1"));
                }
                if self.population_scale > u32::MAX as u64 / 4 {
                    return Err(invalid("population too large for the torus model"));
                }
                Ok(())
            }
            Preset::Custom { migration, .. } => {
                if migration.len() != self.graph.num_edges() {
                    return Err(crate::Error::MismatchedGraph);
                }
                for v in 0..k {
                    let out: f64 = self.graph.out_edges(v).iter().map(|&e| migration[e]).sum();
                    if migration.iter().any(|m| !(0.0..=1.0).contains(m)) || out > 1.0 {
                        return Err(invalid(format!("migration out of deme {v} must be a sub-probability")));
                    }
                }
                Ok(())
            }
        }
    }
}
