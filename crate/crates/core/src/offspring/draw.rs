use std::collections::HashMap;

use rand::Rng;

use super::law::{for_each_child, sample_generation_law, GenerationLaw};
use super::spec::ModelSpec;
use crate::error::Result;
use crate::model::{Deme, DemeGraph};

/// One fully materialized generation: migration counts and sparse couple offspring counts.
#[derive(Debug, Clone)]
pub struct ReproductionDraw {
    pub migration: Vec<f64>,
    pub migration_counts: Vec<u64>,
    pub couple_offspring: Vec<HashMap<(u32, u32), u64>>,
    pub deme_size: Vec<u64>,
    pub post_migration_size: Vec<u64>,
}

impl ReproductionDraw {
    pub fn from_law<R: Rng + ?Sized>(law: &GenerationLaw, rng: &mut R) -> Self {
        let couple_offspring = (0..law.deme_size.len())
            .map(|v| {
                let mut map = HashMap::new();
                for_each_child(law, v, rng, |c| *map.entry(c).or_insert(0) += 1);
                map
            })
            .collect();
        Self {
            migration: law.migration.clone(),
            migration_counts: law.migrants.clone(),
            couple_offspring,
            deme_size: law.deme_size.clone(),
            post_migration_size: law.post_size.clone(),
        }
    }

    /// 𝒱_i^v = Σ_{j≠i} 𝒱_{ij}^v for every individual of deme v.
    pub fn offspring_totals(&self, v: Deme) -> Vec<u64> {
        let mut totals = vec![0; self.deme_size[v] as usize];
        for (&(i, j), &k) in &self.couple_offspring[v] {
            totals[i as usize] += k;
            totals[j as usize] += k;
        }
        totals
    }

    /// Checks Σ 𝒱_{ij} = N*(v), no selfing, and N*(v) = N(v) + in − out.
    pub fn bookkeeping_holds(&self, graph: &DemeGraph) -> bool {
        (0..graph.num_demes()).all(|v| {
            let children: u64 = self.couple_offspring[v].values().sum();
            let inflow: u64 = graph.in_edges(v).iter().map(|&e| self.migration_counts[e]).sum();
            let outflow: u64 = graph.out_edges(v).iter().map(|&e| self.migration_counts[e]).sum();
            let no_selfing = self.couple_offspring[v].keys().all(|&(i, j)| i < j && (j as u64) < self.deme_size[v]);
            no_selfing && children == self.post_migration_size[v] && self.deme_size[v] + inflow == self.post_migration_size[v] + outflow
        })
    }
}

/// Samples (𝒱, m) for one generation.
pub fn sample_reproduction<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<ReproductionDraw> {
    let law = sample_generation_law(spec, rng)?;
    let draw = ReproductionDraw::from_law(&law, rng);
    debug_assert!(draw.bookkeeping_holds(&spec.graph));
    Ok(draw)
}

/// 𝒱_i^v for every individual of deme v without building the couple map.
pub(crate) fn offspring_totals<R: Rng + ?Sized>(law: &GenerationLaw, v: Deme, rng: &mut R) -> Vec<u32> {
    let mut totals = vec![0u32; law.deme_size[v] as usize];
    for_each_child(law, v, rng, |(i, j)| {
        totals[i as usize] += 1;
        totals[j as usize] += 1;
    });
    totals
}
