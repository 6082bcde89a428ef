use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use super::permutation::FeistelPermutation;
use crate::error::Result;
use crate::model::{Deme, DemeGraph};
use crate::offspring::{sample_generation_law, DemeReproduction, GenerationLaw, ModelSpec};
use crate::seeds::{self, derive, mix64};

const LAW: u64 = 0x004c_4157;
const MIGRANTS: u64 = 0x004d_4947;
const FAMILIES: u64 = 0x0046_414d;
const CHILD: u64 = 0x0043_4844;
const COUPLES: u64 = 0x0043_5550;

/// An individual of one generation, identified by its pre-migration deme and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Individual {
    pub deme: Deme,
    pub index: u32,
}

/// Where a child sits after migration and who its parents are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Parentage {
    /// Deme after migration, which is also the parents' deme.
    pub deme: Deme,
    /// Position among the N*(deme) post-migration children.
    pub slot: u64,
    /// Parent whose gene sits on chromosome 0, then chromosome 1.
    pub parents: [u32; 2],
}

impl Parentage {
    pub fn parent(&self, chromosome: u8) -> Individual {
        Individual { deme: self.deme, index: self.parents[chromosome as usize] }
    }
}

struct DemeLayout {
    /// Out-edges in graph order with their migrant counts.
    out: Vec<(usize, u64)>,
    stayers: u64,
    migrants: Option<FeistelPermutation>,
    families: Option<FeistelPermutation>,
    couples: Option<FeistelPermutation>,
    child_key: u64,
}

/// One generation of the pedigree, resolved on demand for any child.
///
/// Only the O(|V| + |E|) law of the generation is stored. Which individuals
/// migrate, which post-migration slot they take and which couple a slot
/// descends from are pure functions of the pedigree seed, so every locus that
/// queries the same child sees the same parents.
pub struct PedigreeGeneration {
    pub index: u64,
    pub law: GenerationLaw,
    layout: Vec<DemeLayout>,
    in_offset: Vec<u64>,
}

impl PedigreeGeneration {
    pub fn sample(spec: &ModelSpec, seed: u64, index: u64) -> Result<Self> {
        let mut rng = seeds::stream(seed, &[LAW, index]);
        let law = sample_generation_law(spec, &mut rng)?;
        Ok(Self::from_law(&spec.graph, law, seed, index))
    }

    pub fn from_law(graph: &DemeGraph, law: GenerationLaw, seed: u64, index: u64) -> Self {
        let k = graph.num_demes();
        let mut in_offset = vec![0; graph.num_edges()];
        for w in 0..k {
            let mut acc = 0;
            for &e in graph.in_edges(w) {
                in_offset[e] = acc;
                acc += law.migrants[e];
            }
        }
        let layout = (0..k)
            .map(|v| {
                let out: Vec<(usize, u64)> = graph.out_edges(v).iter().map(|&e| (e, law.migrants[e])).collect();
                let out_total: u64 = out.iter().map(|o| o.1).sum();
                let key = |tag| derive(seed, &[tag, index, v as u64]);
                let families = law.reproduction[v].family_children();
                let couples = law.deme_size[v] * law.deme_size[v].saturating_sub(1) / 2;
                DemeLayout {
                    out,
                    stayers: law.deme_size[v] - out_total,
                    migrants: (out_total > 0).then(|| FeistelPermutation::new(law.deme_size[v], key(MIGRANTS))),
                    families: (families > 0).then(|| FeistelPermutation::new(law.post_size[v], key(FAMILIES))),
                    couples: matches!(law.reproduction[v], DemeReproduction::DistinctCouples)
                        .then(|| FeistelPermutation::new(couples, key(COUPLES))),
                    child_key: key(CHILD),
                }
            })
            .collect();
        Self { index, law, layout, in_offset }
    }

    /// Post-migration deme and slot of a child.
    pub fn placement(&self, graph: &DemeGraph, child: Individual) -> (Deme, u64) {
        let layout = &self.layout[child.deme];
        let Some(perm) = &layout.migrants else {
            return (child.deme, child.index as u64);
        };
        let mut p = perm.apply(child.index as u64);
        for &(e, count) in &layout.out {
            if p < count {
                let w = graph.edge(e).1;
                return (w, self.layout[w].stayers + self.in_offset[e] + p);
            }
            p -= count;
        }
        (child.deme, p)
    }

    /// Parents of a child, consistent across every query with the same seed.
    pub fn parentage(&self, graph: &DemeGraph, child: Individual) -> Parentage {
        let (w, slot) = self.placement(graph, child);
        let n = self.law.deme_size[w] as u32;
        let layout = &self.layout[w];
        let mut rng = SmallRng::seed_from_u64(mix64(layout.child_key ^ slot));
        let rule = &self.law.reproduction[w];
        let couple = match rule {
            DemeReproduction::DistinctCouples => unrank_couple(layout.couples.as_ref().expect("couple permutation").apply(slot)),
            DemeReproduction::Families(families) => {
                let mut q = layout.families.as_ref().expect("family permutation").apply(slot);
                families
                    .iter()
                    .find_map(|f| {
                        if q < f.children {
                            Some(f.couple)
                        } else {
                            q -= f.children;
                            None
                        }
                    })
                    .unwrap_or_else(|| rule.background_couple(n, &mut rng))
            }
            _ => rule.background_couple(n, &mut rng),
        };
        let parents = if rng.random::<bool>() { [couple.0, couple.1] } else { [couple.1, couple.0] };
        Parentage { deme: w, slot, parents }
    }

    /// Every child of the generation with its parentage, for small populations.
    pub fn materialize(&self, graph: &DemeGraph) -> Vec<(Individual, Parentage)> {
        (0..graph.num_demes())
            .flat_map(|v| (0..self.law.deme_size[v] as u32).map(move |index| Individual { deme: v, index }))
            .map(|c| (c, self.parentage(graph, c)))
            .collect()
    }
}

/// The c-th unordered pair (i < j) in colexicographic order.
fn unrank_couple(c: u64) -> (u32, u32) {
    let mut j = ((1.0 + (1.0 + 8.0 * c as f64).sqrt()) / 2.0).floor() as u64;
    while j * (j - 1) / 2 > c {
        j -= 1;
    }
    while (j + 1) * j / 2 <= c {
        j += 1;
    }
    ((c - j * (j - 1) / 2) as u32, j as u32)
}

/// The pedigree as a lazily evaluated sequence of i.i.d. generations.
pub struct PedigreeStream<'a> {
    spec: &'a ModelSpec,
    seed: u64,
    next: u64,
}

impl<'a> PedigreeStream<'a> {
    pub fn new(spec: &'a ModelSpec, seed: u64) -> Self {
        Self { spec, seed, next: 0 }
    }
}

impl Iterator for PedigreeStream<'_> {
    type Item = Result<PedigreeGeneration>;

    fn next(&mut self) -> Option<Self::Item> {
        let generation = PedigreeGeneration::sample(self.spec, self.seed, self.next);
        self.next += 1;
        Some(generation)
    }
}

/// The pedigree generation by generation, starting from the sampled generation 0.
pub fn generate_pedigree_lazily(spec: &ModelSpec, seed: u64) -> PedigreeStream<'_> {
    PedigreeStream::new(spec, seed)
}
