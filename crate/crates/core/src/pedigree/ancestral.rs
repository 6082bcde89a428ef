use std::collections::HashMap;

use rand::Rng;

use super::generation::{Individual, PedigreeGeneration};
use crate::error::{Error, Result};
use crate::model::{Deme, DemeGraph, PairedPartition, TypedPartition};

/// A block of one locus: the samples it contains and the gene copy carrying it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub samples: Vec<u32>,
    pub carrier: Individual,
    pub chromosome: u8,
}

/// The blocks of one locus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocusState {
    pub blocks: Vec<Block>,
    sample_size: usize,
}

impl LocusState {
    /// One block per sample, each on chromosome 0 of its own individual.
    pub fn sampled(individuals: &[Individual]) -> Result<Self> {
        let mut seen = individuals.to_vec();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != individuals.len() {
            return Err(Error::InvalidParameters("sampled individuals must be distinct".into()));
        }
        let blocks =
            individuals.iter().enumerate().map(|(i, &carrier)| Block { samples: vec![i as u32], carrier, chromosome: 0 }).collect();
        Ok(Self { blocks, sample_size: individuals.len() })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// cd_V of the current state.
    pub fn dispersed(&self) -> TypedPartition {
        let mut label = vec![0usize; self.sample_size];
        for (b, block) in self.blocks.iter().enumerate() {
            block.samples.iter().for_each(|&s| label[s as usize] = b);
        }
        TypedPartition::from_labels(&label, |b| self.blocks[b].carrier.deme)
    }

    /// The state in 𝒮_n(V): blocks carried by one individual are paired.
    pub fn paired(&self) -> Result<PairedPartition> {
        let base = self.dispersed();
        let mut by_carrier: HashMap<Individual, Vec<usize>> = HashMap::new();
        for block in &self.blocks {
            by_carrier.entry(block.carrier).or_default().push(base.block_of(block.samples[0] as usize));
        }
        let mut pairs = Vec::new();
        for (carrier, blocks) in by_carrier {
            match blocks.as_slice() {
                [_] => {}
                [a, b] => pairs.push((*a, *b)),
                _ => return Err(Error::InconsistentPedigree(format!("{carrier:?} carries more than two blocks"))),
            }
        }
        PairedPartition::new(base, pairs)
    }

    /// Moves every block one generation back; returns whether cd_V changed.
    ///
    /// The chromosome a block sits on picks the parent, and the parental
    /// chromosome it came from is a fresh fair coin from `mendel`.
    pub fn step<R: Rng + ?Sized>(&mut self, graph: &DemeGraph, generation: &PedigreeGeneration, mendel: &mut R) -> Result<bool> {
        // Sample sizes are small, so a linear scan for collisions beats hashing.
        let mut changed = false;
        let mut next: Vec<Block> = Vec::with_capacity(self.blocks.len());
        for block in self.blocks.drain(..) {
            if block.carrier.index as u64 >= generation.law.deme_size[block.carrier.deme] {
                return Err(Error::InconsistentPedigree(format!("{:?} not in generation {}", block.carrier, generation.index)));
            }
            let parentage = generation.parentage(graph, block.carrier);
            let carrier = parentage.parent(block.chromosome);
            let chromosome = mendel.random::<bool>() as u8;
            changed |= carrier.deme != block.carrier.deme;
            match next.iter().position(|b| b.carrier == carrier && b.chromosome == chromosome) {
                Some(i) => {
                    next[i].samples.extend(block.samples);
                    changed = true;
                }
                None => {
                    next.push(Block { samples: block.samples, carrier, chromosome });
                }
            }
        }
        self.blocks = next;
        Ok(changed)
    }
}

/// Per-locus states of l loci on one pedigree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AncestralState {
    pub loci: Vec<LocusState>,
}

impl AncestralState {
    pub fn new(individuals: &[Individual], loci: usize) -> Result<Self> {
        let locus = LocusState::sampled(individuals)?;
        Ok(Self { loci: vec![locus; loci] })
    }

    /// True when no individual carries two blocks of one locus and no
    /// chromosome carries material of two loci.
    pub fn in_dispersed_set(&self) -> bool {
        let mut carriers: HashMap<Individual, usize> = HashMap::new();
        let mut chromosomes: HashMap<(Individual, u8), usize> = HashMap::new();
        for (l, locus) in self.loci.iter().enumerate() {
            for block in &locus.blocks {
                if carriers.insert(block.carrier, l) == Some(l) {
                    return false;
                }
                if chromosomes.insert((block.carrier, block.chromosome), l).is_some_and(|other| other != l) {
                    return false;
                }
            }
        }
        true
    }
}

/// One generation step for every locus, all through the same generation.
pub fn step_ancestral<R: Rng>(
    state: &mut AncestralState,
    graph: &DemeGraph,
    generation: &PedigreeGeneration,
    mendel: &mut [R],
) -> Result<Vec<bool>> {
    state.loci.iter_mut().zip(mendel).map(|(locus, rng)| locus.step(graph, generation, rng)).collect()
}

/// Sampled individuals for the given demes, one distinct individual per sample.
pub fn sample_individuals(demes: &[Deme]) -> Vec<Individual> {
    let mut next = HashMap::new();
    demes
        .iter()
        .map(|&deme| {
            let index = next.entry(deme).or_insert(0u32);
            *index += 1;
            Individual { deme, index: *index - 1 }
        })
        .collect()
}

/// Round-robin placement of n samples over the demes.
pub fn round_robin(n: usize, num_demes: usize) -> Vec<Deme> {
    (0..n).map(|i| i % num_demes).collect()
}
