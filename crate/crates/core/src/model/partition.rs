use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::graph::Deme;
use crate::error::{invalid, Result};

/// A partition of the sample {0..n-1} whose blocks carry deme labels.
///
/// Stored canonically as a restricted growth string (block index of every
/// sample, blocks numbered by least element) plus one deme per block, so
/// equal partitions compare and hash equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypedPartition {
    rgs: Vec<u32>,
    demes: Vec<u32>,
}

impl TypedPartition {
    /// Builds from arbitrary per-sample labels; blocks are the label classes.
    pub fn from_labels<L: Eq + std::hash::Hash + Copy>(labels: &[L], deme_of: impl Fn(L) -> Deme) -> Self {
        let mut seen: HashMap<L, u32> = HashMap::with_capacity(labels.len());
        let mut demes = Vec::new();
        let rgs = labels
            .iter()
            .map(|&l| {
                *seen.entry(l).or_insert_with(|| {
                    demes.push(deme_of(l) as u32);
                    demes.len() as u32 - 1
                })
            })
            .collect();
        Self { rgs, demes }
    }

    /// Builds from explicit blocks of 0-based sample indices.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>], demes: &[Deme]) -> Result<Self> {
        if blocks.len() != demes.len() {
            return Err(invalid("one deme label per block required"));
        }
        let mut label = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(invalid("empty block"));
            }
            for &i in block {
                if i >= n || label[i] != usize::MAX {
                    return Err(invalid(format!("sample {i} out of range or in two blocks")));
                }
                label[i] = b;
            }
        }
        if label.contains(&usize::MAX) {
            return Err(invalid("blocks do not cover the sample"));
        }
        Ok(Self::from_labels(&label, |b| demes[b]))
    }

    /// Every sample in its own block.
    pub fn singletons(demes: &[Deme]) -> Self {
        Self { rgs: (0..demes.len() as u32).collect(), demes: demes.iter().map(|&d| d as u32).collect() }
    }

    /// Directly from canonical parts. Fails when `rgs` is not a restricted growth string.
    pub fn from_rgs(rgs: Vec<u32>, demes: Vec<u32>) -> Result<Self> {
        let mut next = 0;
        for &r in &rgs {
            if r > next {
                return Err(invalid("not a restricted growth string"));
            }
            if r == next {
                next += 1;
            }
        }
        if demes.len() != next as usize {
            return Err(invalid("deme labels do not match the block count"));
        }
        Ok(Self { rgs, demes })
    }

    pub fn sample_size(&self) -> usize {
        self.rgs.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.demes.len()
    }

    pub fn rgs(&self) -> &[u32] {
        &self.rgs
    }

    pub fn demes(&self) -> impl ExactSizeIterator<Item = Deme> + '_ {
        self.demes.iter().map(|&d| d as Deme)
    }

    pub fn deme_of(&self, block: usize) -> Deme {
        self.demes[block] as Deme
    }

    pub fn block_of(&self, sample: usize) -> usize {
        self.rgs[sample] as usize
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (i, &b) in self.rgs.iter().enumerate() {
            out[b as usize].push(i);
        }
        out
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_blocks()];
        self.rgs.iter().for_each(|&b| out[b as usize] += 1);
        out
    }

    /// b_v for every deme.
    pub fn counts_per_deme(&self, num_demes: usize) -> Vec<usize> {
        let mut out = vec![0; num_demes];
        self.demes.iter().for_each(|&d| out[d as usize] += 1);
        out
    }

    /// Maps each block to a new group label; blocks sharing a label merge.
    pub fn coarsen<L: Eq + std::hash::Hash + Copy>(&self, group: &[L], deme_of_group: impl Fn(L) -> Deme) -> Self {
        let labels: Vec<L> = self.rgs.iter().map(|&b| group[b as usize]).collect();
        Self::from_labels(&labels, deme_of_group)
    }

    /// Merges blocks `a` and `b` (the merged block keeps the deme of `a`).
    pub fn merged(&self, a: usize, b: usize) -> Self {
        let group: Vec<usize> = (0..self.num_blocks()).map(|c| if c == b { a } else { c }).collect();
        self.coarsen(&group, |c| self.deme_of(c))
    }

    /// Moves block `b` to deme `w`.
    pub fn moved(&self, b: usize, w: Deme) -> Self {
        let mut out = self.clone();
        out.demes[b] = w as u32;
        out
    }

    /// Restricted growth string rendered as text, e.g. "0,0,1".
    pub fn rgs_string(&self) -> String {
        self.rgs.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for TypedPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (b, block) in self.blocks().iter().enumerate() {
            let items: Vec<String> = block.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "{{{}}}@{}", items.join(" "), self.demes[b])?;
        }
        Ok(())
    }
}

/// A typed partition together with a pairing of some of its blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairedPartition {
    base: TypedPartition,
    pairs: Vec<(usize, usize)>,
}

impl PairedPartition {
    pub fn new(base: TypedPartition, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut used = vec![false; base.num_blocks()];
        let mut norm = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let (a, b) = (a.min(b), a.max(b));
            if a == b || b >= base.num_blocks() || used[a] || used[b] {
                return Err(invalid(format!("invalid pair ({a},{b})")));
            }
            if base.deme_of(a) != base.deme_of(b) {
                return Err(invalid(format!("paired blocks {a},{b} sit in different demes")));
            }
            used[a] = true;
            used[b] = true;
            norm.push((a, b));
        }
        norm.sort_unstable();
        Ok(Self { base, pairs: norm })
    }

    /// Places every block unpaired.
    pub fn embed(base: TypedPartition) -> Self {
        Self { base, pairs: Vec::new() }
    }

    pub fn base(&self) -> &TypedPartition {
        &self.base
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// ‖ξ‖, the number of pairs.
    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }
}

/// cd_V: forgets the pairing.
pub fn complete_dispersion(p: &PairedPartition) -> TypedPartition {
    p.base.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_ignores_block_order() {
        let a = TypedPartition::from_blocks(3, &[vec![2], vec![0, 1]], &[1, 0]).unwrap();
        let b = TypedPartition::from_blocks(3, &[vec![0, 1], vec![2]], &[0, 1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rgs(), &[0, 0, 1]);
        assert_eq!(a.demes().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn dispersion_forgets_pairs() {
        let base = TypedPartition::singletons(&[0, 0, 1]);
        let p = PairedPartition::new(base.clone(), vec![(1, 0)]).unwrap();
        assert_eq!(complete_dispersion(&p), base);
        let four = TypedPartition::singletons(&[0; 4]);
        let q = PairedPartition::new(four.clone(), vec![(0, 1), (2, 3)]).unwrap();
        assert_eq!(complete_dispersion(&q), four);
        assert_eq!(complete_dispersion(&PairedPartition::embed(four.clone())), four);
    }

    #[test]
    fn pairs_must_share_a_deme() {
        let base = TypedPartition::singletons(&[0, 1]);
        assert!(PairedPartition::new(base, vec![(0, 1)]).is_err());
    }

    #[test]
    fn merge_and_move() {
        let x = TypedPartition::singletons(&[0, 1, 1]);
        let m = x.merged(1, 2);
        assert_eq!(m.rgs(), &[0, 1, 1]);
        assert_eq!(m.demes().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(x.moved(0, 1).demes().collect::<Vec<_>>(), vec![1, 1, 1]);
    }
}
