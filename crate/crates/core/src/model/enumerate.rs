use std::collections::HashMap;

use super::graph::DemeGraph;
use super::partition::TypedPartition;
use crate::error::{invalid, Error, Result};

/// Default refusal threshold for enumerating ℰ_n(V).
pub const MAX_STATES: u128 = 10_000_000;

/// Stirling numbers of the second kind S(n,k) for k = 0..=n.
pub fn stirling2_row(n: usize) -> Vec<u128> {
    let mut row = vec![1u128];
    for m in 1..=n {
        let mut next = vec![0u128; m + 1];
        for k in 1..=m {
            let stay = if k < row.len() { k as u128 * row[k] } else { 0 };
            next[k] = stay + row[k - 1];
        }
        row = next;
    }
    row
}

/// |ℰ_n(V)| = Σ_k S(n,k) |V|^k.
pub fn typed_partition_count(n: usize, num_demes: usize) -> u128 {
    stirling2_row(n)
        .iter()
        .enumerate()
        .map(|(k, s)| s.saturating_mul((num_demes as u128).saturating_pow(k as u32)))
        .fold(0u128, u128::saturating_add)
}

/// All restricted growth strings of length n in lexicographic order.
pub(crate) fn restricted_growth_strings(n: usize) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, max: u32, n: usize, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for r in 0..=max + 1 {
            prefix.push(r);
            rec(prefix, max.max(r), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        // the first entry is always 0, so seed the recursion with it
        rec(&mut vec![0], 0, n, &mut out);
    }
    out
}

/// Enumerates ℰ_n(V): partitions in restricted-growth order, then deme labels
/// lexicographically.
pub fn enumerate_typed_partitions(n: usize, graph: &DemeGraph) -> Result<Vec<TypedPartition>> {
    enumerate_with_limit(n, graph.num_demes(), MAX_STATES)
}

pub(crate) fn enumerate_with_limit(n: usize, num_demes: usize, limit: u128) -> Result<Vec<TypedPartition>> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let states = typed_partition_count(n, num_demes);
    if states > limit {
        return Err(Error::StateSpaceTooLarge { states, limit });
    }
    let mut out = Vec::with_capacity(states as usize);
    for rgs in restricted_growth_strings(n) {
        let blocks = *rgs.iter().max().unwrap() as usize + 1;
        let mut demes = vec![0u32; blocks];
        loop {
            out.push(TypedPartition::from_rgs(rgs.clone(), demes.clone()).expect("canonical by construction"));
            // odometer increment, last position fastest
            let mut pos = blocks;
            let advanced = loop {
                if pos == 0 {
                    break false;
                }
                pos -= 1;
                demes[pos] += 1;
                if (demes[pos] as usize) < num_demes {
                    break true;
                }
                demes[pos] = 0;
            };
            if !advanced {
                break;
            }
        }
    }
    Ok(out)
}

/// An enumerated state space with index lookup.
#[derive(Debug, Clone)]
pub struct StateSpace {
    sample_size: usize,
    num_demes: usize,
    states: Vec<TypedPartition>,
    index: HashMap<TypedPartition, usize>,
}

impl StateSpace {
    pub fn new(n: usize, graph: &DemeGraph) -> Result<Self> {
        Self::with_limit(n, graph, MAX_STATES)
    }

    pub fn with_limit(n: usize, graph: &DemeGraph, limit: u128) -> Result<Self> {
        let states = enumerate_with_limit(n, graph.num_demes(), limit)?;
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self { sample_size: n, num_demes: graph.num_demes(), states, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn num_demes(&self) -> usize {
        self.num_demes
    }

    pub fn states(&self) -> &[TypedPartition] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &TypedPartition {
        &self.states[i]
    }

    pub fn index_of(&self, s: &TypedPartition) -> Option<usize> {
        self.index.get(s).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Independent generator: insert element i into every block or a new block.
    fn brute_force(n: usize, k: usize) -> HashSet<TypedPartition> {
        let mut parts: Vec<Vec<Vec<usize>>> = vec![vec![]];
        for i in 0..n {
            let mut next = Vec::new();
            for p in &parts {
                for b in 0..p.len() {
                    let mut q = p.clone();
                    q[b].push(i);
                    next.push(q);
                }
                let mut q = p.clone();
                q.push(vec![i]);
                next.push(q);
            }
            parts = next;
        }
        let mut out = HashSet::new();
        for p in parts {
            let total = k.pow(p.len() as u32);
            for mut code in 0..total {
                let demes: Vec<usize> = (0..p.len())
                    .map(|_| {
                        let d = code % k;
                        code /= k;
                        d
                    })
                    .collect();
                out.insert(TypedPartition::from_blocks(n, &p, &demes).unwrap());
            }
        }
        out
    }

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_with_limit(1, 2, MAX_STATES).unwrap().len(), 2);
        assert_eq!(enumerate_with_limit(2, 1, MAX_STATES).unwrap().len(), 2);
        assert_eq!(enumerate_with_limit(3, 2, MAX_STATES).unwrap().len(), 22);
    }

    #[test]
    fn matches_brute_force_and_stirling() {
        for n in 1..=5 {
            for k in 1..=3 {
                let states = enumerate_with_limit(n, k, MAX_STATES).unwrap();
                let set: HashSet<_> = states.iter().cloned().collect();
                assert_eq!(set.len(), states.len(), "duplicates for n={n}, k={k}");
                assert_eq!(set, brute_force(n, k));
                assert_eq!(states.len() as u128, typed_partition_count(n, k));
            }
        }
        assert_eq!(typed_partition_count(6, 1), 203);
    }

    #[test]
    fn canonical_order() {
        let states = enumerate_with_limit(2, 2, MAX_STATES).unwrap();
        let rendered: Vec<String> = states.iter().map(|s| format!("{}|{:?}", s.rgs_string(), s.demes().collect::<Vec<_>>())).collect();
        assert_eq!(rendered, ["0,0|[0]", "0,0|[1]", "0,1|[0, 0]", "0,1|[0, 1]", "0,1|[1, 0]", "0,1|[1, 1]"]);
    }

    #[test]
    fn guard_trips() {
        assert!(matches!(enumerate_with_limit(12, 4, MAX_STATES), Err(Error::StateSpaceTooLarge { .. })));
    }
}
