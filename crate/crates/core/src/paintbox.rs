//! The structured (x, m, ξ) paintbox: sampling, exact kernels and the halving map.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::Result;
use crate::model::{restricted_growth_strings, Deme, DemeGraph, EnvironmentPoint, SimplexPoint, StateSpace, TypedPartition};

/// h_V applied to an environment point.
pub fn halving_map(p: &EnvironmentPoint) -> EnvironmentPoint {
    p.halved()
}

/// Destination law of a block sitting in deme `v`: (deme, probability), zero entries skipped.
fn destinations(p: &EnvironmentPoint, graph: &DemeGraph, v: Deme) -> Vec<(Deme, f64)> {
    let out = graph.out_edges(v);
    let moving: f64 = out.iter().map(|&e| p.migration(e)).sum();
    let mut dest = Vec::with_capacity(out.len() + 1);
    if moving < 1.0 {
        dest.push((v, 1.0 - moving));
    }
    dest.extend(out.iter().filter(|&&e| p.migration(e) > 0.0).map(|&e| (graph.edge(e).1, p.migration(e))));
    dest
}

/// Draws one paintbox transition ξ → η.
pub fn paintbox_sample<R: Rng + ?Sized>(p: &EnvironmentPoint, graph: &DemeGraph, xi: &TypedPartition, rng: &mut R) -> TypedPartition {
    const DUST: usize = usize::MAX;
    let labels: Vec<(Deme, usize, usize)> = (0..xi.num_blocks())
        .map(|b| {
            let v = xi.deme_of(b);
            let mut u: f64 = rng.random();
            let mut w = v;
            for &e in graph.out_edges(v) {
                let m = p.migration(e);
                if u < m {
                    w = graph.edge(e).1;
                    break;
                }
                u -= m;
            }
            let mut u: f64 = rng.random();
            let interval = p.offspring(w).masses().iter().position(|&x| {
                if u < x {
                    true
                } else {
                    u -= x;
                    false
                }
            });
            match interval {
                Some(i) => (w, i, DUST),
                None => (w, DUST, b),
            }
        })
        .collect();
    xi.coarsen(&labels, |(w, _, _)| w)
}

/// Power sums and cached injective-assignment weights for one deme's simplex point.
struct DemeWeights {
    power: Vec<f64>,
    dust: f64,
    inj: HashMap<Vec<usize>, f64>,
}

impl DemeWeights {
    fn new(x: &SimplexPoint, max_power: usize) -> Self {
        let power = (0..=max_power).map(|k| if k == 0 { 0.0 } else { x.power_sum(k as u32) }).collect();
        Self { power, dust: (1.0 - x.total()).max(0.0), inj: HashMap::new() }
    }

    /// Σ over distinct intervals i_1..i_r of ∏ x_{i_j}^{y_j}, by Möbius inversion
    /// on the partition lattice: Σ_σ ∏_B (−1)^{|B|−1}(|B|−1)! p_{y(B)}.
    fn injective(&mut self, sizes: &[usize]) -> f64 {
        let mut key = sizes.to_vec();
        key.sort_unstable();
        if let Some(&v) = self.inj.get(&key) {
            return v;
        }
        let r = key.len();
        let value = if r == 0 {
            1.0
        } else {
            restricted_growth_strings(r)
                .iter()
                .map(|rgs| {
                    let nb = *rgs.iter().max().unwrap() as usize + 1;
                    let mut tot = vec![0usize; nb];
                    let mut card = vec![0usize; nb];
                    for (j, &b) in rgs.iter().enumerate() {
                        tot[b as usize] += key[j];
                        card[b as usize] += 1;
                    }
                    (0..nb)
                        .map(|b| {
                            let c = card[b];
                            let sign = if c % 2 == 1 { 1.0 } else { -1.0 };
                            sign * factorial(c - 1) * self.power[tot[b]]
                        })
                        .product::<f64>()
                })
                .sum()
        };
        self.inj.insert(key, value);
        value
    }

    /// Probability that the blocks landing in this deme merge exactly into groups of the given sizes.
    fn pattern(&mut self, group_sizes: &[usize]) -> f64 {
        let big: Vec<usize> = group_sizes.iter().copied().filter(|&s| s > 1).collect();
        let singles = group_sizes.len() - big.len();
        (0..=singles)
            .map(|in_dust| {
                if in_dust > 0 && self.dust == 0.0 {
                    return 0.0;
                }
                let mut sizes = big.clone();
                sizes.extend(std::iter::repeat_n(1, singles - in_dust));
                binomial(singles, in_dust) * self.dust.powi(in_dust as i32) * self.injective(&sizes)
            })
            .sum()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// Exact transition law out of `xi`: every reachable η with its probability.
pub fn paintbox_transitions(p: &EnvironmentPoint, graph: &DemeGraph, xi: &TypedPartition) -> Vec<(TypedPartition, f64)> {
    let nb = xi.num_blocks();
    let dests: Vec<Vec<(Deme, f64)>> = (0..nb).map(|b| destinations(p, graph, xi.deme_of(b))).collect();
    let mut weights: Vec<DemeWeights> = p.offspring_all().iter().map(|x| DemeWeights::new(x, nb)).collect();
    let mut set_partitions: HashMap<usize, Vec<Vec<u32>>> = HashMap::new();
    let mut out: HashMap<TypedPartition, f64> = HashMap::new();

    let mut choice = vec![0usize; nb];
    'assign: loop {
        let mut prob = 1.0;
        let mut arrivals: Vec<Vec<usize>> = vec![Vec::new(); graph.num_demes()];
        for b in 0..nb {
            let (w, pr) = dests[b][choice[b]];
            prob *= pr;
            arrivals[w].push(b);
        }
        if prob > 0.0 {
            let occupied: Vec<Deme> = (0..graph.num_demes()).filter(|&w| !arrivals[w].is_empty()).collect();
            for w in &occupied {
                set_partitions.entry(arrivals[*w].len()).or_insert_with(|| restricted_growth_strings(arrivals[*w].len()));
            }
            // odometer over one set partition per occupied deme
            let mut pick = vec![0usize; occupied.len()];
            loop {
                let mut pr = prob;
                let mut group = vec![(0usize, 0u32); nb];
                for (slot, &w) in occupied.iter().enumerate() {
                    let rgs = &set_partitions[&arrivals[w].len()][pick[slot]];
                    let ng = *rgs.iter().max().unwrap() as usize + 1;
                    let mut sizes = vec![0usize; ng];
                    rgs.iter().for_each(|&g| sizes[g as usize] += 1);
                    pr *= weights[w].pattern(&sizes);
                    for (k, &b) in arrivals[w].iter().enumerate() {
                        group[b] = (w, rgs[k]);
                    }
                }
                if pr > 0.0 {
                    *out.entry(xi.coarsen(&group, |(w, _)| w)).or_insert(0.0) += pr;
                }
                let mut slot = occupied.len();
                let advanced = loop {
                    if slot == 0 {
                        break false;
                    }
                    slot -= 1;
                    pick[slot] += 1;
                    if pick[slot] < set_partitions[&arrivals[occupied[slot]].len()].len() {
                        break true;
                    }
                    pick[slot] = 0;
                };
                if !advanced {
                    break;
                }
            }
        }
        let mut b = nb;
        loop {
            if b == 0 {
                break 'assign;
            }
            b -= 1;
            choice[b] += 1;
            if choice[b] < dests[b].len() {
                break;
            }
            choice[b] = 0;
        }
    }
    let mut rows: Vec<_> = out.into_iter().collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    rows
}

/// q(ξ, ξ): no block moves and no two blocks merge.
pub fn stay_probability(p: &EnvironmentPoint, graph: &DemeGraph, xi: &TypedPartition) -> f64 {
    let counts = xi.counts_per_deme(graph.num_demes());
    counts
        .iter()
        .enumerate()
        .filter(|(_, &b)| b > 0)
        .map(|(v, &b)| {
            let moving: f64 = graph.out_edges(v).iter().map(|&e| p.migration(e)).sum();
            let mut w = DemeWeights::new(p.offspring(v), b);
            (1.0 - moving).max(0.0).powi(b as i32) * w.pattern(&vec![1; b])
        })
        .product()
}

/// Sparse kernel row indexed by the state space, sorted by column.
pub fn paintbox_row(p: &EnvironmentPoint, graph: &DemeGraph, space: &StateSpace, state: usize) -> Vec<(usize, f64)> {
    let mut row: Vec<(usize, f64)> = paintbox_transitions(p, graph, space.state(state))
        .into_iter()
        .map(|(eta, pr)| (space.index_of(&eta).expect("paintbox output lies in the state space"), pr))
        .collect();
    row.sort_by_key(|&(j, _)| j);
    row
}

/// The full kernel q_n(x,m) over ℰ_n(V).
pub fn paintbox_kernel_exact(p: &EnvironmentPoint, graph: &DemeGraph, space: &StateSpace) -> DMatrix<f64> {
    let n = space.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, pr) in paintbox_row(p, graph, space, i) {
            k[(i, j)] = pr;
        }
    }
    k
}

/// H_l = ⊗^l q_n(x,m) over ℰ_n(V)^l, the first copy varying slowest.
pub fn joint_kernel(p: &EnvironmentPoint, graph: &DemeGraph, space: &StateSpace, loci: usize) -> Result<DMatrix<f64>> {
    let single = paintbox_kernel_exact(p, graph, space);
    kronecker_power(&single, loci)
}

pub(crate) fn kronecker_power(m: &DMatrix<f64>, l: usize) -> Result<DMatrix<f64>> {
    let dim = (m.nrows() as u128).pow(l as u32);
    if dim > crate::limit::MAX_DENSE_DIM as u128 {
        return Err(crate::Error::StateSpaceTooLarge { states: dim, limit: crate::limit::MAX_DENSE_DIM as u128 });
    }
    let mut out = DMatrix::identity(1, 1);
    for _ in 0..l {
        out = out.kronecker(m);
    }
    Ok(out)
}

type SparseRow = Arc<Vec<(usize, f64)>>;

/// Sparse kernel rows keyed by (point fingerprint, state), shared across threads.
#[derive(Debug, Default)]
pub struct KernelCache {
    rows: RwLock<HashMap<(u64, usize), SparseRow>>,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn row(&self, p: &EnvironmentPoint, graph: &DemeGraph, space: &StateSpace, state: usize) -> Arc<Vec<(usize, f64)>> {
        let key = (p.fingerprint(), state);
        if let Some(row) = self.rows.read().expect("cache lock").get(&key) {
            return Arc::clone(row);
        }
        let row = Arc::new(paintbox_row(p, graph, space, state));
        self.rows.write().expect("cache lock").entry(key).or_insert(row).clone()
    }

    pub fn len(&self) -> usize {
        self.rows.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn point(g: &DemeGraph, x: &[Vec<f64>], m: &[f64]) -> EnvironmentPoint {
        EnvironmentPoint::new(g, x.iter().map(|v| SimplexPoint::new(v.clone()).unwrap()).collect(), m.to_vec()).unwrap()
    }

    #[test]
    fn zero_point_is_identity() {
        let g = DemeGraph::complete(2).unwrap();
        let space = StateSpace::new(3, &g).unwrap();
        let k = paintbox_kernel_exact(&EnvironmentPoint::zero(&g), &g, &space);
        assert_eq!(k, DMatrix::identity(space.len(), space.len()));
    }

    #[test]
    fn pair_merges_with_p_squared() {
        let g = DemeGraph::single();
        let space = StateSpace::new(2, &g).unwrap();
        let p = point(&g, &[vec![0.3]], &[]);
        let k = paintbox_kernel_exact(&p, &g, &space);
        let apart = space.index_of(&TypedPartition::singletons(&[0, 0])).unwrap();
        let merged = 1 - apart;
        assert!((k[(apart, merged)] - 0.09).abs() < 1e-15);
        // halved point: 2 (q/2)^2 = q^2/2
        let kh = paintbox_kernel_exact(&halving_map(&p), &g, &space);
        assert!((kh[(apart, merged)] - 0.045).abs() < 1e-15);
    }

    #[test]
    fn three_samples_match_enumeration_oracle() {
        let (a, b) = (0.45, 0.3);
        let g = DemeGraph::single();
        let p = point(&g, &[vec![a, b]], &[]);
        let xi = TypedPartition::singletons(&[0, 0, 0]);
        let mut oracle: HashMap<TypedPartition, f64> = HashMap::new();
        let probs = [a, b, 1.0 - a - b];
        for code in 0..27usize {
            let slots = [code % 3, (code / 3) % 3, code / 9];
            let pr: f64 = slots.iter().map(|&s| probs[s]).product();
            let labels: Vec<(usize, usize)> = slots.iter().enumerate().map(|(i, &s)| if s == 2 { (2, i) } else { (s, 99) }).collect();
            *oracle.entry(xi.coarsen(&labels, |_| 0)).or_insert(0.0) += pr;
        }
        let exact: HashMap<_, _> = paintbox_transitions(&p, &g, &xi).into_iter().collect();
        assert_eq!(exact.len(), oracle.len());
        for (eta, pr) in oracle {
            assert!((exact[&eta] - pr).abs() < 1e-14, "{eta}: {} vs {pr}", exact[&eta]);
        }
    }

    #[test]
    fn rows_are_stochastic_and_diagonal_matches() {
        let g = DemeGraph::complete(2).unwrap();
        let space = StateSpace::new(4, &g).unwrap();
        let p = point(&g, &[vec![0.3, 0.2, 0.1], vec![0.5]], &[0.2, 0.1]);
        let k = paintbox_kernel_exact(&p, &g, &space);
        for i in 0..space.len() {
            assert!((k.row(i).sum() - 1.0).abs() < 1e-10);
            assert!((k[(i, i)] - stay_probability(&p, &g, space.state(i))).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_interval_merges_everything() {
        let g = DemeGraph::single();
        let p = point(&g, &[vec![1.0]], &[]);
        let xi = TypedPartition::singletons(&[0; 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(paintbox_sample(&p, &g, &xi, &mut rng).num_blocks(), 1);
    }

    #[test]
    fn single_block_moves_with_migration_probability() {
        let g = DemeGraph::complete(2).unwrap();
        let p = point(&g, &[vec![], vec![]], &[0.3, 0.0]);
        let xi = TypedPartition::singletons(&[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let moved = (0..draws).filter(|_| paintbox_sample(&p, &g, &xi, &mut rng).deme_of(0) == 1).count();
        let freq = moved as f64 / draws as f64;
        let se = (0.3f64 * 0.7 / draws as f64).sqrt();
        assert!((freq - 0.3).abs() < 3.0 * se, "{freq}");
    }

    #[test]
    fn joint_kernel_is_a_product() {
        let g = DemeGraph::single();
        let space = StateSpace::new(2, &g).unwrap();
        let p = point(&g, &[vec![0.6]], &[]);
        let q = paintbox_kernel_exact(&p, &g, &space);
        let h = joint_kernel(&p, &g, &space, 2).unwrap();
        let n = space.len();
        for a in 0..n {
            for b in 0..n {
                assert!((h[(a * n + a, b * n + b)] - q[(a, b)].powi(2)).abs() < 1e-15);
            }
        }
        assert_eq!(joint_kernel(&p, &g, &space, 1).unwrap(), q);
    }
}
