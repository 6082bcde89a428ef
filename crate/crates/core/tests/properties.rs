use std::collections::HashMap;

use pedcoal::limit::{joint_generator, transition_kernel, LimitModel, Phi, RateSpec};
use pedcoal::model::{
    complete_dispersion, enumerate_typed_partitions, simplex_distance, stirling2_row, DemeGraph, EnvironmentPoint, PairedPartition,
    SimplexPoint, StateSpace, TypedPartition,
};
use pedcoal::offspring::{sample_reproduction, ModelSpec};
use pedcoal::paintbox::{halving_map, paintbox_kernel_exact, paintbox_transitions};
use pedcoal::pedigree::FeistelPermutation;
use pedcoal::seeds;
use proptest::prelude::*;

fn simplex() -> impl Strategy<Value = SimplexPoint> {
    (prop::collection::vec(0.0f64..1.0, 0..4), 0.0f64..1.0).prop_map(|(raw, total)| {
        let sum: f64 = raw.iter().sum();
        let scale = if sum > 0.0 { total / sum } else { 0.0 };
        SimplexPoint::new(raw.iter().map(|x| x * scale).collect()).unwrap()
    })
}

fn environment(graph: DemeGraph) -> impl Strategy<Value = EnvironmentPoint> {
    let (k, e) = (graph.num_demes(), graph.num_edges());
    (prop::collection::vec(simplex(), k), prop::collection::vec(0.0f64..1.0, e))
        .prop_map(move |(off, mig)| EnvironmentPoint::new(&graph, off, mig).unwrap())
}

fn two_demes() -> DemeGraph {
    DemeGraph::complete(2).unwrap()
}

/// A typed partition of [n] over two demes, from arbitrary labels.
fn partition(n: usize) -> impl Strategy<Value = TypedPartition> {
    (prop::collection::vec(0usize..n, n), prop::collection::vec(0usize..2, n))
        .prop_map(|(labels, demes)| TypedPartition::from_labels(&labels, |l| demes[l]))
}

/// Relabels samples: sample i of the result sits where sample perm[i] sat.
fn relabel(p: &TypedPartition, perm: &[usize]) -> TypedPartition {
    let labels: Vec<usize> = perm.iter().map(|&i| p.block_of(i)).collect();
    TypedPartition::from_labels(&labels, |b| p.deme_of(b))
}

fn random_generator(kappa: Vec<f64>, mu: Vec<f64>, atoms: Vec<(f64, EnvironmentPoint)>, n: usize, loci: usize) -> nalgebra::DMatrix<f64> {
    let graph = two_demes();
    let rate = RateSpec { phi: Phi::atoms(atoms), kappa, mu };
    joint_generator(&StateSpace::new(n, &graph).unwrap(), &graph, &rate, loci).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn distance_is_symmetric_and_triangular(
        a in environment(two_demes()),
        b in environment(two_demes()),
        c in environment(two_demes()),
    ) {
        let ab = simplex_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, simplex_distance(&b, &a).unwrap());
        prop_assert!(simplex_distance(&a, &a).unwrap() == 0.0);
        let bc = simplex_distance(&b, &c).unwrap();
        let ac = simplex_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }
}

proptest! {
    #[test]
    fn simplex_constructor_ignores_order(x in simplex(), seed in any::<u64>()) {
        let mut shuffled = x.masses().to_vec();
        let k = shuffled.len();
        if k > 1 {
            shuffled.rotate_left((seed % k as u64) as usize);
        }
        prop_assert_eq!(SimplexPoint::new(shuffled).unwrap(), x);
    }

    #[test]
    fn dispersion_undoes_embedding(p in (2usize..7).prop_flat_map(partition)) {
        prop_assert_eq!(complete_dispersion(&PairedPartition::embed(p.clone())), p);
    }

    #[test]
    fn halving_identity(x in simplex()) {
        prop_assert!((x.halved().self_dot() - 0.5 * x.self_dot()).abs() <= 1e-14);
        prop_assert!((x.halved().total() - x.total()).abs() <= 1e-14);
    }

    #[test]
    fn paintbox_rows_are_stochastic(p in environment(two_demes()), n in 1usize..=4) {
        let graph = two_demes();
        let space = StateSpace::new(n, &graph).unwrap();
        let kernel = paintbox_kernel_exact(&p, &graph, &space);
        for row in kernel.row_iter() {
            prop_assert!((row.sum() - 1.0).abs() <= 1e-10);
            prop_assert!(row.iter().all(|&x| x >= -1e-15));
        }
    }

    #[test]
    fn paintbox_is_exchangeable(
        p in environment(two_demes()),
        xi in partition(4),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let graph = two_demes();
        let direct: HashMap<TypedPartition, f64> = paintbox_transitions(&p, &graph, &xi)
            .into_iter()
            .map(|(eta, q)| (relabel(&eta, &perm), q))
            .collect();
        let relabelled = paintbox_transitions(&p, &graph, &relabel(&xi, &perm));
        prop_assert_eq!(direct.len(), relabelled.len());
        for (eta, q) in relabelled {
            prop_assert!((direct[&eta] - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn halved_single_family_merges_pair_at_half_square(q in 0.0f64..1.0) {
        let graph = two_demes();
        let p = EnvironmentPoint::new(&graph, vec![SimplexPoint::new(vec![q]).unwrap(), SimplexPoint::zero()], vec![0.0, 0.0]).unwrap();
        let xi = TypedPartition::singletons(&[0, 0]);
        let merged: f64 = paintbox_transitions(&halving_map(&p), &graph, &xi)
            .into_iter()
            .filter(|(eta, _)| eta.num_blocks() == 1)
            .map(|(_, w)| w)
            .sum();
        prop_assert!((merged - q * q / 2.0).abs() <= 1e-14);
    }

    #[test]
    fn generator_rows_sum_to_zero(
        kappa in prop::collection::vec(0.0f64..5.0, 2),
        mu in prop::collection::vec(0.0f64..5.0, 2),
        atoms in prop::collection::vec((0.0f64..3.0, environment(two_demes())), 0..3),
        n in 1usize..=3,
        loci in 1usize..=2,
    ) {
        let g = random_generator(kappa, mu, atoms, n, loci);
        for i in 0..g.nrows() {
            prop_assert!(g.row(i).sum().abs() <= 1e-12 * (1.0 + g[(i, i)].abs()));
            prop_assert!((0..g.ncols()).filter(|&j| j != i).all(|j| g[(i, j)] >= 0.0));
        }
    }

    #[test]
    fn kernels_are_stochastic_semigroups(
        kappa in prop::collection::vec(0.0f64..5.0, 2),
        mu in prop::collection::vec(0.0f64..5.0, 2),
        atoms in prop::collection::vec((0.0f64..3.0, environment(two_demes())), 0..3),
        s in 0.0f64..2.0,
        t in 0.0f64..2.0,
    ) {
        let g = random_generator(kappa, mu, atoms, 3, 1);
        let (ps, pt, pst) = (transition_kernel(&g, s).unwrap(), transition_kernel(&g, t).unwrap(), transition_kernel(&g, s + t).unwrap());
        for p in [&ps, &pt, &pst] {
            prop_assert!(p.row_iter().all(|r| (r.sum() - 1.0).abs() <= 1e-9));
        }
        prop_assert!((&ps * &pt - &pst).abs().max() <= 1e-8);
    }

    #[test]
    fn feistel_is_a_bijection(n in 1u64..2000, key in any::<u64>()) {
        let prp = FeistelPermutation::new(n, key);
        let mut seen = vec![false; n as usize];
        for x in 0..n {
            let y = prp.apply(x);
            prop_assert!(y < n && !seen[y as usize]);
            seen[y as usize] = true;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reproduction_bookkeeping(n in 20u64..400, sigma in 0.0f64..3.0, psi in 0.05f64..0.95, phi in 0.1f64..5.0, seed in any::<u64>()) {
        for spec in [ModelSpec::two_deme_wf(n, sigma).unwrap(), ModelSpec::large_offspring(n, sigma, phi, psi, 1.0).unwrap()] {
            let draw = sample_reproduction(&spec, &mut seeds::stream(seed, &[0])).unwrap();
            prop_assert!(draw.bookkeeping_holds(&spec.graph));
        }
    }

    #[test]
    fn psi_driven_block_counts_never_increase(seed in any::<u64>(), sampling in prop::collection::vec(0usize..2, 2..=4)) {
        let spec = ModelSpec::large_offspring(1000, 1.0, 2.0, 0.6, 1.0).unwrap();
        let model = LimitModel::new(spec.graph.clone(), sampling.len(), pedcoal::offspring::limit_measure(&spec).unwrap()).unwrap();
        let mut rng = seeds::stream(seed, &[1]);
        let psi = model.sample_psi(3.0, 2, &mut rng).unwrap();
        let paths = model.run_psi_driven(&psi, &TypedPartition::singletons(&sampling), &mut rng).unwrap();
        prop_assert!(paths.iter().all(|p| p.block_count_nonincreasing()));
    }
}

#[test]
fn state_space_sizes_match_stirling_sums() {
    for demes in 1..=3 {
        let graph = DemeGraph::complete(demes).unwrap();
        for n in 1..=6 {
            let expected: u128 = stirling2_row(n).iter().enumerate().skip(1).map(|(k, &s)| s * (demes as u128).pow(k as u32)).sum();
            assert_eq!(enumerate_typed_partitions(n, &graph).unwrap().len() as u128, expected);
        }
    }
}
