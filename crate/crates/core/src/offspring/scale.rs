use rayon::prelude::*;
use statrs::function::gamma::gamma;

use super::draw::offspring_totals;
use super::law::sample_generation_law;
use super::spec::{FitnessLaw, ModelSpec, Preset};
use crate::error::{Error, Result};
use crate::seeds;

/// Replicates per independently seeded chunk in Monte Carlo estimators.
pub(crate) const CHUNK: u64 = 1_000;

/// c_W (2/E[W])^α α Γ(2−α)Γ(α)/8 for the Pareto fitness law (c_W = 1, E[W] = α/(α−1)).
pub(crate) fn beta_fitness_constant(alpha: f64) -> f64 {
    let mean_w = alpha / (alpha - 1.0);
    (2.0 / mean_w).powf(alpha) * alpha * gamma(2.0 - alpha) * gamma(alpha) / 8.0
}

/// Probability of a nonzero migration fraction in one generation of the random-fitness model, clamped to [0,1].
pub(crate) fn beta_fitness_event_probability(spec: &ModelSpec) -> f64 {
    match spec.preset {
        Preset::BetaFitness { alpha, .. } => {
            (beta_fitness_constant(alpha) * (spec.population_scale as f64).powf(1.0 - alpha)).clamp(0.0, 1.0)
        }
        _ => 0.0,
    }
}

/// Leading-order c_N^v for every deme.
pub fn pair_coalescence_scale_analytic(spec: &ModelSpec) -> Result<Vec<f64>> {
    let n = spec.population_scale as f64;
    let k = spec.graph.num_demes();
    let value = match &spec.preset {
        Preset::TwoDemeWf { .. } => 1.0 / (2.0 * n),
        Preset::LargeOffspring { phi, psi, gamma, .. } => 1.0 / (2.0 * n) + phi * psi * psi / (2.0 * n.powf(*gamma)),
        Preset::BetaFitness { alpha, fitness, .. } => match fitness {
            FitnessLaw::Pareto => beta_fitness_constant(*alpha) * n.powf(1.0 - alpha),
            FitnessLaw::Constant => return Err(Error::Unavailable("constant fitness has no heavy-tailed closed form".into())),
        },
        Preset::FvTorus(p) => (1.0 + p.big_lambda()) / (2.0 * n),
        Preset::Custom { .. } => return Err(Error::Unavailable("custom models have no closed form".into())),
    };
    Ok(vec![value; k])
}

/// Mean and standard error of per-replicate values, accumulated per chunk.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    pub count: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count
    }

    pub fn std_error(&self) -> f64 {
        if self.count < 2.0 {
            return f64::NAN;
        }
        let var = (self.sum_sq - self.sum * self.sum / self.count) / (self.count - 1.0);
        (var.max(0.0) / self.count).sqrt()
    }
}

/// Runs `replicates` independent per-generation statistics (one vector per draw) in seeded chunks.
pub(crate) fn replicate_vectors(
    replicates: u64,
    seed: u64,
    width: usize,
    f: impl Fn(&mut rand_chacha::ChaCha8Rng) -> Result<Vec<f64>> + Sync,
) -> Result<Vec<Moments>> {
    let chunks = replicates.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seeds::stream(seed, &[c]);
            let mut acc = vec![Moments::default(); width];
            for _ in 0..CHUNK.min(replicates - c * CHUNK) {
                for (a, x) in acc.iter_mut().zip(f(&mut rng)?) {
                    a.push(x);
                }
            }
            Ok(acc)
        })
        .try_reduce(|| vec![Moments::default(); width], |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()))
}

/// Monte Carlo c_N^v with standard errors: per draw the exchangeable average
/// Σ_i 𝒱_i(𝒱_i − 1) / (8 N*(v)(N*(v) − 1)) over the children of deme v.
pub fn pair_coalescence_scale_empirical(spec: &ModelSpec, replicates: u64, seed: u64) -> Result<Vec<(f64, f64)>> {
    let k = spec.graph.num_demes();
    let acc = replicate_vectors(replicates, seed, k, |rng| {
        let law = sample_generation_law(spec, rng)?;
        Ok((0..k)
            .map(|v| {
                let star = law.post_size[v] as f64;
                if star < 2.0 {
                    return 0.0;
                }
                let pairs: f64 = offspring_totals(&law, v, rng).iter().map(|&x| x as f64 * (x as f64 - 1.0)).sum();
                pairs / (8.0 * star * (star - 1.0))
            })
            .collect())
    })?;
    Ok(acc.iter().map(|m| (m.mean(), m.std_error())).collect())
}

/// Monte Carlo E[⌊m_e N(v)⌋ / N(v)] per edge with standard errors.
pub fn migration_scale_empirical(spec: &ModelSpec, replicates: u64, seed: u64) -> Result<Vec<(f64, f64)>> {
    let g = &spec.graph;
    let acc = replicate_vectors(replicates, seed, g.num_edges(), |rng| {
        let law = sample_generation_law(spec, rng)?;
        Ok((0..g.num_edges()).map(|e| law.migrants[e] as f64 / law.deme_size[g.edge(e).0] as f64).collect())
    })?;
    Ok(acc.iter().map(|m| (m.mean(), m.std_error())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DemeGraph;
    use crate::offspring::CustomReproduction;

    #[test]
    fn analytic_closed_forms() {
        let wf = ModelSpec::two_deme_wf(1000, 1.0).unwrap();
        assert_eq!(pair_coalescence_scale_analytic(&wf).unwrap(), vec![5.0e-4, 5.0e-4]);
        let lo = ModelSpec::large_offspring(1000, 1.0, 1.0, 0.5, 1.0).unwrap();
        assert!((pair_coalescence_scale_analytic(&lo).unwrap()[0] - 6.25e-4).abs() < 1e-15);
        let constant = ModelSpec::beta_fitness(1000, 1.5, 1.0, 1.0, FitnessLaw::Constant).unwrap();
        assert!(matches!(pair_coalescence_scale_analytic(&constant), Err(Error::Unavailable(_))));
    }

    #[test]
    fn beta_fitness_constant_matches_direct_evaluation() {
        // α = 1.5: E[W] = 3, Γ(0.5)Γ(1.5) = π/2.
        let direct = (2.0f64 / 3.0).powf(1.5) * 1.5 * std::f64::consts::PI / 2.0 / 8.0;
        assert!((beta_fitness_constant(1.5) - direct).abs() < 1e-12);
    }

    #[test]
    fn empirical_wright_fisher_within_three_se() {
        let spec = ModelSpec::two_deme_wf(200, 1.0).unwrap();
        for (est, se) in pair_coalescence_scale_empirical(&spec, 100_000, 1).unwrap() {
            assert!((est - 2.5e-3).abs() < 3.0 * se, "{est} ± {se}");
        }
    }

    #[test]
    fn empirical_large_offspring_within_three_se() {
        let spec = ModelSpec::large_offspring(200, 1.0, 1.0, 0.5, 1.0).unwrap();
        let analytic = pair_coalescence_scale_analytic(&spec).unwrap()[0];
        for (est, se) in pair_coalescence_scale_empirical(&spec, 100_000, 2).unwrap() {
            // The closed form is leading order; the floor in ⌊ψN⌋ contributes O(1/N²).
            assert!((est - analytic).abs() < 3.0 * se + 2.0 / (200.0 * 200.0), "{est} ± {se} vs {analytic}");
        }
    }

    #[test]
    fn distinct_couples_match_hypergeometric_oracle() {
        // 𝒱_1 is hypergeometric: N draws from C = N(N−1)/2 couples, N−1 of which contain individual 1.
        let n = 50.0;
        let c = n * (n - 1.0) / 2.0;
        let factorial = n * (n - 1.0) * (n - 1.0) * (n - 2.0) / (c * (c - 1.0));
        let exact = n * factorial / (8.0 * n * (n - 1.0));
        let spec = ModelSpec::custom(DemeGraph::single(), 50, vec![], CustomReproduction::DistinctCouples).unwrap();
        let (est, se) = pair_coalescence_scale_empirical(&spec, 20_000, 3).unwrap()[0];
        assert!((est - exact).abs() < 3.0 * se, "{est} ± {se} vs {exact}");
    }

    #[test]
    fn standard_error_halves_when_replicates_quadruple() {
        let spec = ModelSpec::two_deme_wf(50, 1.0).unwrap();
        let small = pair_coalescence_scale_empirical(&spec, 20_000, 4).unwrap()[0].1;
        let large = pair_coalescence_scale_empirical(&spec, 80_000, 5).unwrap()[0].1;
        assert!((small / large - 2.0).abs() < 0.2, "{small} / {large}");
    }

    #[test]
    fn wright_fisher_migration_rate_is_sigma() {
        let n = 500;
        let spec = ModelSpec::two_deme_wf(n, 2.0).unwrap();
        let c_n = 1.0 / (2.0 * n as f64);
        for (est, se) in migration_scale_empirical(&spec, 200_000, 6).unwrap() {
            assert!((est / c_n - 2.0).abs() < 3.0 * se / c_n, "{}", est / c_n);
        }
    }

    #[test]
    fn event_probability_is_clamped() {
        let spec = ModelSpec::beta_fitness(2, 1.01, 1.0, 1.0, FitnessLaw::Pareto).unwrap();
        let p = beta_fitness_event_probability(&spec);
        assert!((0.0..=1.0).contains(&p));
    }
}
