use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::exact::exact_cylinder_moment;
use super::stats::{mean_and_se, MeanEstimate};
use crate::error::{Error, Result};
use crate::limit::{LimitModel, RateSpec};
use crate::model::{Deme, TypedPartition};
use crate::offspring::ModelSpec;
use crate::pedigree::{estimate_quenched_cylinder, locus_seed, pedigree_seed, run_quenched_replicates, QuenchedConfig, TimeScale};
use crate::trajectory::Cylinder;

/// Annealed finite-N cylinder probability next to exp(t(K + M + Q)).
#[derive(Debug, Clone, Serialize)]
pub struct AnnealedComparison {
    pub population_scale: u64,
    pub finite: MeanEstimate,
    pub exact: f64,
}

/// Pools loci over independent pedigrees; the standard error is clustered by pedigree.
pub fn annealed_check(
    spec: &ModelSpec,
    rate: &RateSpec,
    sampling: &[Deme],
    cylinder: &Cylinder,
    pedigrees: u64,
    loci_per_pedigree: u64,
    seed: u64,
) -> Result<AnnealedComparison> {
    let scale = TimeScale::for_spec(spec, sampling.first().copied().unwrap_or(0), seed)?;
    let hits = estimate_quenched_cylinder(spec, sampling, scale, cylinder, pedigrees, loci_per_pedigree, seed)?;
    let fractions: Vec<f64> = hits.iter().map(|h| h.fraction()).collect();
    let model = LimitModel::new(spec.graph.clone(), sampling.len(), rate.clone())?;
    let exact = exact_cylinder_moment(&model, &TypedPartition::singletons(sampling), cylinder, 1)?;
    Ok(AnnealedComparison { population_scale: spec.population_scale, finite: MeanEstimate::from_values(&fractions, seed), exact })
}

/// Expected time to a single block from every state of the limiting single-copy chain.
pub fn expected_absorption_times(model: &LimitModel) -> Result<Vec<f64>> {
    let g = model.joint_generator(1)?;
    let states = model.space().states();
    let transient: Vec<usize> = (0..states.len()).filter(|&i| states[i].num_blocks() > 1).collect();
    let m = transient.len();
    let a = DMatrix::from_fn(m, m, |i, j| -g[(transient[i], transient[j])]);
    let tau = a
        .lu()
        .solve(&DVector::from_element(m, 1.0))
        .ok_or_else(|| Error::NumericalOverflow("absorption-time system is singular".into()))?;
    let mut out = vec![0.0; states.len()];
    for (i, &s) in transient.iter().enumerate() {
        out[s] = tau[i];
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoalescenceTimeEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: u64,
    /// Replicates not absorbed by the horizon; they enter at the horizon.
    pub truncated: u64,
}

/// Annealed mean time to the most recent common ancestor in rescaled time.
pub fn annealed_coalescence_time(
    spec: &ModelSpec,
    sampling: &[Deme],
    pedigrees: u64,
    loci_per_pedigree: u64,
    horizon: f64,
    seed: u64,
) -> Result<CoalescenceTimeEstimate> {
    let scale = TimeScale::for_spec(spec, sampling.first().copied().unwrap_or(0), seed)?;
    let config = QuenchedConfig { sampling: sampling.to_vec(), horizon, time_scale: scale, diagnostics: false };
    let per_pedigree: Vec<(f64, u64)> = (0..pedigrees)
        .into_par_iter()
        .map(|p| {
            let seeds: Vec<u64> = (0..loci_per_pedigree).map(|j| locus_seed(seed, p, j)).collect();
            let run = run_quenched_replicates(spec, &config, pedigree_seed(seed, p), &seeds)?;
            let times: Vec<Option<f64>> = run.loci.iter().map(|path| path.absorption_time()).collect();
            let truncated = times.iter().filter(|t| t.is_none()).count() as u64;
            let mean = times.iter().map(|t| t.unwrap_or(horizon)).sum::<f64>() / loci_per_pedigree as f64;
            Ok((mean, truncated))
        })
        .collect::<Result<_>>()?;
    let means: Vec<f64> = per_pedigree.iter().map(|p| p.0).collect();
    let (mean, std_error) = mean_and_se(&means);
    Ok(CoalescenceTimeEstimate {
        mean,
        std_error,
        replicates: pedigrees * loci_per_pedigree,
        truncated: per_pedigree.iter().map(|p| p.1).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DemeGraph;

    #[test]
    fn kingman_pair_time_is_one() {
        let model = LimitModel::new(DemeGraph::single(), 2, RateSpec::neutral(vec![1.0], vec![])).unwrap();
        let times = expected_absorption_times(&model).unwrap();
        let start = model.space().index_of(&TypedPartition::singletons(&[0, 0])).unwrap();
        assert!((times[start] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_deme_times_follow_the_renewal_equations() {
        // T_same = 1/(1+2μ) + 2μ/(1+2μ)·T_cross and T_cross = 1/(2μ) + T_same.
        let mu = 1.0;
        let model = LimitModel::new(DemeGraph::complete(2).unwrap(), 2, RateSpec::neutral(vec![1.0, 1.0], vec![mu, mu])).unwrap();
        let times = expected_absorption_times(&model).unwrap();
        let same = times[model.space().index_of(&TypedPartition::singletons(&[0, 0])).unwrap()];
        let cross = times[model.space().index_of(&TypedPartition::singletons(&[0, 1])).unwrap()];
        assert!((cross - same - 1.0 / (2.0 * mu)).abs() < 1e-12);
        assert!((same - (1.0 + 2.0 * mu * cross) / (1.0 + 2.0 * mu)).abs() < 1e-12);
    }

    #[test]
    fn annealed_wright_fisher_probability_is_close_to_the_limit() {
        let spec = ModelSpec::two_deme_wf(300, 1.0).unwrap();
        let rate = crate::offspring::limit_measure(&spec).unwrap();
        let cmp = annealed_check(&spec, &rate, &[0, 1], &Cylinder::merged_by(2.0), 300, 10, 4).unwrap();
        assert!((cmp.finite.mean - cmp.exact).abs() < 4.0 * cmp.finite.std_error + 0.02, "{cmp:?}");
    }
}
