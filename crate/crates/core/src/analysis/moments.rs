use rayon::prelude::*;
use serde::Serialize;

use super::exact::exact_cylinder_moment;
use super::stats::{u_statistic, MeanEstimate};
use crate::error::{invalid, Result};
use crate::limit::{LimitModel, RateSpec};
use crate::model::{Deme, TypedPartition};
use crate::offspring::ModelSpec;
use crate::pedigree::{estimate_quenched_cylinder, CylinderHits, TimeScale};
use crate::seeds;
use crate::trajectory::Cylinder;

/// Inputs shared by the finite and limiting sides of a moment comparison.
#[derive(Debug, Clone, Serialize)]
pub struct MomentConfig {
    pub sampling: Vec<Deme>,
    pub cylinder: Cylinder,
    pub moment: u32,
    pub pedigrees: u64,
    pub loci_per_pedigree: u64,
    pub psi_realizations: u64,
    pub copies_per_psi: u64,
    pub seed: u64,
}

/// E[P(C | 𝒜_N)^l] next to E[P(C | Ψ)^l] and, when available, the exact limit.
#[derive(Debug, Clone, Serialize)]
pub struct MomentComparison {
    pub moment: u32,
    pub population_scale: u64,
    pub finite: MeanEstimate,
    pub limit_mc: MeanEstimate,
    pub limit_exact: Option<f64>,
}

/// Per-group U-statistics C(S,l)/C(L,l) and their mean.
pub fn moment_from_hits(hits: &[CylinderHits], moment: u32, seed: u64) -> MeanEstimate {
    let values: Vec<f64> = hits.iter().map(|h| u_statistic(h.hits, h.loci, moment)).collect();
    MeanEstimate::from_values(&values, seed)
}

/// For each Ψ realization, how many of its copies hit the cylinder.
pub fn limit_cylinder_hits(
    model: &LimitModel,
    initial: &TypedPartition,
    cylinder: &Cylinder,
    realizations: u64,
    copies: u64,
    seed: u64,
) -> Result<Vec<CylinderHits>> {
    (0..realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeds::stream(seed, &[seeds::label("psi"), r]);
            let psi = model.sample_psi(cylinder.last_time(), copies as usize, &mut rng)?;
            let paths = model.run_psi_driven(&psi, initial, &mut rng)?;
            let hits = paths.iter().filter(|p| cylinder.contains(p)).count() as u64;
            Ok(CylinderHits { hits, loci: copies })
        })
        .collect()
}

/// Compares the l-th moment of the quenched cylinder probability at finite N with its limit.
pub fn moment_of_moments(spec: &ModelSpec, rate: &RateSpec, config: &MomentConfig) -> Result<MomentComparison> {
    let l = config.moment;
    if l == 0 || l as u64 > config.loci_per_pedigree || l as u64 > config.copies_per_psi {
        return Err(invalid("moment order must be positive and at most the loci and copies per group"));
    }
    let scale = TimeScale::for_spec(spec, config.sampling.first().copied().unwrap_or(0), config.seed)?;
    let finite_hits = estimate_quenched_cylinder(
        spec,
        &config.sampling,
        scale,
        &config.cylinder,
        config.pedigrees,
        config.loci_per_pedigree,
        seeds::derive(config.seed, &[seeds::label("finite")]),
    )?;
    let model = LimitModel::new(spec.graph.clone(), config.sampling.len(), rate.clone())?;
    let initial = TypedPartition::singletons(&config.sampling);
    let limit_hits = limit_cylinder_hits(
        &model,
        &initial,
        &config.cylinder,
        config.psi_realizations,
        config.copies_per_psi,
        seeds::derive(config.seed, &[seeds::label("limit")]),
    )?;
    let limit_exact = match exact_cylinder_moment(&model, &initial, &config.cylinder, l as usize) {
        Ok(v) => Some(v),
        Err(crate::Error::StateSpaceTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(MomentComparison {
        moment: l,
        population_scale: spec.population_scale,
        finite: moment_from_hits(&finite_hits, l, config.seed),
        limit_mc: moment_from_hits(&limit_hits, l, config.seed ^ 1),
        limit_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::limit_measure;

    #[test]
    fn first_moment_is_the_annealed_probability() {
        let spec = ModelSpec::two_deme_wf(200, 1.0).unwrap();
        let rate = limit_measure(&spec).unwrap();
        let config = MomentConfig {
            sampling: vec![0, 0],
            cylinder: Cylinder::merged_by(1.0),
            moment: 1,
            pedigrees: 200,
            loci_per_pedigree: 10,
            psi_realizations: 200,
            copies_per_psi: 10,
            seed: 3,
        };
        let cmp = moment_of_moments(&spec, &rate, &config).unwrap();
        let exact = cmp.limit_exact.unwrap();
        assert!(cmp.limit_mc.within_se(exact, 4.0), "{:?} vs {exact}", cmp.limit_mc);
        assert!((cmp.finite.mean - exact).abs() < 4.0 * cmp.finite.std_error + 0.02, "{:?} vs {exact}", cmp.finite);
    }
}
