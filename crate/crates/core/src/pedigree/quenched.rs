use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ancestral::{sample_individuals, AncestralState};
use super::generation::PedigreeGeneration;
use crate::error::{Error, Result};
use crate::model::Deme;
use crate::offspring::{pair_coalescence_scale_analytic, pair_coalescence_scale_empirical, ModelSpec};
use crate::seeds::{self, derive};
use crate::trajectory::{Cylinder, Trajectory};

/// Replicates used when c_N has to be estimated.
pub const EMPIRICAL_SCALE_REPLICATES: u64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleSource {
    Analytic,
    Empirical,
}

/// The c_N^{v0} used to rescale generations into continuous time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeScale {
    pub value: f64,
    pub reference_deme: Deme,
    pub source: ScaleSource,
}

impl TimeScale {
    /// Analytic c_N^{v0} when the preset has one, a Monte Carlo estimate otherwise.
    pub fn for_spec(spec: &ModelSpec, reference_deme: Deme, seed: u64) -> Result<Self> {
        if reference_deme >= spec.graph.num_demes() {
            return Err(Error::InvalidParameters(format!("reference deme {reference_deme} not in graph")));
        }
        match pair_coalescence_scale_analytic(spec) {
            Ok(c) => Ok(Self { value: c[reference_deme], reference_deme, source: ScaleSource::Analytic }),
            Err(Error::Unavailable(_)) => {
                let c = pair_coalescence_scale_empirical(spec, EMPIRICAL_SCALE_REPLICATES, seed)?[reference_deme].0;
                if c <= 0.0 {
                    return Err(Error::Unavailable("estimated c_N is zero; time cannot be rescaled".into()));
                }
                Ok(Self { value: c, reference_deme, source: ScaleSource::Empirical })
            }
            Err(e) => Err(e),
        }
    }

    /// Number of generations covering [0, t].
    pub fn generations(&self, t: f64) -> u64 {
        (t / self.value).floor() as u64
    }
}

/// Time spent outside the dispersed set 𝖣.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct OutsideDiagnostics {
    pub generations: u64,
    pub outside_generations: u64,
    pub rescaled_outside_time: f64,
}

/// l loci run through one pedigree.
#[derive(Debug, Clone, Serialize)]
pub struct QuenchedTrajectory {
    pub loci: Vec<Trajectory>,
    pub time_scale: TimeScale,
    pub diagnostics: Option<OutsideDiagnostics>,
}

/// Settings shared by quenched runs.
#[derive(Debug, Clone)]
pub struct QuenchedConfig {
    /// Deme of every sample; samples sit on distinct individuals.
    pub sampling: Vec<Deme>,
    pub horizon: f64,
    pub time_scale: TimeScale,
    /// Track occupation of 𝖣 every generation up to the horizon.
    pub diagnostics: bool,
}

/// Runs one locus per seed through the pedigree of `pedigree_seed`.
///
/// Loci stop early once every locus has a single block, unless diagnostics
/// are requested.
pub fn run_quenched_replicates(
    spec: &ModelSpec,
    config: &QuenchedConfig,
    pedigree_seed: u64,
    locus_seeds: &[u64],
) -> Result<QuenchedTrajectory> {
    if config.sampling.iter().any(|&v| v >= spec.graph.num_demes()) {
        return Err(Error::InvalidParameters("sampling deme not in graph".into()));
    }
    let g = &spec.graph;
    let c = config.time_scale.value;
    let individuals = sample_individuals(&config.sampling);
    if individuals.iter().any(|i| i.index as u64 >= spec.deme_size(i.deme)) {
        return Err(Error::InvalidParameters("more samples than individuals in a deme".into()));
    }
    let mut state = AncestralState::new(&individuals, locus_seeds.len())?;
    let mut mendel: Vec<ChaCha8Rng> = locus_seeds.iter().map(|&s| ChaCha8Rng::seed_from_u64(s)).collect();
    let mut loci: Vec<Trajectory> = state.loci.iter().map(|l| Trajectory::new(l.dispersed(), config.horizon)).collect();
    let mut diagnostics = config.diagnostics.then(OutsideDiagnostics::default);
    let generations = config.time_scale.generations(config.horizon);
    for k in 0..generations {
        if let Some(d) = diagnostics.as_mut() {
            d.generations += 1;
            d.outside_generations += (!state.in_dispersed_set()) as u64;
        } else if state.loci.iter().all(|l| l.num_blocks() == 1) {
            break;
        }
        let generation = PedigreeGeneration::sample(spec, pedigree_seed, k)?;
        let t = (k + 1) as f64 * c;
        for ((locus, rng), path) in state.loci.iter_mut().zip(&mut mendel).zip(&mut loci) {
            if locus.num_blocks() == 1 && diagnostics.is_none() {
                continue;
            }
            if locus.step(g, &generation, rng)? {
                path.record(t, locus.dispersed());
            }
        }
    }
    if let Some(d) = diagnostics.as_mut() {
        d.rescaled_outside_time = d.outside_generations as f64 * c;
    }
    Ok(QuenchedTrajectory { loci, time_scale: config.time_scale, diagnostics })
}

/// Seed of locus `j` on pedigree `p` under a master seed.
pub fn locus_seed(seed: u64, pedigree: u64, locus: u64) -> u64 {
    derive(seed, &[seeds::label("locus"), pedigree, locus])
}

/// Seed of pedigree `p` under a master seed.
pub fn pedigree_seed(seed: u64, pedigree: u64) -> u64 {
    derive(seed, &[seeds::label("pedigree"), pedigree])
}

/// Number of loci hitting the cylinder on each sampled pedigree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderHits {
    pub hits: u64,
    pub loci: u64,
}

impl CylinderHits {
    /// P(cd_V(χ̄) ∈ C | 𝒜_N) estimated on this pedigree.
    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.loci as f64
    }
}

/// For each of `pedigrees` pedigrees, how many of `loci_per_pedigree` loci hit the cylinder.
pub fn estimate_quenched_cylinder(
    spec: &ModelSpec,
    sampling: &[Deme],
    time_scale: TimeScale,
    cylinder: &Cylinder,
    pedigrees: u64,
    loci_per_pedigree: u64,
    seed: u64,
) -> Result<Vec<CylinderHits>> {
    let config = QuenchedConfig { sampling: sampling.to_vec(), horizon: cylinder.last_time(), time_scale, diagnostics: false };
    (0..pedigrees)
        .into_par_iter()
        .map(|p| {
            let locus_seeds: Vec<u64> = (0..loci_per_pedigree).map(|j| locus_seed(seed, p, j)).collect();
            let run = run_quenched_replicates(spec, &config, pedigree_seed(seed, p), &locus_seeds)?;
            let hits = run.loci.iter().filter(|path| cylinder.contains(path)).count() as u64;
            Ok(CylinderHits { hits, loci: loci_per_pedigree })
        })
        .collect()
}
