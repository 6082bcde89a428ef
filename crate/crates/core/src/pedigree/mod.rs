//! The finite-population pedigree and gene genealogies running through it.

mod ancestral;
mod generation;
mod permutation;
mod quenched;

pub use ancestral::{round_robin, sample_individuals, step_ancestral, AncestralState, Block, LocusState};
pub use generation::{generate_pedigree_lazily, Individual, Parentage, PedigreeGeneration, PedigreeStream};
pub use permutation::FeistelPermutation;
pub use quenched::{
    estimate_quenched_cylinder, locus_seed, pedigree_seed, run_quenched_replicates, CylinderHits, OutsideDiagnostics, QuenchedConfig,
    QuenchedTrajectory, ScaleSource, TimeScale, EMPIRICAL_SCALE_REPLICATES,
};
