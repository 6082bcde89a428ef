//! Finite-population diploid reproduction models and their scaling limits.

mod draw;
mod law;
mod limit;
mod scale;
mod spec;

pub use draw::{sample_reproduction, ReproductionDraw};
pub use law::{for_each_child, sample_generation_law, DemeReproduction, Family, GenerationLaw};
pub use limit::limit_measure;
pub use scale::{migration_scale_empirical, pair_coalescence_scale_analytic, pair_coalescence_scale_empirical};
pub use spec::{CustomReproduction, FitnessLaw, FvTorusParams, ModelSpec, Preset, XiAtom};

pub(crate) use draw::offspring_totals;
pub(crate) use scale::replicate_vectors;
