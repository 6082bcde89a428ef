//! Comparisons between finite pedigrees and their scaling limits.

mod annealed;
mod exact;
mod factorial;
mod moments;
mod sfs;
mod stats;

pub use annealed::{annealed_check, annealed_coalescence_time, expected_absorption_times, AnnealedComparison, CoalescenceTimeEstimate};
pub use exact::exact_cylinder_moment;
pub use factorial::{mixed_factorial_moment, wright_fisher_migration_moment, MixedMomentEstimate, MixedMomentIndex, MAX_TUPLES};
pub use moments::{limit_cylinder_hits, moment_from_hits, moment_of_moments, MomentComparison, MomentConfig};
pub use sfs::{sfs_functional, sfs_summary, SfsSummary, SfsValue};
pub use stats::{bootstrap_ci, mean_and_se, u_statistic, variance_and_se, MeanEstimate, BOOTSTRAP_RESAMPLES};
