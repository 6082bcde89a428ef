//! Deme graphs, simplex points, typed partitions and their state spaces.

mod enumerate;
pub(crate) use enumerate::restricted_growth_strings;
mod graph;
mod partition;
mod simplex;

pub use enumerate::{enumerate_typed_partitions, stirling2_row, typed_partition_count, StateSpace, MAX_STATES};
pub use graph::{Deme, DemeGraph, EdgeId};
pub use partition::{complete_dispersion, PairedPartition, TypedPartition};
pub use simplex::{simplex_distance, EnvironmentPoint, SimplexPoint};
