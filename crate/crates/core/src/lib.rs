//! Gene genealogies on random pedigrees in diploid structured populations.
//!
//! The crate simulates finite populations on a deme graph, runs several loci
//! through one shared pedigree, and compares the resulting quenched laws with
//! the Poisson-driven structured coalescent that arises in the large-population
//! limit.

pub mod analysis;
pub mod error;
pub mod limit;
pub mod model;
pub mod offspring;
pub mod paintbox;
pub mod pedigree;
pub mod seeds;
pub mod trajectory;

pub use error::{Error, Result};
