//! The limiting structured coalescent: rates, generators, exponentials and the
//! pathwise Ψ-driven construction.

mod generator;
mod phi;
mod psi;
mod quadrature;

pub use generator::{
    beta_component, effective_rates, joint_generator, kingman_generator, kronecker_sum, large_event_generator, migration_generator,
    neutral_transitions, transition_kernel, MAX_DENSE_DIM, QUADRATURE_NODES, QUADRATURE_TOL,
};
pub use phi::{Embedding, Phi, PhiComponent, RateSpec};
pub use psi::{CopyMarks, LimitModel, PsiAtom, PsiRealization};
pub use quadrature::BetaRule;
