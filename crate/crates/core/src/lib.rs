//! Numerical toolkit for the Timoshenko beam with locally distributed
//! damping on the rotation equation: modal analysis, the Riemann-invariant
//! transport formulation, time stepping and discrete spectral diagnostics.

pub mod beam_model;
pub mod error;
pub mod linalg;
pub mod modal_analysis;
pub mod riemann_transform;
pub mod semigroup_sim;
pub mod spectral_tools;
pub mod transport_operator;

pub use error::{Error, Result};
