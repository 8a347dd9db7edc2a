#![allow(clippy::needless_range_loop)]
//! Dense eigenvalues and banded linear solves used by the spectral and
//! time-stepping code.

pub mod banded;
pub mod eigen;

pub use banded::{BandLu, BandMatrix};
pub use eigen::{eigenvalues, hessenberg_residual, EigenSolution};
