//! Adiabatic limits of Hodge Laplacians on Heisenberg contact manifolds.
//!
//! The crate builds the bigraded de Rham complex of the Heisenberg nilmanifold
//! (exactly on left-invariant forms, and per Reeb Fourier mode on a spectral
//! grid), the ε-rescaled Laplacians `Δ_ε`, and Rumin's complex, and compares
//! the ε → 0 eigenvalue scales against the Rumin-side spaces.

pub mod cli;
pub mod complex_ops;
pub mod config;
pub mod error;
pub mod exterior;
pub mod heisenberg;
pub mod linalg;
pub mod rumin;
pub mod spectral;
pub mod sparse;

pub use error::{Error, Result};
pub use exterior::{BiDegree, CoframeLabel, ExteriorAlgebra, PointForm, C64};
