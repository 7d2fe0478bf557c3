//! Finite-dimensional standard subproduct systems over the free monoid:
//! construction, validation, classification, and the associated truncated
//! Fock space, representation theory, and completely positive semigroups.

pub mod error;
pub mod kernel;
pub mod ncpoly;
pub mod sps;

pub mod cpsg;
pub mod fock;
pub mod json;
pub mod reps;

pub use error::{Error, Result};
pub use kernel::{CMatrix, Subspace, CHECK_TOL, RANK_TOL};
