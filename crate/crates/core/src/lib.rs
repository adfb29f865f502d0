//! Numerics for the Toda hierarchy on Jacobi operators: Lax flows, the
//! transfer-matrix cocycle they induce, and Weyl m-functions.

mod band;
pub mod cocycle;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod hierarchy;
pub mod lattice;
pub mod poly;
pub mod report;
pub mod runner;
pub mod weyl;

pub use error::{Error, Result};
pub use hierarchy::HierarchyPolynomial;
pub use lattice::{Boundary, JacobiWindow};
