//! Cluster-expansion simulation of quasilocal lattice dynamics, together with
//! evaluable Lieb-Robinson-type bounds and an exact-diagonalization oracle.
//!
//! The numeric core is generic over [`Real`] (`f64` or `f32`); the aliases at
//! the crate root fix the default `f64` precision.

pub mod bounds;
pub mod causal;
pub mod cluster_sim;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod operators;
pub mod scalar;
pub mod ssb;
pub mod stats;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use scalar::{Dd, Real, C};

pub type Matrix = linalg::CMatrix<f64>;
pub type Matrix32 = linalg::CMatrix<f32>;
pub type Operator = operators::LocalOperator<f64>;
pub type Operator32 = operators::LocalOperator<f32>;
pub type Hamiltonian = operators::HamiltonianSpec<f64>;
pub type Hamiltonian32 = operators::HamiltonianSpec<f32>;
pub type InitialState = operators::State<f64>;
pub type InitialState32 = operators::State<f32>;
