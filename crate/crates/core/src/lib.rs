//! Simulation and analysis of randomized benchmarking protocols on one- and
//! two-qubit Clifford gate sets.
//!
//! The crate covers the full pipeline: exact channel algebra in the Pauli
//! transfer representation ([`pauli`], [`liouville`]), Clifford groups as
//! signed Pauli permutations ([`clifford`]), noise model compilation
//! ([`noise`]), group-twirl theory with per-subspace decay rates ([`twirl`]),
//! protocol simulation for standard, simultaneous, correlated, interleaved
//! and inversion-free shadow experiments ([`protocols`], [`shadow`]), and
//! decay curve fitting with fidelity reporting ([`fit`]).

pub mod clifford;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod liouville;
pub mod noise;
pub mod pauli;
pub mod protocols;
pub mod shadow;
pub mod twirl;

pub use error::{Error, Result};
