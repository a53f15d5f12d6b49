//! Hybrid quantum-classical ground-state optimization of two-dimensional
//! isometric tensor network states (isoTNS).
//!
//! The quantum processor is replaced by a seeded statevector simulator. The
//! crate contains the ansatz and its center moves ([`isotns`]), the circuit
//! that prepares it ([`circuit`]), the simulator ([`statevector`]), the two
//! effective-Hamiltonian estimators ([`estimators`]), the sweep driver
//! ([`sweep`]), exact references used for validation ([`reference`]) and the
//! benchmark presets ([`experiments`]).

pub mod circuit;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod isotns;
pub mod pauli;
pub mod reference;
pub mod rng;
pub mod statevector;
pub mod sweep;
pub mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
