//! Coinless two-dimensional discrete-time quantum walk hosting a quadrupole
//! (second-order) topological phase.
//!
//! The walk is generated by four substep unitaries built from dimerized
//! nearest-neighbour rotations with a pi-flux per plaquette. This crate builds
//! the walk operators, diagonalizes the one-step operator, computes the
//! nested-Wilson-loop quadrupole invariant, simulates clean and disordered
//! dynamics, and lowers a step into a directional-coupler layout.

pub mod bloch;
pub mod error;
pub mod evolution;
pub mod lattice;
pub mod linalg;
pub mod photonic;
pub mod spectrum;
pub mod walk;

pub use error::{Error, Result};
pub use lattice::{localized_state, CouplingParams, DisorderConfig, LatticeGeometry, WaveFunction};
pub use walk::{
    apply, build_disorder, build_one_step, build_substeps, compose_disordered_step, BondParity, Boundary, OperatorKind,
    WalkOperator,
};

pub use num_complex::Complex64 as C64;
