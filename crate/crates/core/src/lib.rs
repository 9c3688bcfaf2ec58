//! Numerical laboratory for the quantum-classical correspondence.
//!
//! * [`model`] and [`grid`]: constants, potentials, phase-space points and
//!   the periodic grid with its momentum lattice.
//! * [`schrodinger`]: split-step propagation, expectation values, Ehrenfest
//!   residuals and the superposition demonstration.
//! * [`classical`]: velocity-Verlet trajectories of Hamilton's equations.
//! * [`stochastic`]: reservoir-coupled dissipative dynamics and canonical
//!   sampling.
//! * [`decoherence`]: transition amplitudes, the propagator bracket, rate
//!   extraction and the commutation function.
//!
//! Independent work items (replicas, parameter sweeps) run through
//! [`Execution`], which uses rayon when the default `parallel` feature is on.

pub mod boltzmann;
pub mod classical;
pub mod csv;
pub mod decoherence;
pub mod error;
pub mod exec;
pub mod fit;
pub mod grid;
pub mod model;
pub mod schrodinger;
pub mod stochastic;

pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::SpatialGrid;
pub use model::{
    evaluate_potential, grad_potential, hamiltonian_gradients, hamiltonian_value, PhaseSpacePoint, PhysicalConstants,
    PotentialSpec,
};
