//! Quantum and thermal annealing of the ferromagnetic p-spin model.
//!
//! Everything works in the maximum-spin (Dicke) sector of `N` spin-1/2
//! particles, a space of dimension `N + 1`. Energies are measured in units
//! of the transverse field `Γ` and times in units of `ħ/Γ`.
//!
//! The crate provides:
//!
//! * [`sector`]: collective spin operators and the annealing Hamiltonians,
//! * [`eigen`]: small dense and tridiagonal symmetric eigensolvers,
//! * [`gap`]: minimum-gap scans along the schedule,
//! * [`full_space`]: explicit `2^N` Hamiltonians used to validate the sector
//!   restriction,
//! * [`bath`]: Ohmic bath spectrum and Lamb-shift kernel,
//! * [`evolve`]: closed (Schrödinger) and open (adiabatic Lindblad) dynamics,
//! * [`observables`]: residual energy, fidelity, Gibbs weights and fits,
//! * [`thermal`]: simulated annealing through the Glauber master equation.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod eigen;
mod error;
pub mod evolve;
pub mod full_space;
pub mod gap;
pub mod observables;
pub mod quadrature;
pub mod sector;
pub mod thermal;

pub use bath::{BathSpec, PreparedBath};
pub use eigen::{eig_sorted, Eigen};
pub use error::{Error, Result};
pub use evolve::{
    evolve_closed, evolve_lindblad, initial_state, DensityMatrix, LindbladDecomposition,
    Sample, Trajectory,
};
pub use observables::{AnnealResult, EngineTag};
pub use sector::{AnnealSchedule, ModelParams, SpinSector};
pub use thermal::{MagnetizationDistribution, SaSchedule};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
