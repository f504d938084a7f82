//! Time evolution: closed-system Schrödinger propagation and the adiabatic
//! Lindblad master equation with an Ohmic bath.
//!
//! Both engines use fixed-step RK4 and record [`SAMPLES_PER_RUN`] uniformly
//! spaced samples plus the initial point, so every trajectory carries 201
//! records regardless of step size.

mod closed;
mod decomposition;
mod density;
mod lindblad;

pub use closed::{evolve_closed, evolve_closed_frozen, evolve_closed_from, CLOSED_MAX_NORM_DRIFT};
pub use decomposition::{
    build_decomposition, dissipator_apply, lamb_shift_h, BinEntry, FrequencyBin,
    LindbladDecomposition, DEFAULT_BIN_TOL,
};
pub use density::DensityMatrix;
pub use lindblad::{
    bohr_frequency_bound, evolve_lindblad, evolve_lindblad_frozen, evolve_lindblad_prepared,
    lindblad_max_dt, lindblad_rhs, LindbladOptions, MAX_POSITIVITY_VIOLATION, MAX_TRACE_DRIFT,
};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::sector::SpinSector;

pub const SAMPLES_PER_RUN: usize = 200;

/// A quantum state in the Dicke basis.
#[derive(Debug, Clone)]
pub enum QuantumState {
    Pure(DVector<Complex64>),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(psi) => psi.len(),
            QuantumState::Mixed(rho) => rho.dim(),
        }
    }

    /// Occupation probabilities of the Dicke basis states.
    pub fn dicke_populations(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure(psi) => psi.iter().map(|c| c.norm_sqr()).collect(),
            QuantumState::Mixed(rho) => rho.populations(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            QuantumState::Pure(psi) => DensityMatrix::from_pure(psi),
            QuantumState::Mixed(rho) => rho.clone(),
        }
    }
}

/// Scalar diagnostics recorded at one sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub s: f64,
    /// `<H(t)>`.
    pub energy: f64,
    /// Population of the instantaneous ground state (ground manifold when
    /// degenerate).
    pub ground_population: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    /// `max |ρ - ρ^†|`.
    pub hermiticity: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    pub samples: Vec<Sample>,
    /// Step size actually used.
    pub dt: f64,
    /// Accumulated `| ||ψ|| - 1 |` before per-step renormalization (closed
    /// runs only).
    pub norm_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &QuantumState {
        self.states.last().expect("trajectory has samples")
    }

    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory has samples")
    }

    pub fn max_trace_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.trace - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        self.samples.iter().map(|s| s.hermiticity).fold(0.0, f64::max)
    }
}

/// Number of RK4 steps for a run of length `duration` with step at most
/// `dt_max`, rounded up to a multiple of [`SAMPLES_PER_RUN`] so samples land
/// on step boundaries.
pub fn step_count(duration: f64, dt_max: f64) -> usize {
    let raw = (duration / dt_max).ceil().max(1.0) as usize;
    raw.div_ceil(SAMPLES_PER_RUN) * SAMPLES_PER_RUN
}

/// The fully `x`-polarized product state expressed in the Dicke basis:
/// component `k` is `sqrt(binom(N, k)) / 2^{N/2}`.
pub fn initial_state(sector: &SpinSector) -> DVector<Complex64> {
    let n = sector.n_spins();
    let half_ln2 = 0.5 * n as f64 * std::f64::consts::LN_2;
    let mut ln_binom = 0.0_f64;
    DVector::from_iterator(
        sector.dim(),
        (0..=n).map(|k| {
            if k > 0 {
                ln_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
            }
            Complex64::new((0.5 * ln_binom - half_ln2).exp(), 0.0)
        }),
    )
}

/// Indices of the eigenvalues within `tol` of the lowest one.
pub(crate) fn ground_manifold(values: &[f64], tol: f64) -> Vec<usize> {
    let e0 = values[0];
    values
        .iter()
        .enumerate()
        .take_while(|(_, &e)| e - e0 <= tol)
        .map(|(i, _)| i)
        .collect()
}
