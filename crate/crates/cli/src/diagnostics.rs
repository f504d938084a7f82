//! Non-sweep subcommands: minimum-gap scans and fixed-point checks.

use std::io::Write;

use anyhow::{ensure, Result};
use pspin_core::evolve::{
    bohr_frequency_bound, build_decomposition, evolve_lindblad_frozen, initial_state, lindblad_rhs, LindbladOptions,
};
use pspin_core::gap::{refined_minimum_gap, uniform_grid};
use pspin_core::observables::{energy_populations, gibbs_populations, gibbs_state, total_variation};
use pspin_core::sector::{h_total, instantaneous_eigen};
use pspin_core::thermal::{equilibrium_distribution, evolve_glauber, glauber_rhs, GlauberRates};
use pspin_core::{BathSpec, DensityMatrix, ModelParams, PreparedBath, SpinSector};

use crate::table::float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub n_spins: usize,
    pub p: u32,
    pub s_star: f64,
    pub gap: f64,
}

/// Minimum gap for each `N`, from a uniform `s` grid refined around its
/// smallest value.
pub fn gap_scan(sizes: &[usize], p: u32, gamma: f64, grid_points: usize) -> Result<Vec<GapRow>> {
    ensure!(grid_points >= 3, "gap scan needs at least 3 grid points");
    let params = ModelParams::new(p, gamma)?;
    let grid = uniform_grid(grid_points);
    sizes
        .iter()
        .map(|&n| {
            let scan = refined_minimum_gap(&SpinSector::new(n)?, &params, &grid)?;
            Ok(GapRow {
                n_spins: n,
                p,
                s_star: scan.s_star,
                gap: scan.gap,
            })
        })
        .collect()
}

pub fn write_gap_csv(rows: &[GapRow], sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["n_spins", "p", "s_star", "gap"])?;
    for r in rows {
        w.write_record([r.n_spins.to_string(), r.p.to_string(), float(r.s_star), float(r.gap)])?;
    }
    w.flush()?;
    Ok(())
}

/// Gibbs fixed-point check of the frozen master equation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStationary {
    /// `max |L[ρ_Gibbs]|` over matrix entries.
    pub rhs_at_gibbs: f64,
    /// Total variation between the relaxed energy populations and the
    /// Boltzmann weights.
    pub total_variation: f64,
    pub populations: Vec<f64>,
    pub gibbs: Vec<f64>,
    pub min_eigenvalue: f64,
    pub max_trace_error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FrozenRun {
    pub n_spins: usize,
    pub p: u32,
    pub gamma: f64,
    pub s: f64,
    pub duration: f64,
    pub dt: f64,
    pub bin_tol: f64,
}

/// Evaluates the generator at the Gibbs state of `H(s)` and relaxes the
/// transverse-field ground state under the same frozen generator.
pub fn quantum_stationary(run: &FrozenRun, spec: BathSpec) -> Result<QuantumStationary> {
    let sector = SpinSector::new(run.n_spins)?;
    let params = ModelParams::new(run.p, run.gamma)?;
    let bath = PreparedBath::new(spec, bohr_frequency_bound(&sector, &params))?;
    let eig = instantaneous_eigen(&sector, &params, run.s)?;
    let decomp = build_decomposition(&eig, &sector, &bath, run.bin_tol)?;
    let h = h_total(&sector, &params, run.s)?;
    let gibbs_rho = gibbs_state(&h, spec.beta)?;
    let rhs_at_gibbs = lindblad_rhs(&decomp, &gibbs_rho)?.camax();

    let options = LindbladOptions {
        dt: run.dt,
        bin_tol: run.bin_tol,
    };
    let rho0 = DensityMatrix::from_pure(&initial_state(&sector));
    let traj = evolve_lindblad_frozen(&sector, &params, run.s, &bath, run.duration, options, rho0)?;
    let populations = energy_populations(&h, &traj.final_state().to_density())?;
    let spectrum: Vec<f64> = eig.values.iter().copied().collect();
    let gibbs = gibbs_populations(&spectrum, spec.beta)?;
    Ok(QuantumStationary {
        rhs_at_gibbs,
        total_variation: total_variation(&populations, &gibbs),
        populations,
        gibbs,
        min_eigenvalue: traj.min_eigenvalue(),
        max_trace_error: traj.max_trace_error(),
    })
}

/// Equilibrium check of fixed-temperature Glauber dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalStationary {
    /// `max |dP/dt|` at the Boltzmann distribution.
    pub rhs_at_equilibrium: f64,
    /// `max_j |π_j w(j→j+1) - π_{j+1} w(j+1→j)|`.
    pub detailed_balance: f64,
    /// Distance from the relaxed distribution to the Boltzmann one.
    pub total_variation: f64,
}

/// Relaxes from the equilibrium at `start_temperature` for `duration` at
/// fixed `temperature`.
pub fn thermal_stationary(
    n_spins: usize,
    p: u32,
    temperature: f64,
    start_temperature: f64,
    duration: f64,
    dt: f64,
) -> Result<ThermalStationary> {
    let eq = equilibrium_distribution(n_spins, p, temperature)?;
    let rates = GlauberRates::new(n_spins, p, temperature)?;
    let pi = eq.probs();
    let detailed_balance = (0..n_spins)
        .map(|j| (pi[j] * rates.up[j] - pi[j + 1] * rates.down[j + 1]).abs())
        .fold(0.0, f64::max);
    let rhs_at_equilibrium = glauber_rhs(&eq, temperature, n_spins, p)?
        .into_iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let start = equilibrium_distribution(n_spins, p, start_temperature)?;
    let traj = evolve_glauber(n_spins, p, |_| temperature, duration, dt, start)?;
    Ok(ThermalStationary {
        rhs_at_equilibrium,
        detailed_balance,
        total_variation: traj.final_distribution().total_variation(&eq),
    })
}
