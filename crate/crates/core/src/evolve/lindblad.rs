use nalgebra::DMatrix;
use num_complex::Complex64;

use super::decomposition::{build_decomposition, LindbladDecomposition, DEFAULT_BIN_TOL};
use super::density::DensityMatrix;
use super::{ground_manifold, initial_state, step_count, QuantumState, Sample, Trajectory, SAMPLES_PER_RUN};
use crate::bath::{BathSpec, PreparedBath};
use crate::error::{invalid, Error, Result};
use crate::sector::{instantaneous_eigen, AnnealSchedule, ModelParams, SpinSector};

/// Trace drift at which an open run is aborted.
pub const MAX_TRACE_DRIFT: f64 = 1e-6;
/// Most negative density-matrix eigenvalue tolerated before an open run is
/// aborted.
pub const MAX_POSITIVITY_VIOLATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladOptions {
    /// Upper bound on the RK4 step.
    pub dt: f64,
    pub bin_tol: f64,
}

impl LindbladOptions {
    /// Largest admissible step for a run of length `t_f` and the default
    /// binning tolerance.
    pub fn for_duration(t_f: f64) -> Self {
        Self {
            dt: lindblad_max_dt(t_f),
            bin_tol: DEFAULT_BIN_TOL,
        }
    }
}

/// `min(t_f / 2000, 0.01)`.
pub fn lindblad_max_dt(t_f: f64) -> f64 {
    (t_f / 2000.0).min(0.01)
}

/// Upper bound on `|ε_a - ε_b|` along the whole schedule, used to size the
/// Lamb-shift table.
pub fn bohr_frequency_bound(sector: &SpinSector, params: &ModelParams) -> f64 {
    2.0 * sector.n_spins() as f64 * params.gamma().max(1.0) + 1.0
}

/// Real and imaginary parts of a Hermitian matrix.
#[derive(Clone)]
struct Split {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Split {
    fn from_complex(m: &DMatrix<Complex64>) -> Self {
        Self {
            re: m.map(|z| z.re),
            im: m.map(|z| z.im),
        }
    }

    fn to_complex(&self) -> DMatrix<Complex64> {
        self.re.zip_map(&self.im, Complex64::new)
    }

    /// `self + h * other`.
    fn step(&self, h: f64, other: &Split) -> Split {
        Split {
            re: &self.re + &other.re * h,
            im: &self.im + &other.im * h,
        }
    }
}

/// Generator data for one value of `s`. Everything except `v` is in the
/// energy eigenbasis; all arithmetic is real.
struct Stage {
    s: f64,
    decomp: LindbladDecomposition,
    v: DMatrix<f64>,
    vt: DMatrix<f64>,
    /// `H + H_LS`.
    h: DMatrix<f64>,
    /// `-G/2` with `G = Σ γ L^† L`.
    half_decay: DMatrix<f64>,
}

impl Stage {
    fn new(sector: &SpinSector, params: &ModelParams, bath: &PreparedBath, s: f64, bin_tol: f64) -> Result<Self> {
        let eig = instantaneous_eigen(sector, params, s)?;
        let decomp = build_decomposition(&eig, sector, bath, bin_tol)?;
        let mut h = decomp.lamb_shift_energy_basis();
        for k in 0..eig.dim() {
            h[(k, k)] += eig.values[k];
        }
        let half_decay = decomp.decay_energy_basis() * -0.5;
        let v = eig.vectors.clone();
        let vt = v.transpose();
        Ok(Self {
            s,
            decomp,
            v,
            vt,
            h,
            half_decay,
        })
    }

    /// Right-hand side with `rho` and the result in the Dicke basis.
    ///
    /// With `K = P - iH`, `Kρ + ρK^†` splits into
    /// `{P, Re ρ} + [H, Im ρ]` and `{P, Im ρ} - [H, Re ρ]`.
    fn rhs(&self, rho: &Split) -> Split {
        let re = &self.vt * &rho.re * &self.v;
        let im = &self.vt * &rho.im * &self.v;
        let (p, h) = (&self.half_decay, &self.h);
        let mut out_re = p * &re + &re * p + h * &im - &im * h;
        let mut out_im = p * &im + &im * p - h * &re + &re * h;
        self.decomp.add_jumps_real(&re, &mut out_re);
        self.decomp.add_jumps_real(&im, &mut out_im);
        Split {
            re: &self.v * out_re * &self.vt,
            im: &self.v * out_im * &self.vt,
        }
    }
}

/// `dρ/dt = -i[H + H_LS, ρ] + D[ρ]` for the frozen Hamiltonian behind
/// `decomp`, with `ρ` and the result in the Dicke basis.
pub fn lindblad_rhs(decomp: &LindbladDecomposition, rho: &DensityMatrix) -> Result<DMatrix<Complex64>> {
    if rho.dim() != decomp.dim() {
        return Err(Error::DimensionMismatch {
            expected: decomp.dim(),
            found: rho.dim(),
        });
    }
    let eig = decomp.eigen();
    let n = eig.dim();
    let hls = decomp.lamb_shift_energy_basis();
    let rho_e = decomp.to_energy_basis(rho.data());
    let h = DMatrix::from_fn(n, n, |r, c| {
        Complex64::new(if r == c { eig.values[r] } else { 0.0 } + hls[(r, c)], 0.0)
    });
    let comm = (&h * &rho_e - &rho_e * &h) * Complex64::new(0.0, -1.0);
    let out = comm + decomp.dissipator_energy_basis(&rho_e);
    Ok(decomp.to_dicke_basis(&out))
}

/// Integrates the adiabatic master equation along the linear schedule from
/// the transverse-field ground state.
pub fn evolve_lindblad(
    sector: &SpinSector,
    params: &ModelParams,
    schedule: &AnnealSchedule,
    bath: &BathSpec,
    dt: f64,
    bin_tol: f64,
) -> Result<Trajectory> {
    let prepared = PreparedBath::new(*bath, bohr_frequency_bound(sector, params))?;
    evolve_lindblad_prepared(sector, params, schedule, &prepared, LindbladOptions { dt, bin_tol })
}

/// [`evolve_lindblad`] with a bath whose Lamb-shift table is already built,
/// so sweeps over `t_f` share it.
pub fn evolve_lindblad_prepared(
    sector: &SpinSector,
    params: &ModelParams,
    schedule: &AnnealSchedule,
    bath: &PreparedBath,
    options: LindbladOptions,
) -> Result<Trajectory> {
    let t_f = schedule.t_f();
    let dt_max = lindblad_max_dt(t_f);
    if !(options.dt > 0.0) || options.dt > dt_max * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "open evolution needs 0 < dt <= min(t_f/2000, 0.01) = {dt_max}, got dt = {}",
            options.dt
        )));
    }
    check_bin_tol(options.bin_tol)?;
    let rho0 = DensityMatrix::from_pure(&initial_state(sector));
    run(sector, params, bath, |t| schedule.s(t), t_f, options, rho0)
}

/// Master-equation evolution under the Hamiltonian frozen at `s`.
pub fn evolve_lindblad_frozen(
    sector: &SpinSector,
    params: &ModelParams,
    s: f64,
    bath: &PreparedBath,
    duration: f64,
    options: LindbladOptions,
    rho0: DensityMatrix,
) -> Result<Trajectory> {
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("s must lie in [0, 1], got {s}")));
    }
    if !(duration > 0.0 && options.dt > 0.0) {
        return Err(invalid("duration and dt must be positive"));
    }
    check_bin_tol(options.bin_tol)?;
    run(sector, params, bath, |_| s, duration, options, rho0)
}

fn check_bin_tol(bin_tol: f64) -> Result<()> {
    if bin_tol >= 0.0 && bin_tol.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("bin_tol must be finite and >= 0, got {bin_tol}")))
    }
}

fn run(
    sector: &SpinSector,
    params: &ModelParams,
    bath: &PreparedBath,
    s_of: impl Fn(f64) -> f64,
    duration: f64,
    options: LindbladOptions,
    rho0: DensityMatrix,
) -> Result<Trajectory> {
    if rho0.dim() != sector.dim() {
        return Err(Error::DimensionMismatch {
            expected: sector.dim(),
            found: rho0.dim(),
        });
    }
    let steps = step_count(duration, options.dt);
    let h = duration / steps as f64;
    let stride = steps / SAMPLES_PER_RUN;
    let stage = |s: f64| Stage::new(sector, params, bath, s, options.bin_tol);

    let mut rho = Split::from_complex(rho0.data());
    let mut traj = Trajectory {
        times: Vec::with_capacity(SAMPLES_PER_RUN + 1),
        states: Vec::with_capacity(SAMPLES_PER_RUN + 1),
        samples: Vec::with_capacity(SAMPLES_PER_RUN + 1),
        dt: h,
        norm_drift: 0.0,
    };

    // the end-of-step stage is the next step's start stage
    let mut start = stage(s_of(0.0))?;
    record(&mut traj, &start, 0.0, &rho, h)?;

    for step in 0..steps {
        let t = step as f64 * h;
        let s_mid = s_of(t + 0.5 * h);
        let s_end = s_of(t + h);
        let mid = if s_mid == start.s { None } else { Some(stage(s_mid)?) };
        let mid_ref = mid.as_ref().unwrap_or(&start);
        let end = if s_end == start.s { None } else { Some(stage(s_end)?) };

        let k1 = start.rhs(&rho);
        let k2 = mid_ref.rhs(&rho.step(0.5 * h, &k1));
        let k3 = mid_ref.rhs(&rho.step(0.5 * h, &k2));
        let k4 = end.as_ref().unwrap_or(&start).rhs(&rho.step(h, &k3));
        let w = h / 6.0;
        rho.re += (k1.re + (k2.re + k3.re) * 2.0 + k4.re) * w;
        rho.im += (k1.im + (k2.im + k3.im) * 2.0 + k4.im) * w;

        if let Some(e) = end {
            start = e;
        }
        let time = if step + 1 == steps { duration } else { (step + 1) as f64 * h };
        let trace = rho.re.trace();
        if (trace - 1.0).abs() > MAX_TRACE_DRIFT {
            return Err(Error::TraceDrift { trace, time, dt: h });
        }
        if (step + 1) % stride == 0 {
            record(&mut traj, &start, time, &rho, h)?;
        }
    }
    Ok(traj)
}

fn record(traj: &mut Trajectory, stage: &Stage, time: f64, rho: &Split, dt: f64) -> Result<()> {
    let density = DensityMatrix::new(rho.to_complex())?;
    let min_eigenvalue = density.min_eigenvalue()?;
    if min_eigenvalue < -MAX_POSITIVITY_VIOLATION {
        return Err(Error::PositivityViolation { min_eigenvalue, time, dt });
    }
    let values: Vec<f64> = stage.decomp.eigen().values.iter().copied().collect();
    let rho_e = &stage.vt * &rho.re * &stage.v;
    let ground_population = ground_manifold(&values, 1e-9)
        .into_iter()
        .map(|j| rho_e[(j, j)])
        .sum();
    let energy = (0..values.len()).map(|j| values[j] * rho_e[(j, j)]).sum();
    traj.times.push(time);
    traj.samples.push(Sample {
        time,
        s: stage.s,
        energy,
        ground_population,
        trace: density.trace(),
        min_eigenvalue,
        hermiticity: density.hermiticity_error(),
    });
    traj.states.push(QuantumState::Mixed(density));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use crate::eigen::eig_sorted;
    use crate::evolve::closed::evolve_closed;
    use crate::sector::{build_sector, h_total};

    fn gibbs(values: &DVector<f64>, beta: f64) -> Vec<f64> {
        let e0 = values[0];
        let w: Vec<f64> = values.iter().map(|e| (-beta * (e - e0)).exp()).collect();
        let z: f64 = w.iter().sum();
        w.iter().map(|x| x / z).collect()
    }

    #[test]
    fn dt_rule_enforced() {
        let sec = build_sector(2).unwrap();
        let params = ModelParams::with_unit_field(3).unwrap();
        let sched = AnnealSchedule::linear(10.0).unwrap();
        let bath = BathSpec::ohmic(1e-2, 10.0, 10.0, false).unwrap();
        assert!(evolve_lindblad(&sec, &params, &sched, &bath, 0.02, DEFAULT_BIN_TOL).is_err());
        assert!(evolve_lindblad(&sec, &params, &sched, &bath, 0.005, DEFAULT_BIN_TOL).is_ok());
        assert_eq!(lindblad_max_dt(1.0), 5e-4);
        assert_eq!(lindblad_max_dt(1e3), 0.01);
    }

    #[test]
    fn decoupled_matches_closed() {
        let sec = build_sector(4).unwrap();
        let params = ModelParams::with_unit_field(5).unwrap();
        let sched = AnnealSchedule::linear(5.0).unwrap();
        let bath = BathSpec::ohmic(0.0, 10.0, 10.0, true).unwrap();
        let dt = lindblad_max_dt(5.0);
        let open = evolve_lindblad(&sec, &params, &sched, &bath, dt, DEFAULT_BIN_TOL).unwrap();
        let closed = evolve_closed(&sec, &params, &sched, dt).unwrap();
        for (a, b) in open.states.iter().zip(closed.states.iter()) {
            let d = a.to_density().distance(&b.to_density()).unwrap();
            assert!(d < 1e-8, "{d}");
        }
    }

    #[test]
    fn gibbs_state_is_stationary() {
        let sec = build_sector(4).unwrap();
        let params = ModelParams::with_unit_field(5).unwrap();
        for lamb in [false, true] {
            let spec = BathSpec::ohmic(1e-2, 2.0, 10.0, lamb).unwrap();
            let bath = PreparedBath::new(spec, bohr_frequency_bound(&sec, &params)).unwrap();
            let eig = eig_sorted(&h_total(&sec, &params, 0.5).unwrap()).unwrap();
            let decomp = build_decomposition(&eig, &sec, &bath, DEFAULT_BIN_TOL).unwrap();
            let p = gibbs(&eig.values, 2.0);
            let diag = DVector::from_iterator(5, p.iter().map(|&x| Complex64::new(x, 0.0)));
            let rho_e = DMatrix::from_diagonal(&diag);
            let rho = DensityMatrix::new(decomp.to_dicke_basis(&rho_e)).unwrap();
            let rhs = lindblad_rhs(&decomp, &rho).unwrap();
            assert!(rhs.norm() < 1e-8, "{}", rhs.norm());
        }
    }

    #[test]
    fn stage_rhs_matches_reference() {
        let sec = build_sector(3).unwrap();
        let params = ModelParams::with_unit_field(3).unwrap();
        let spec = BathSpec::ohmic(1e-2, 3.0, 10.0, true).unwrap();
        let bath = PreparedBath::new(spec, bohr_frequency_bound(&sec, &params)).unwrap();
        let stage = Stage::new(&sec, &params, &bath, 0.6, DEFAULT_BIN_TOL).unwrap();
        let psi = DVector::from_fn(4, |k, _| Complex64::new(1.0 / (k + 1) as f64, 0.2 * k as f64));
        let psi = &psi / Complex64::new(psi.norm(), 0.0);
        let rho = DensityMatrix::from_pure(&psi);
        let reference = lindblad_rhs(&stage.decomp, &rho).unwrap();
        assert!((stage.rhs(&Split::from_complex(rho.data())).to_complex() - reference).camax() < 1e-13);
    }

    #[test]
    fn frozen_relaxation_reaches_ground_state_at_zero_temperature() {
        let sec = build_sector(3).unwrap();
        let params = ModelParams::with_unit_field(3).unwrap();
        let spec = BathSpec::ohmic(5e-2, f64::INFINITY, 10.0, false).unwrap();
        let bath = PreparedBath::new(spec, bohr_frequency_bound(&sec, &params)).unwrap();
        let rho0 = DensityMatrix::maximally_mixed(4);
        let opts = LindbladOptions { dt: 0.01, bin_tol: DEFAULT_BIN_TOL };
        let traj = evolve_lindblad_frozen(&sec, &params, 0.7, &bath, 200.0, opts, rho0).unwrap();
        let last = traj.final_sample();
        assert!(last.ground_population > 1.0 - 1e-6, "{}", last.ground_population);
        assert!(traj.max_trace_error() < 1e-10);
    }
}
