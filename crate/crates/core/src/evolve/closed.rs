use nalgebra::DVector;
use num_complex::Complex64;

use super::{ground_manifold, initial_state, step_count, QuantumState, Sample, Trajectory, SAMPLES_PER_RUN};
use crate::error::{invalid, Error, Result};
use crate::sector::{instantaneous_eigen, pspin_diagonal, AnnealSchedule, ModelParams, SpinSector};

/// Accumulated norm drift above which a closed run is rejected.
pub const CLOSED_MAX_NORM_DRIFT: f64 = 1e-6;

/// `H(s)` stored as its diagonal and first off-diagonal.
pub(crate) struct TridiagonalPath {
    pspin: Vec<f64>,
    transverse: Vec<f64>,
}

impl TridiagonalPath {
    pub(crate) fn new(sector: &SpinSector, params: &ModelParams) -> Self {
        Self {
            pspin: pspin_diagonal(sector, params).iter().copied().collect(),
            transverse: sector
                .s_x_off_diagonal()
                .into_iter()
                .map(|x| -2.0 * params.gamma() * x)
                .collect(),
        }
    }

    /// `out = (H(s) - shift) psi`.
    fn apply(&self, s: f64, shift: f64, psi: &DVector<Complex64>, out: &mut DVector<Complex64>) {
        let n = psi.len();
        for k in 0..n {
            let mut acc = psi[k] * (s * self.pspin[k] - shift);
            if k > 0 {
                acc += psi[k - 1] * ((1.0 - s) * self.transverse[k - 1]);
            }
            if k + 1 < n {
                acc += psi[k + 1] * ((1.0 - s) * self.transverse[k]);
            }
            out[k] = acc;
        }
    }

    fn expectation(&self, s: f64, psi: &DVector<Complex64>) -> f64 {
        let n = psi.len();
        let mut acc = 0.0;
        for k in 0..n {
            acc += s * self.pspin[k] * psi[k].norm_sqr();
            if k + 1 < n {
                acc += 2.0 * (1.0 - s) * self.transverse[k] * (psi[k].conj() * psi[k + 1]).re;
            }
        }
        acc
    }
}

/// Integrates `i dψ/dt = H(t) ψ` from the transverse-field ground state.
///
/// `dt` is an upper bound on the step; it must not exceed `t_f / 100`.
pub fn evolve_closed(
    sector: &SpinSector,
    params: &ModelParams,
    schedule: &AnnealSchedule,
    dt: f64,
) -> Result<Trajectory> {
    evolve_closed_from(sector, params, schedule, dt, initial_state(sector))
}

/// Same as [`evolve_closed`] with an explicit initial state.
pub fn evolve_closed_from(
    sector: &SpinSector,
    params: &ModelParams,
    schedule: &AnnealSchedule,
    dt: f64,
    psi0: DVector<Complex64>,
) -> Result<Trajectory> {
    let t_f = schedule.t_f();
    if !(dt > 0.0) || dt > t_f / 100.0 {
        return Err(invalid(format!("closed evolution needs 0 < dt <= t_f/100, got dt = {dt}, t_f = {t_f}")));
    }
    run(sector, params, |t| schedule.s(t), t_f, dt, psi0)
}

/// Schrödinger evolution under the Hamiltonian frozen at `s` for `duration`.
pub fn evolve_closed_frozen(
    sector: &SpinSector,
    params: &ModelParams,
    s: f64,
    duration: f64,
    dt: f64,
    psi0: DVector<Complex64>,
) -> Result<Trajectory> {
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("s must lie in [0, 1], got {s}")));
    }
    if !(duration > 0.0 && dt > 0.0) {
        return Err(invalid("duration and dt must be positive"));
    }
    run(sector, params, |_| s, duration, dt, psi0)
}

fn run(
    sector: &SpinSector,
    params: &ModelParams,
    s_of: impl Fn(f64) -> f64,
    duration: f64,
    dt: f64,
    psi0: DVector<Complex64>,
) -> Result<Trajectory> {
    if psi0.len() != sector.dim() {
        return Err(Error::DimensionMismatch {
            expected: sector.dim(),
            found: psi0.len(),
        });
    }
    let path = TridiagonalPath::new(sector, params);
    let steps = step_count(duration, dt);
    let h = duration / steps as f64;
    let stride = steps / SAMPLES_PER_RUN;

    let n = sector.dim();
    let mut psi = psi0;
    let norm = psi.norm();
    psi /= Complex64::new(norm, 0.0);

    let mut k1 = DVector::zeros(n);
    let mut k2 = DVector::zeros(n);
    let mut k3 = DVector::zeros(n);
    let mut k4 = DVector::zeros(n);
    let mut tmp = DVector::zeros(n);
    let minus_i = Complex64::new(0.0, -1.0);

    let mut traj = Trajectory {
        times: Vec::with_capacity(SAMPLES_PER_RUN + 1),
        states: Vec::with_capacity(SAMPLES_PER_RUN + 1),
        samples: Vec::with_capacity(SAMPLES_PER_RUN + 1),
        dt: h,
        norm_drift: 0.0,
    };
    record(&mut traj, sector, params, &path, 0.0, s_of(0.0), &psi)?;

    for step in 0..steps {
        let t = step as f64 * h;
        let s0 = s_of(t);
        let s_mid = s_of(t + 0.5 * h);
        let s1 = s_of(t + h);
        // a global energy shift only changes the overall phase, and keeps
        // |h E| small for the populated levels
        let shift = path.expectation(s0, &psi);

        path.apply(s0, shift, &psi, &mut k1);
        k1 *= minus_i;
        tmp.copy_from(&psi);
        tmp.axpy(Complex64::new(0.5 * h, 0.0), &k1, Complex64::new(1.0, 0.0));
        path.apply(s_mid, shift, &tmp, &mut k2);
        k2 *= minus_i;
        tmp.copy_from(&psi);
        tmp.axpy(Complex64::new(0.5 * h, 0.0), &k2, Complex64::new(1.0, 0.0));
        path.apply(s_mid, shift, &tmp, &mut k3);
        k3 *= minus_i;
        tmp.copy_from(&psi);
        tmp.axpy(Complex64::new(h, 0.0), &k3, Complex64::new(1.0, 0.0));
        path.apply(s1, shift, &tmp, &mut k4);
        k4 *= minus_i;

        let w = Complex64::new(h / 6.0, 0.0);
        for i in 0..n {
            psi[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let norm = psi.norm();
        traj.norm_drift += (norm - 1.0).abs();
        psi /= Complex64::new(norm, 0.0);

        if traj.norm_drift > CLOSED_MAX_NORM_DRIFT {
            return Err(Error::NormDrift {
                drift: traj.norm_drift,
                dt: h,
            });
        }
        if (step + 1) % stride == 0 {
            let time = if step + 1 == steps { duration } else { (step + 1) as f64 * h };
            record(&mut traj, sector, params, &path, time, s_of(time), &psi)?;
        }
    }
    Ok(traj)
}

fn record(
    traj: &mut Trajectory,
    sector: &SpinSector,
    params: &ModelParams,
    path: &TridiagonalPath,
    time: f64,
    s: f64,
    psi: &DVector<Complex64>,
) -> Result<()> {
    let eig = instantaneous_eigen(sector, params, s)?;
    let values: Vec<f64> = eig.values.iter().copied().collect();
    let ground_population = ground_manifold(&values, 1e-9)
        .into_iter()
        .map(|j| {
            let overlap: Complex64 = (0..psi.len()).map(|k| psi[k] * eig.vectors[(k, j)]).sum();
            overlap.norm_sqr()
        })
        .sum();
    traj.times.push(time);
    traj.samples.push(Sample {
        time,
        s,
        energy: path.expectation(s, psi),
        ground_population,
        trace: psi.norm_squared(),
        min_eigenvalue: 0.0,
        hermiticity: 0.0,
    });
    traj.states.push(QuantumState::Pure(psi.clone()));
    Ok(())
}
