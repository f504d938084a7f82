//! Simulated annealing as a Glauber master equation on the magnetization.
//!
//! Distributions are indexed by the number of up spins `j = 0..=N`, so
//! `m_j = -1 + 2j/N` runs from `-1` to `1`. A single flip moves `j` by one;
//! there are `N - j` down spins that can flip up and `j` up spins that can
//! flip down, each attempting at unit rate with heat-bath acceptance.

use crate::error::{invalid, Error, Result};

/// Entries above this negative value are treated as rounding and clipped.
pub const CLIP_TOLERANCE: f64 = 1e-12;
/// Probabilities below this abort a run.
pub const NEGATIVE_PROBABILITY_LIMIT: f64 = -1e-9;
/// Initial temperature used unless configured otherwise.
pub const DEFAULT_T0: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationDistribution {
    probs: Vec<f64>,
}

impl MagnetizationDistribution {
    /// Checks the invariants: entries `>= -1e-12` (small negatives are set
    /// to zero) and unit sum to `1e-10`.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(invalid("a distribution needs at least two magnetization values"));
        }
        for (index, p) in probs.iter_mut().enumerate() {
            if *p < -CLIP_TOLERANCE || !p.is_finite() {
                return Err(invalid(format!("probability {p:e} at index {index}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// All mass on `m = 1`.
    pub fn fully_magnetized(n_spins: usize) -> Self {
        let mut probs = vec![0.0; n_spins + 1];
        probs[n_spins] = 1.0;
        Self { probs }
    }

    pub fn n_spins(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `m_j = -1 + 2j/N`.
    pub fn magnetization(&self, j: usize) -> f64 {
        magnetization(j, self.n_spins())
    }

    /// `(Σ_m H_c(m) P(m) + N) / N`.
    pub fn residual_energy(&self, p: u32) -> f64 {
        let n = self.n_spins();
        let energy: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(j, q)| q * classical_energy_unchecked(magnetization(j, n), n, p))
            .sum();
        (energy + n as f64) / n as f64
    }

    /// Mass on the classical ground states (`m = 1`, and `m = -1` for even
    /// `p`).
    pub fn ground_probability(&self, p: u32) -> f64 {
        let mut f = self.probs[self.n_spins()];
        if p.is_multiple_of(2) {
            f += self.probs[0];
        }
        f
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

fn magnetization(j: usize, n: usize) -> f64 {
    -1.0 + 2.0 * j as f64 / n as f64
}

fn classical_energy_unchecked(m: f64, n: usize, p: u32) -> f64 {
    -(n as f64) * m.powi(p as i32)
}

/// `H_c(m) = -N m^p`.
pub fn classical_energy(m: f64, n_spins: usize, p: u32) -> Result<f64> {
    if !(m.abs() <= 1.0) {
        return Err(invalid(format!("|m| must not exceed 1, got {m}")));
    }
    Ok(classical_energy_unchecked(m, n_spins, p))
}

/// Heat-bath acceptance `1 / (1 + e^{β ΔE})` with `ΔE` = destination minus
/// origin energy.
pub fn heat_bath_rate(delta_e: f64, beta: f64) -> f64 {
    if beta.is_infinite() {
        return if delta_e < 0.0 {
            1.0
        } else if delta_e > 0.0 {
            0.0
        } else {
            0.5
        };
    }
    let x = beta * delta_e;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

fn beta_of(temperature: f64) -> f64 {
    if temperature == 0.0 {
        f64::INFINITY
    } else {
        1.0 / temperature
    }
}

/// Linear cooling `T(t) = T_0 (1 - t/t_f) + T_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaSchedule {
    t0_temperature: f64,
    tf_temperature: f64,
    t_f: f64,
}

impl SaSchedule {
    pub fn new(t0_temperature: f64, tf_temperature: f64, t_f: f64) -> Result<Self> {
        if !(tf_temperature >= 0.0 && tf_temperature.is_finite()) {
            return Err(invalid(format!("T_f must be finite and >= 0, got {tf_temperature}")));
        }
        if !(t0_temperature > tf_temperature && t0_temperature.is_finite()) {
            return Err(invalid(format!(
                "T_0 must exceed T_f, got T_0 = {t0_temperature}, T_f = {tf_temperature}"
            )));
        }
        if !(t_f > 0.0 && t_f.is_finite()) {
            return Err(invalid(format!("t_f must be positive and finite, got {t_f}")));
        }
        Ok(Self {
            t0_temperature,
            tf_temperature,
            t_f,
        })
    }

    pub fn t0_temperature(&self) -> f64 {
        self.t0_temperature
    }

    pub fn tf_temperature(&self) -> f64 {
        self.tf_temperature
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn temperature(&self, t: f64) -> f64 {
        let x = (t / self.t_f).clamp(0.0, 1.0);
        self.t0_temperature * (1.0 - x) + self.tf_temperature
    }
}

/// Transition rates out of each magnetization at one temperature:
/// `up[j]` for `j -> j+1` and `down[j]` for `j -> j-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlauberRates {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
}

impl GlauberRates {
    pub fn new(n_spins: usize, p: u32, temperature: f64) -> Result<Self> {
        if !(temperature >= 0.0) {
            return Err(invalid(format!("temperature must be >= 0, got {temperature}")));
        }
        let beta = beta_of(temperature);
        let n = n_spins;
        let energy = |j: usize| classical_energy_unchecked(magnetization(j, n), n, p);
        let mut up = vec![0.0; n + 1];
        let mut down = vec![0.0; n + 1];
        for j in 0..=n {
            if j < n {
                up[j] = (n - j) as f64 * heat_bath_rate(energy(j + 1) - energy(j), beta);
            }
            if j > 0 {
                down[j] = j as f64 * heat_bath_rate(energy(j - 1) - energy(j), beta);
            }
        }
        Ok(Self { up, down })
    }

    /// `out = dP/dt`.
    pub fn apply(&self, probs: &[f64], out: &mut [f64]) {
        let n = probs.len() - 1;
        for j in 0..=n {
            let mut acc = -(self.up[j] + self.down[j]) * probs[j];
            if j > 0 {
                acc += self.up[j - 1] * probs[j - 1];
            }
            if j < n {
                acc += self.down[j + 1] * probs[j + 1];
            }
            out[j] = acc;
        }
    }

    /// Dense generator `Q` with `dP/dt = Q P`; columns sum to zero.
    pub fn generator(&self) -> Vec<Vec<f64>> {
        let n = self.up.len() - 1;
        let mut q = vec![vec![0.0; n + 1]; n + 1];
        for j in 0..=n {
            q[j][j] = -(self.up[j] + self.down[j]);
            if j < n {
                q[j + 1][j] = self.up[j];
            }
            if j > 0 {
                q[j - 1][j] = self.down[j];
            }
        }
        q
    }
}

/// Right-hand side of the Glauber master equation.
pub fn glauber_rhs(dist: &MagnetizationDistribution, temperature: f64, n_spins: usize, p: u32) -> Result<Vec<f64>> {
    if dist.n_spins() != n_spins {
        return Err(Error::DimensionMismatch {
            expected: n_spins + 1,
            found: dist.probs.len(),
        });
    }
    let rates = GlauberRates::new(n_spins, p, temperature)?;
    let mut out = vec![0.0; n_spins + 1];
    rates.apply(&dist.probs, &mut out);
    Ok(out)
}

/// `P(m) ∝ binom(N, j) e^{-H_c(m)/T}`; at `T = 0` the mass sits on the
/// classical ground states.
pub fn equilibrium_distribution(n_spins: usize, p: u32, temperature: f64) -> Result<MagnetizationDistribution> {
    if !(temperature >= 0.0) {
        return Err(invalid(format!("temperature must be >= 0, got {temperature}")));
    }
    if n_spins < 1 {
        return Err(invalid("n_spins must be at least 1"));
    }
    let n = n_spins;
    let energies: Vec<f64> = (0..=n).map(|j| classical_energy_unchecked(magnetization(j, n), n, p)).collect();
    if temperature == 0.0 {
        let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = energies.iter().map(|&e| if e == e0 { 1.0 } else { 0.0 }).collect();
        let z: f64 = w.iter().sum();
        return MagnetizationDistribution::new(w.iter().map(|x| x / z).collect());
    }
    let log_w: Vec<f64> = (0..=n)
        .map(|j| ln_binomial(n, j) - energies[j] / temperature)
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    MagnetizationDistribution::new(w.iter().map(|x| x / z).collect())
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `Σ P (H_c + T ln(P / binom))`, nonincreasing under the fixed-`T` flow.
pub fn free_energy(dist: &MagnetizationDistribution, p: u32, temperature: f64) -> f64 {
    let n = dist.n_spins();
    dist.probs
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            let e = classical_energy_unchecked(magnetization(j, n), n, p);
            let entropy = if q > 0.0 { temperature * (q.ln() - ln_binomial(n, j)) } else { 0.0 };
            q * (e + entropy)
        })
        .sum()
}

/// `min(t_f / 2000, 0.1 / N)`.
pub fn sa_max_dt(t_f: f64, n_spins: usize) -> f64 {
    (t_f / 2000.0).min(0.1 / n_spins as f64)
}

/// Sampled output of a Glauber run.
#[derive(Debug, Clone)]
pub struct SaTrajectory {
    pub times: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub distributions: Vec<MagnetizationDistribution>,
    pub dt: f64,
}

impl SaTrajectory {
    pub fn final_distribution(&self) -> &MagnetizationDistribution {
        self.distributions.last().expect("trajectory has samples")
    }
}

/// Anneals from the `T_0` equilibrium along `schedule`.
///
/// `dt` is an upper bound and must not exceed [`sa_max_dt`].
pub fn evolve_sa(schedule: &SaSchedule, n_spins: usize, p: u32, dt: f64) -> Result<(SaTrajectory, f64)> {
    let dt_max = sa_max_dt(schedule.t_f(), n_spins);
    if !(dt > 0.0) || dt > dt_max * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "simulated annealing needs 0 < dt <= min(t_f/2000, 0.1/N) = {dt_max}, got dt = {dt}"
        )));
    }
    let start = equilibrium_distribution(n_spins, p, schedule.t0_temperature())?;
    let traj = evolve_glauber(n_spins, p, |t| schedule.temperature(t), schedule.t_f(), dt, start)?;
    let res = traj.final_distribution().residual_energy(p);
    Ok((traj, res))
}

/// RK4 integration of the Glauber equation under an arbitrary temperature
/// profile.
pub fn evolve_glauber(
    n_spins: usize,
    p: u32,
    temperature: impl Fn(f64) -> f64,
    duration: f64,
    dt: f64,
    start: MagnetizationDistribution,
) -> Result<SaTrajectory> {
    use crate::evolve::SAMPLES_PER_RUN;

    if start.n_spins() != n_spins {
        return Err(Error::DimensionMismatch {
            expected: n_spins + 1,
            found: start.probs.len(),
        });
    }
    if !(duration > 0.0 && dt > 0.0) {
        return Err(invalid("duration and dt must be positive"));
    }
    let steps = crate::evolve::step_count(duration, dt);
    let h = duration / steps as f64;
    let stride = steps / SAMPLES_PER_RUN;
    let dim = n_spins + 1;
    let rates = |t: f64| GlauberRates::new(n_spins, p, temperature(t));

    let mut traj = SaTrajectory {
        times: vec![0.0],
        temperatures: vec![temperature(0.0)],
        distributions: vec![start.clone()],
        dt: h,
    };
    let mut probs = start.probs;
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut r_start = rates(0.0)?;

    for step in 0..steps {
        let t = step as f64 * h;
        let r_mid = rates(t + 0.5 * h)?;
        let r_end = rates(t + h)?;

        r_start.apply(&probs, &mut k1);
        for i in 0..dim {
            tmp[i] = probs[i] + 0.5 * h * k1[i];
        }
        r_mid.apply(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = probs[i] + 0.5 * h * k2[i];
        }
        r_mid.apply(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = probs[i] + h * k3[i];
        }
        r_end.apply(&tmp, &mut k4);
        for i in 0..dim {
            probs[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r_start = r_end;

        let time = if step + 1 == steps { duration } else { (step + 1) as f64 * h };
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, &q)| q < NEGATIVE_PROBABILITY_LIMIT)
        {
            return Err(Error::NegativeProbability { value, index, time, dt: h });
        }
        if (step + 1) % stride == 0 {
            traj.times.push(time);
            traj.temperatures.push(temperature(time));
            traj.distributions.push(MagnetizationDistribution::new(probs.clone())?);
        }
    }
    Ok(traj)
}
