//! Experiment configuration: a TOML file mirroring [`ExperimentConfig`],
//! with command-line overrides applied on top.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use pspin_core::bath::DEFAULT_OMEGA_C;
use pspin_core::evolve::DEFAULT_BIN_TOL;
use pspin_core::observables::EngineTag;
use pspin_core::thermal::DEFAULT_T0;
use serde::{Deserialize, Serialize};

pub const DEFAULT_POINTS_PER_DECADE: usize = 24;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub engine: Engine,
    pub n_spins: usize,
    pub p: u32,
    #[serde(default = "one")]
    pub gamma: f64,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub bath: BathConfig,
    #[serde(default)]
    pub sa: SaConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    /// Reserved; every engine is deterministic.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Closed,
    Lindblad,
    Sa,
}

impl Engine {
    pub fn tag(self) -> EngineTag {
        match self {
            Engine::Closed => EngineTag::Closed,
            Engine::Lindblad => EngineTag::Lindblad,
            Engine::Sa => EngineTag::Sa,
        }
    }
}

/// Annealing times: either an explicit list or a log-spaced range.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub t_f: Option<Vec<f64>>,
    pub t_f_range: Option<[f64; 2]>,
    pub points_per_decade: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    /// Inverse temperatures; `inf` selects the zero-temperature bath.
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
    #[serde(default = "default_eta")]
    pub eta_g2: Vec<f64>,
    #[serde(default = "default_omega_c")]
    pub omega_c: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default = "yes")]
    pub lamb_shift: bool,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            beta: default_beta(),
            eta_g2: default_eta(),
            omega_c: DEFAULT_OMEGA_C,
            nu: 1.0,
            lamb_shift: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SaConfig {
    #[serde(default = "default_t0")]
    pub t0: f64,
    /// Final temperatures, one sweep each.
    #[serde(default = "default_tf")]
    pub tf: Vec<f64>,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            t0: DEFAULT_T0,
            tf: default_tf(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    /// Multiplies the engine's largest admissible step.
    #[serde(default = "one")]
    pub dt_scale: f64,
    /// Absolute cap on the step, applied after `dt_scale`.
    pub dt_max: Option<f64>,
    #[serde(default = "default_bin_tol")]
    pub bin_tol: f64,
    /// Samples per trajectory; fixed by the engines.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            dt_scale: 1.0,
            dt_max: None,
            bin_tol: DEFAULT_BIN_TOL,
            samples: pspin_core::evolve::SAMPLES_PER_RUN,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    /// Directory for per-run trajectory CSVs; none are written when unset.
    pub trajectories: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_beta() -> Vec<f64> {
    vec![10.0]
}
fn default_eta() -> Vec<f64> {
    vec![1e-2]
}
fn default_omega_c() -> f64 {
    DEFAULT_OMEGA_C
}
fn default_t0() -> f64 {
    DEFAULT_T0
}
fn default_tf() -> Vec<f64> {
    vec![0.1]
}
fn default_bin_tol() -> f64 {
    DEFAULT_BIN_TOL
}
fn default_samples() -> usize {
    pspin_core::evolve::SAMPLES_PER_RUN
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub engine: Option<Engine>,
    pub n_spins: Option<usize>,
    pub p: Option<u32>,
    pub eta_g2: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub omega_c: Option<f64>,
    pub lamb_shift: Option<bool>,
    pub t_f: Option<Vec<f64>>,
    pub workers: Option<usize>,
    pub csv: Option<PathBuf>,
    pub trajectories: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing experiment config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(v) = o.engine {
            self.engine = v;
        }
        if let Some(v) = o.n_spins {
            self.n_spins = v;
        }
        if let Some(v) = o.p {
            self.p = v;
        }
        if let Some(v) = o.eta_g2 {
            self.bath.eta_g2 = v;
        }
        if let Some(v) = o.beta {
            self.bath.beta = v;
        }
        if let Some(v) = o.omega_c {
            self.bath.omega_c = v;
        }
        if let Some(v) = o.lamb_shift {
            self.bath.lamb_shift = v;
        }
        if let Some(v) = o.t_f {
            self.schedule = ScheduleConfig {
                t_f: Some(v),
                ..Default::default()
            };
        }
        if let Some(v) = o.workers {
            self.workers = v;
        }
        if let Some(v) = o.csv {
            self.output.csv = Some(v);
        }
        if let Some(v) = o.trajectories {
            self.output.trajectories = Some(v);
        }
    }

    /// The annealing times of the sweep, ascending.
    pub fn t_f_grid(&self) -> Result<Vec<f64>> {
        let s = &self.schedule;
        let grid = match (&s.t_f, s.t_f_range) {
            (Some(_), Some(_)) => bail!("give either schedule.t_f or schedule.t_f_range, not both"),
            (Some(list), None) => list.clone(),
            (None, Some([lo, hi])) => log_grid(lo, hi, s.points_per_decade.unwrap_or(DEFAULT_POINTS_PER_DECADE))?,
            (None, None) => bail!("schedule needs t_f or t_f_range"),
        };
        ensure!(!grid.is_empty(), "t_f list is empty");
        ensure!(
            grid.iter().all(|t| *t > 0.0 && t.is_finite()),
            "t_f values must be positive and finite"
        );
        ensure!(
            grid.windows(2).all(|w| w[0] < w[1]),
            "t_f values must be strictly increasing"
        );
        Ok(grid)
    }

    /// Checks every parameter group the engine uses. Runs nothing.
    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_spins >= 1, "n_spins must be at least 1");
        ensure!(self.p >= 1, "p must be at least 1");
        ensure!(self.gamma > 0.0 && self.gamma.is_finite(), "gamma must be positive");
        self.t_f_grid()?;
        let n = &self.numerics;
        ensure!(n.dt_scale > 0.0 && n.dt_scale <= 1.0, "numerics.dt_scale must lie in (0, 1]");
        if let Some(cap) = n.dt_max {
            ensure!(cap > 0.0, "numerics.dt_max must be positive");
        }
        ensure!(n.bin_tol >= 0.0 && n.bin_tol.is_finite(), "numerics.bin_tol must be >= 0");
        ensure!(
            n.samples == pspin_core::evolve::SAMPLES_PER_RUN,
            "numerics.samples is fixed at {}",
            pspin_core::evolve::SAMPLES_PER_RUN
        );
        match self.engine {
            Engine::Closed => {}
            Engine::Lindblad => {
                let b = &self.bath;
                ensure!(!b.beta.is_empty() && !b.eta_g2.is_empty(), "bath.beta and bath.eta_g2 must be nonempty");
                for &beta in &b.beta {
                    ensure!(beta > 0.0, "bath.beta must be > 0 (or inf), got {beta}");
                }
                for &eta in &b.eta_g2 {
                    ensure!(eta >= 0.0 && eta.is_finite(), "bath.eta_g2 must be >= 0, got {eta}");
                }
                for &beta in &b.beta {
                    for &eta in &b.eta_g2 {
                        pspin_core::BathSpec::new(eta, 1.0, beta, b.omega_c, b.nu, b.lamb_shift)?;
                    }
                }
            }
            Engine::Sa => {
                ensure!(!self.sa.tf.is_empty(), "sa.tf must be nonempty");
                for &tf in &self.sa.tf {
                    ensure!(
                        tf >= 0.0 && self.sa.t0 > tf,
                        "sa needs T0 > Tf >= 0, got T0 = {}, Tf = {tf}",
                        self.sa.t0
                    );
                }
            }
        }
        Ok(())
    }
}

/// `points_per_decade` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    ensure!(lo > 0.0 && hi > lo && hi.is_finite(), "t_f_range needs 0 < lo < hi");
    ensure!(points_per_decade >= 1, "points_per_decade must be at least 1");
    let decades = (hi / lo).log10();
    let intervals = ((decades * points_per_decade as f64) - 1e-9).ceil().max(1.0) as usize;
    let step = decades / intervals as f64;
    Ok((0..=intervals)
        .map(|i| {
            if i == intervals {
                hi
            } else {
                lo * 10f64.powf(step * i as f64)
            }
        })
        .collect())
}

/// Parses `"inf"` as well as ordinary floats.
pub fn parse_float(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "infinity" | "Inf" => Ok(f64::INFINITY),
        other => other.parse().with_context(|| format!("not a number: `{other}`")),
    }
}

pub fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_float).collect()
}
