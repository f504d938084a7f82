//! Sweep execution: one independent anneal per (parameter tuple, `t_f`),
//! spread over a worker pool and written in a fixed order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use anyhow::{Context, Result};
use pspin_core::evolve::{
    bohr_frequency_bound, evolve_closed, evolve_lindblad_prepared, lindblad_max_dt, LindbladOptions, Trajectory,
};
use pspin_core::observables::{floor_residual, ground_fidelity, residual_energy};
use pspin_core::thermal::{evolve_sa, sa_max_dt, SaTrajectory};
use pspin_core::{AnnealSchedule, BathSpec, ModelParams, PreparedBath, SaSchedule, SpinSector};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Engine, ExperimentConfig};
use crate::table::{float, Row, RowWriter, STATUS_OK};

/// Couplings at or above this are close to where the weak-coupling master
/// equation stops being trustworthy; such sweeps are flagged in metadata.
pub const VALIDITY_EDGE_ETA_G2: f64 = 0.1;

/// Closed runs use the open-system step rule: `t_f/2000` alone is too
/// coarse for RK4 norm conservation once `t_f` reaches a few hundred.
pub fn closed_max_dt(t_f: f64) -> f64 {
    lindblad_max_dt(t_f)
}

#[derive(Debug, Clone, Copy)]
enum Params {
    Closed,
    Lindblad { bath: usize, beta: f64, eta_g2: f64 },
    Sa { tf: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Job {
    params: Params,
    t_f: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepSummary {
    pub rows: Vec<Row>,
    pub failed: usize,
    pub floored: usize,
}

impl SweepSummary {
    pub fn all_ok(&self) -> bool {
        self.failed == 0
    }
}

fn jobs(config: &ExperimentConfig, grid: &[f64]) -> Vec<Job> {
    let tuples: Vec<Params> = match config.engine {
        Engine::Closed => vec![Params::Closed],
        Engine::Lindblad => {
            let mut v = Vec::new();
            for &beta in &config.bath.beta {
                for &eta_g2 in &config.bath.eta_g2 {
                    v.push(Params::Lindblad {
                        bath: v.len(),
                        beta,
                        eta_g2,
                    });
                }
            }
            v
        }
        Engine::Sa => config.sa.tf.iter().map(|&tf| Params::Sa { tf }).collect(),
    };
    tuples
        .into_iter()
        .flat_map(|params| grid.iter().map(move |&t_f| Job { params, t_f }))
        .collect()
}

/// Largest step for `engine` at `t_f`, after `dt_scale` and `dt_max`.
pub fn step_for(config: &ExperimentConfig, t_f: f64) -> f64 {
    let rule = match config.engine {
        Engine::Closed => closed_max_dt(t_f),
        Engine::Lindblad => lindblad_max_dt(t_f),
        Engine::Sa => sa_max_dt(t_f, config.n_spins),
    };
    let dt = rule * config.numerics.dt_scale;
    config.numerics.dt_max.map_or(dt, |cap| dt.min(cap))
}

/// Runs every job in `config` and writes rows to `sink` in job order
/// (parameter tuple outer, `t_f` inner) whatever the completion order.
pub fn run_sweep(config: &ExperimentConfig, sink: impl Write) -> Result<SweepSummary> {
    config.validate()?;
    let grid = config.t_f_grid()?;
    let sector = SpinSector::new(config.n_spins)?;
    let params = ModelParams::new(config.p, config.gamma)?;
    let jobs = jobs(config, &grid);
    if let Some(dir) = &config.output.trajectories {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if config.workers > 0 {
        builder = builder.num_threads(config.workers);
    }
    let pool = builder.build()?;

    let baths: Vec<std::result::Result<PreparedBath, String>> = match config.engine {
        Engine::Lindblad => {
            let omega_max = bohr_frequency_bound(&sector, &params);
            let specs: Vec<(f64, f64)> = config
                .bath
                .beta
                .iter()
                .flat_map(|&b| config.bath.eta_g2.iter().map(move |&e| (b, e)))
                .collect();
            pool.install(|| {
                specs
                    .par_iter()
                    .map(|&(beta, eta)| {
                        let b = &config.bath;
                        BathSpec::new(eta, 1.0, beta, b.omega_c, b.nu, b.lamb_shift)
                            .and_then(|spec| PreparedBath::new(spec, omega_max))
                            .map_err(|e| e.to_string())
                    })
                    .collect()
            })
        }
        _ => Vec::new(),
    };

    let mut writer = RowWriter::new(sink)?;
    let mut summary = SweepSummary::default();
    let (tx, rx) = mpsc::channel::<(usize, Row)>();
    let ctx = RunContext {
        config,
        sector: &sector,
        params: &params,
        baths: &baths,
    };
    std::thread::scope(|scope| -> Result<()> {
        let jobs = &jobs;
        let ctx = &ctx;
        let pool = &pool;
        scope.spawn(move || {
            pool.install(|| {
                jobs.par_iter().enumerate().for_each_with(tx, |tx, (i, job)| {
                    let row = ctx.run(job);
                    // the receiver only hangs up after an output error
                    let _ = tx.send((i, row));
                });
            })
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (i, row) in rx {
            pending.insert(i, row);
            while let Some(row) = pending.remove(&next) {
                log::info!(
                    "{} t_f = {:.4e}: residual {:.4e} [{}]",
                    row.engine,
                    row.t_f,
                    row.residual_energy,
                    row.status
                );
                writer.write(&row)?;
                if !row.is_ok() {
                    summary.failed += 1;
                }
                summary.rows.push(row);
                next += 1;
            }
        }
        Ok(())
    })?;
    writer.into_inner()?.flush()?;
    summary.floored = ctx.floored_count(&summary.rows);
    Ok(summary)
}

/// Runs the sweep into `config.output.csv` and writes the metadata sidecar
/// next to it.
pub fn run_to_file(config: &ExperimentConfig) -> Result<SweepSummary> {
    let path = config
        .output
        .csv
        .clone()
        .context("output.csv is not set (use --out)")?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let summary = run_sweep(config, BufWriter::new(file))?;
    write_metadata(&metadata_path(&path), config, &summary)?;
    Ok(summary)
}

pub fn metadata_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".meta.toml");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct Metadata<'a> {
    generated_unix_seconds: u64,
    generator: String,
    rows: usize,
    failed_rows: usize,
    floored_rows: usize,
    residual_floor: f64,
    near_validity_edge: bool,
    config: &'a ExperimentConfig,
}

pub fn write_metadata(path: &Path, config: &ExperimentConfig, summary: &SweepSummary) -> Result<()> {
    let generated = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = Metadata {
        generated_unix_seconds: generated,
        generator: format!("pspin-anneal {}", env!("CARGO_PKG_VERSION")),
        rows: summary.rows.len(),
        failed_rows: summary.failed,
        floored_rows: summary.floored,
        residual_floor: pspin_core::observables::RESIDUAL_FLOOR,
        near_validity_edge: config.engine == Engine::Lindblad
            && config.bath.eta_g2.iter().any(|&e| e >= VALIDITY_EDGE_ETA_G2),
        config,
    };
    let text = toml::to_string(&meta).context("serializing metadata")?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

struct RunContext<'a> {
    config: &'a ExperimentConfig,
    sector: &'a SpinSector,
    params: &'a ModelParams,
    baths: &'a [std::result::Result<PreparedBath, String>],
}

impl RunContext<'_> {
    fn base_row(&self, job: &Job, dt: f64) -> Row {
        let c = self.config;
        let nan = f64::NAN;
        let mut row = Row {
            engine: c.engine.tag().as_str().to_string(),
            n_spins: c.n_spins,
            p: c.p,
            gamma: c.gamma,
            t_f: job.t_f,
            beta: nan,
            eta_g2: nan,
            omega_c: nan,
            lamb_shift: None,
            t0: nan,
            tf: nan,
            dt,
            bin_tol: nan,
            residual_energy: nan,
            fidelity: nan,
            status: STATUS_OK.to_string(),
        };
        match job.params {
            Params::Closed => {}
            Params::Lindblad { beta, eta_g2, .. } => {
                row.beta = beta;
                row.eta_g2 = eta_g2;
                row.omega_c = c.bath.omega_c;
                row.lamb_shift = Some(c.bath.lamb_shift);
                row.bin_tol = c.numerics.bin_tol;
            }
            Params::Sa { tf } => {
                row.t0 = c.sa.t0;
                row.tf = tf;
                row.beta = if tf == 0.0 { f64::INFINITY } else { 1.0 / tf };
            }
        }
        row
    }

    fn run(&self, job: &Job) -> Row {
        let dt = step_for(self.config, job.t_f);
        let mut row = self.base_row(job, dt);
        match self.execute(job, dt) {
            Ok((residual, fidelity, dt_used, trajectory)) => {
                row.residual_energy = floor_residual(residual).0;
                row.fidelity = fidelity;
                row.dt = dt_used;
                if let (Some(dir), Some(traj)) = (&self.config.output.trajectories, trajectory) {
                    let path = dir.join(trajectory_name(&row));
                    if let Err(e) = std::fs::write(&path, traj) {
                        log::warn!("could not write {}: {e}", path.display());
                    }
                }
            }
            Err(e) => {
                let msg = format!("{e:#}").replace(['\n', '\r'], " ");
                log::warn!("{} t_f = {}: {msg}", row.engine, job.t_f);
                row.status = format!("failed: {msg}");
            }
        }
        row
    }

    fn execute(&self, job: &Job, dt: f64) -> Result<(f64, f64, f64, Option<String>)> {
        let want_traj = self.config.output.trajectories.is_some();
        match job.params {
            Params::Closed => {
                let schedule = AnnealSchedule::linear(job.t_f)?;
                let traj = evolve_closed(self.sector, self.params, &schedule, dt)?;
                self.quantum_outcome(&traj, want_traj)
            }
            Params::Lindblad { bath, .. } => {
                let prepared = self.baths[bath].as_ref().map_err(|e| anyhow::anyhow!("bath: {e}"))?;
                let schedule = AnnealSchedule::linear(job.t_f)?;
                let options = LindbladOptions {
                    dt,
                    bin_tol: self.config.numerics.bin_tol,
                };
                let traj = evolve_lindblad_prepared(self.sector, self.params, &schedule, prepared, options)?;
                self.quantum_outcome(&traj, want_traj)
            }
            Params::Sa { tf } => {
                let schedule = SaSchedule::new(self.config.sa.t0, tf, job.t_f)?;
                let (traj, residual) = evolve_sa(&schedule, self.config.n_spins, self.config.p, dt)?;
                let fidelity = traj.final_distribution().ground_probability(self.config.p);
                let text = want_traj.then(|| sa_trajectory_csv(&traj, self.config.p));
                Ok((residual, fidelity, traj.dt, text))
            }
        }
    }

    fn quantum_outcome(&self, traj: &Trajectory, want_traj: bool) -> Result<(f64, f64, f64, Option<String>)> {
        let state = traj.final_state();
        let residual = residual_energy(state, self.sector, self.params)?;
        let fidelity = ground_fidelity(state, self.sector, self.params)?;
        Ok((residual, fidelity, traj.dt, want_traj.then(|| quantum_trajectory_csv(traj))))
    }

    fn floored_count(&self, rows: &[Row]) -> usize {
        rows.iter()
            .filter(|r| r.is_ok() && r.residual_energy == pspin_core::observables::RESIDUAL_FLOOR)
            .count()
    }
}

fn trajectory_name(row: &Row) -> String {
    let mut name = format!("{}_N{}_p{}_tf{}", row.engine, row.n_spins, row.p, float(row.t_f));
    if row.engine == "lindblad" {
        name += &format!("_beta{}_eta{}", float(row.beta), float(row.eta_g2));
    }
    if row.engine == "sa" {
        name += &format!("_Tf{}", float(row.tf));
    }
    name + ".csv"
}

fn quantum_trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("time,s,energy,ground_population,trace,min_eigenvalue,hermiticity\n");
    for s in &traj.samples {
        out += &[s.time, s.s, s.energy, s.ground_population, s.trace, s.min_eigenvalue, s.hermiticity]
            .map(float)
            .join(",");
        out.push('\n');
    }
    out
}

fn sa_trajectory_csv(traj: &SaTrajectory, p: u32) -> String {
    let mut out = String::from("time,temperature,residual_energy,ground_probability\n");
    for ((t, temp), d) in traj.times.iter().zip(&traj.temperatures).zip(&traj.distributions) {
        out += &[*t, *temp, d.residual_energy(p), d.ground_probability(p)].map(float).join(",");
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::read_rows;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    #[test]
    fn rows_follow_job_order() {
        let c = config(
            r#"
engine = "lindblad"
n_spins = 2
p = 3
workers = 3
[schedule]
t_f = [1.0, 2.0, 4.0]
[bath]
beta = [1.0, inf]
eta_g2 = [0.0, 1e-2]
"#,
        );
        let mut out = Vec::new();
        let summary = run_sweep(&c, &mut out).unwrap();
        assert!(summary.all_ok());
        let rows = read_rows(out.as_slice()).unwrap();
        assert_eq!(rows.len(), 12);
        let keys: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.beta, r.eta_g2, r.t_f)).collect();
        assert_eq!(keys[0], (1.0, 0.0, 1.0));
        assert_eq!(keys[2], (1.0, 0.0, 4.0));
        assert_eq!(keys[3], (1.0, 1e-2, 1.0));
        assert!(keys[11].0.is_infinite());
        assert!(rows.iter().all(|r| r.lamb_shift == Some(true) && r.t0.is_nan()));
    }

    #[test]
    fn failures_become_rows() {
        let c = config(
            r#"
engine = "lindblad"
n_spins = 3
p = 2
[schedule]
t_f = [1.0]
"#,
        );
        let sector = SpinSector::new(3).unwrap();
        let params = ModelParams::new(2, 1.0).unwrap();
        let baths = vec![Err("no table".to_string())];
        let ctx = RunContext {
            config: &c,
            sector: &sector,
            params: &params,
            baths: &baths,
        };
        let job = Job {
            params: Params::Lindblad {
                bath: 0,
                beta: 10.0,
                eta_g2: 1e-2,
            },
            t_f: 1.0,
        };
        let row = ctx.run(&job);
        assert!(!row.is_ok());
        assert!(row.status.starts_with("failed: bath: no table"));
        assert!(row.residual_energy.is_nan());
        assert_eq!(row.beta, 10.0);
    }

    #[test]
    fn sa_rows_carry_temperatures() {
        let mut sa = config(
            r#"
engine = "sa"
n_spins = 3
p = 3
[schedule]
t_f = [1.0]
[sa]
t0 = 2.0
tf = [0.1]
"#,
        );
        sa.numerics.dt_scale = 0.5;
        let mut out = Vec::new();
        let s = run_sweep(&sa, &mut out).unwrap();
        assert!(s.all_ok());
        let r = &s.rows[0];
        assert_eq!((r.t0, r.tf, r.beta), (2.0, 0.1, 10.0));
        assert!(r.fidelity > 0.0 && r.fidelity <= 1.0);
        assert!(r.eta_g2.is_nan() && r.lamb_shift.is_none());
    }

    #[test]
    fn step_rule_per_engine() {
        let mut c = config(
            r#"
engine = "sa"
n_spins = 8
p = 5
[schedule]
t_f = [1.0]
"#,
        );
        assert_eq!(step_for(&c, 1000.0), 0.1 / 8.0);
        c.engine = Engine::Closed;
        assert_eq!(step_for(&c, 1000.0), 0.01);
        assert_eq!(step_for(&c, 2.0), 1e-3);
        c.numerics.dt_max = Some(1e-4);
        assert_eq!(step_for(&c, 2.0), 1e-4);
    }

    #[test]
    fn metadata_flags_validity_edge() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(
            r#"
engine = "lindblad"
n_spins = 2
p = 2
[schedule]
t_f = [1.0]
[bath]
beta = [inf]
eta_g2 = [0.1]
"#,
        );
        c.output.csv = Some(dir.path().join("out.csv"));
        c.output.trajectories = Some(dir.path().join("traj"));
        let summary = run_to_file(&c).unwrap();
        assert!(summary.all_ok());
        let meta = std::fs::read_to_string(dir.path().join("out.csv.meta.toml")).unwrap();
        assert!(meta.contains("near_validity_edge = true"));
        assert!(meta.contains("beta = [inf]"));
        let traj: Vec<_> = std::fs::read_dir(dir.path().join("traj")).unwrap().collect();
        assert_eq!(traj.len(), 1);
    }
}
