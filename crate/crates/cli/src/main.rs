use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pspin_cli::compare::{compare_report, format_report};
use pspin_cli::config::{parse_float, Engine, ExperimentConfig, Overrides};
use pspin_cli::diagnostics::{gap_scan, quantum_stationary, thermal_stationary, write_gap_csv, FrozenRun};
use pspin_cli::sweep::run_to_file;
use pspin_cli::table::read_rows_from;
use pspin_core::bath::DEFAULT_OMEGA_C;
use pspin_core::evolve::DEFAULT_BIN_TOL;
use pspin_core::BathSpec;

#[derive(Parser)]
#[command(name = "pspin-anneal", version, about = "Quantum and thermal annealing of the p-spin model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        engine: Option<Engine>,
        #[arg(long)]
        n_spins: Option<usize>,
        #[arg(long)]
        p: Option<u32>,
        /// Comma-separated couplings η·g² (g = 1).
        #[arg(long, value_delimiter = ',', value_parser = parse_float_arg)]
        eta_g2: Option<Vec<f64>>,
        /// Comma-separated inverse temperatures; `inf` for T = 0.
        #[arg(long, value_delimiter = ',', value_parser = parse_float_arg)]
        beta: Option<Vec<f64>>,
        #[arg(long)]
        omega_c: Option<f64>,
        #[arg(long)]
        lamb_shift: Option<Switch>,
        /// Comma-separated annealing times, replacing the config schedule.
        #[arg(long, value_delimiter = ',', value_parser = parse_float_arg)]
        t_f: Option<Vec<f64>>,
        #[arg(long)]
        workers: Option<usize>,
        /// Output CSV; a `.meta.toml` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trajectories: Option<PathBuf>,
    },
    /// Report SA/QA crossover times from sweep CSVs.
    Compare {
        #[arg(required = true)]
        tables: Vec<PathBuf>,
    },
    /// Minimum spectral gap for each N.
    Gap {
        #[arg(long)]
        p: u32,
        /// Comma-separated system sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n_spins: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fixed-point diagnostics of the frozen master equation (`lindblad`)
    /// or of fixed-temperature Glauber dynamics (`sa`).
    Stationary {
        #[arg(long)]
        engine: Engine,
        #[arg(long)]
        n_spins: usize,
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Frozen schedule parameter.
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, value_parser = parse_float_arg, default_value = "2")]
        beta: f64,
        #[arg(long, default_value_t = 1e-2)]
        eta_g2: f64,
        #[arg(long, default_value_t = DEFAULT_OMEGA_C)]
        omega_c: f64,
        #[arg(long, default_value = "on")]
        lamb_shift: Switch,
        /// Glauber temperature.
        #[arg(long, default_value_t = 0.5)]
        temperature: f64,
        #[arg(long, default_value_t = 2000.0)]
        duration: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
}

fn parse_float_arg(s: &str) -> Result<f64, String> {
    parse_float(s).map_err(|e| format!("{e:#}"))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the command ran but some rows failed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            engine,
            n_spins,
            p,
            eta_g2,
            beta,
            omega_c,
            lamb_shift,
            t_f,
            workers,
            out,
            trajectories,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply(Overrides {
                engine,
                n_spins,
                p,
                eta_g2,
                beta,
                omega_c,
                lamb_shift: lamb_shift.map(|s| matches!(s, Switch::On)),
                t_f,
                workers,
                csv: out,
                trajectories,
            });
            cfg.validate()?;
            let summary = run_to_file(&cfg)?;
            log::info!(
                "{} rows, {} failed, {} at the residual floor",
                summary.rows.len(),
                summary.failed,
                summary.floored
            );
            Ok(summary.all_ok())
        }
        Command::Compare { tables } => {
            let mut rows = Vec::new();
            for t in &tables {
                rows.extend(read_rows_from(t)?);
            }
            let report = compare_report(&rows)?;
            print!("{}", format_report(&report));
            Ok(true)
        }
        Command::Gap {
            p,
            n_spins,
            gamma,
            points,
            out,
        } => {
            let rows = gap_scan(&n_spins, p, gamma, points)?;
            write_gap_csv(&rows, output(&out)?)?;
            Ok(true)
        }
        Command::Stationary {
            engine,
            n_spins,
            p,
            gamma,
            s,
            beta,
            eta_g2,
            omega_c,
            lamb_shift,
            temperature,
            duration,
            dt,
        } => {
            match engine {
                Engine::Lindblad => {
                    let spec = BathSpec::ohmic(eta_g2, beta, omega_c, matches!(lamb_shift, Switch::On))?;
                    let run = FrozenRun {
                        n_spins,
                        p,
                        gamma,
                        s,
                        duration,
                        dt,
                        bin_tol: DEFAULT_BIN_TOL,
                    };
                    let r = quantum_stationary(&run, spec)?;
                    println!("rhs_at_gibbs = {:.3e}", r.rhs_at_gibbs);
                    println!("total_variation = {:.3e}", r.total_variation);
                    println!("min_eigenvalue = {:.3e}", r.min_eigenvalue);
                    println!("max_trace_error = {:.3e}", r.max_trace_error);
                    println!("populations = {:?}", r.populations);
                    println!("gibbs = {:?}", r.gibbs);
                }
                Engine::Sa => {
                    let start = 4.0 * temperature.max(0.5);
                    let r = thermal_stationary(n_spins, p, temperature, start, duration, dt)?;
                    println!("rhs_at_equilibrium = {:.3e}", r.rhs_at_equilibrium);
                    println!("detailed_balance = {:.3e}", r.detailed_balance);
                    println!("total_variation = {:.3e}", r.total_variation);
                }
                Engine::Closed => anyhow::bail!("closed evolution has no stationary state to check"),
            }
            Ok(true)
        }
    }
}
