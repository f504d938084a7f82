//! Experiment runner for the p-spin annealing engines: TOML-configured
//! sweeps written as CSV, SA/QA crossover reports, gap scans and
//! fixed-point diagnostics.

pub mod compare;
pub mod config;
pub mod diagnostics;
pub mod sweep;
pub mod table;

pub use config::{Engine, ExperimentConfig, Overrides};
pub use sweep::{run_sweep, run_to_file, SweepSummary};
pub use table::{read_rows, Row, HEADER};
