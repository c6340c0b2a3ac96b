//! Scenario files, CSV output and the command line.

pub mod cli;
pub mod config;
pub mod csv;

pub use config::{parse_scenario, ScenarioConfig};
pub use csv::{write_sweep, write_sweep_csv, SWEEP_HEADER};
