//! Experiment harness: configuration files, the verification battery, domain
//! sweeps, and the command-line front end.

mod battery;
mod cli;
mod config;
mod sweep;

pub use battery::{battery_all_pass, default_battery_domains, run_battery};
pub use cli::run_cli;
pub use config::{parse_exponent, parse_shape, ExperimentConfig};
pub use sweep::{run_sweep, summaries_to_csv_string, sweep_to_csv_string, PairSummary, SweepReport, SweepRow};
