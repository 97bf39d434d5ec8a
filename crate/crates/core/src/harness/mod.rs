//! Monte Carlo experiments: configuration, single trials, sweeps over the
//! observation cost, aggregation and CSV output.

mod config;
pub mod presets;
pub mod seeds;
mod stats;
mod sweep;
mod trial;

pub use config::{
    apply_override, ExperimentConfig, PolicySpec, VerifySettings, WorldSpec, DEFAULT_HORIZON,
    DEFAULT_TRIALS,
};
pub use stats::{
    aggregate_bayes_risk, aggregate_sampling_risk, mean_ci, wilson_ci, CellSummary, Interval, Z_95,
};
pub use sweep::{
    read_csv_file, run_cell, run_sweep, write_csv, write_csv_file, write_json_file, CsvRow,
    SweepResult, CSV_HEADER,
};
pub use trial::{run_trial, TrialOutcome};
