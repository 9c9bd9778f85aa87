//! Experiment driver: JSON configs, SNR sweeps with early stopping,
//! CSV/JSON results and SVG plots.

pub mod config;
pub mod plot;
pub mod sweep;

pub use config::{ExperimentConfig, SchemeConfig, StoppingRule};
pub use plot::{emit_plot, series_from_results, Series};
pub use sweep::{
    read_results, run_experiment, run_point, run_sweep, ExperimentOutput, PointResult, RunOptions,
    SweepResult, SweepSpec, METADATA_FILE, RESULTS_FILE, THREADS_ENV,
};
