//! Experiment driver behind the `avgcons` binary.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 scientific
//! failure (not reached, audit or validation failed), 3 numerical error.

pub mod commands;
pub mod config;
pub mod fit;

pub use commands::{
    cmd_scaling, cmd_simulate, cmd_spectral, cmd_tconv, cmd_validate, error_exit_code, measure,
    scaling_sweep, Outcome,
};
pub use config::{ExperimentConfig, InitSpec, RawConfig, SequenceSpec};
pub use fit::{fit_scaling, least_squares, LinearFit, ScalingFitReport, ScalingPoint};
