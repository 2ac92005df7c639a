//! Experiment configuration, runners and reports.

pub mod config;
pub mod experiments;
pub mod io;
pub mod report;
pub mod stats;

pub use config::{ExperimentConfig, InitialLaw};
pub use experiments::{
    run_bound_suite, run_chaos, run_convergence, run_dichotomy, run_meanfield, stability_constants,
};
pub use report::{ExperimentReport, InequalityCheck};
