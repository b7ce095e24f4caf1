//! Run configuration, experiment orchestration and file emission behind the
//! `nvlab` command line.

pub mod commands;
pub mod config;
pub mod perturb;

pub use commands::{
    cmd_evolve, cmd_perturb, cmd_scan, cmd_speed_profile, cmd_trace, exit_code, seed_from_scan, EvolveReport,
    ScanReport, TraceReport,
};
pub use config::{
    EvolveConfig, FirstStepKind, InitialData, PerturbConfig, RunConfig, ScanConfig, SpeedProfileConfig, TraceConfig,
};
pub use perturb::{
    run_perturbation, soliton_center, write_deviation_csv, DeviationSample, PerturbOutcome, PerturbSummary,
};
