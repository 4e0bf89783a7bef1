//! Scenario files and the command workflows behind the CLI.

mod commands;
pub mod config;

pub use commands::{
    cmd_check, cmd_compare, cmd_run, cmd_sweep, energy_fit, resolve_jobs, CompareVerdict, RunBrief,
    RunOutcome, SweepAxis, SweepRow, COMPARE, MANIFEST, R_HI, R_LO, SWEEP,
};
pub use config::{paper_s6, ScenarioConfig, PAPER_S6_JSON};
