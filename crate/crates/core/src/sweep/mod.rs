//! Command implementations behind the `rydberg-fusion` binary: run config,
//! CSV reports, and the `evolve`, `sweep`, `fuse` and `params` commands.

mod commands;
mod config;
mod report;

pub use commands::{
    cmd_evolve, cmd_fuse, cmd_params, cmd_sweep, parse_protocol, CliError, FuseReport,
};
pub use config::{Axis, AxisKind, Bound, ConfigError, Preset, SweepConfig, Target};
pub use report::{plain, sig9, CsvReport};
