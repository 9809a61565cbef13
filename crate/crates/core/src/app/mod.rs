// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! Configuration, bundled presets, run orchestration and CSV/manifest output.

pub mod check;
pub mod commands;
pub mod config;
pub mod output;
pub mod presets;

pub use check::{run_battery, CheckOptions};
pub use commands::{exit, exit_code, load_config, run, run_with, Command};
pub use config::{Engine, RunConfig};
pub use output::{Check, CsvTable, CsvWriter, RunIdentity, RunManifest};
pub use presets::{names as preset_names, preset};
