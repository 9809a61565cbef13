// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! Dynamic (Kapitza-style) stabilization of a membrane-in-the-middle
//! optomechanical oscillator under modulated radiation pressure.
//!
//! * [`params`]: model constants, natural units and the modulated drive.
//! * [`potential`]: static, time-dependent and time-averaged potentials and
//!   the stability analysis of the origin.
//! * [`classical`]: Langevin ensembles, the full cavity oracle and spectral
//!   analysis of trajectories.
//! * [`quantum`]: position-representation master equation for the reduced
//!   mechanical density matrix, probability densities and Wigner functions.
//! * [`app`]: configuration, presets, CSV/manifest output and the CLI commands.

pub mod app;
pub mod classical;
pub mod error;
pub mod params;
pub mod potential;
pub mod quantum;

pub use error::{Error, Result};
pub use params::{natural_units, Modulation, NaturalUnits, SystemParams};
