// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! Classical mechanics of the membrane: the adiabatic Langevin equation with
//! modulated radiation pressure, Gaussian ensembles and their histograms, the
//! full cavity-plus-mechanics ODE used as an oracle for adiabatic elimination,
//! and spectral estimation of the macromotion.

mod cavity;
mod ensemble;
mod langevin;
mod spectrum;

pub use cavity::{integrate_full_cavity, steady_state_field, CavityState};
pub use ensemble::{
    run_ensemble, sample_initial, trajectory_rng, DensityHistogram, EnsembleConfig, EnsembleRun,
    HistogramSpec, PhaseSpaceHistogram,
};
pub use langevin::{langevin_step, run_trajectory, Integrator, Trajectory};
pub use spectrum::macromotion_frequency;

use serde::{Deserialize, Serialize};

/// Phase-space point of the mechanics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechState {
    pub x: f64,
    pub p: f64,
    pub t: f64,
}

impl MechState {
    pub fn new(x: f64, p: f64, t: f64) -> Self {
        MechState { x, p, t }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite()
    }
}
