// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;

use super::MechState;
use crate::params::{Modulation, SystemParams, HBAR};

/// Dimensionless intracavity field amplitude in the frame rotating at ω_L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityState {
    pub a: Complex64,
}

impl CavityState {
    pub fn intensity(&self) -> f64 {
        self.a.norm_sqr()
    }
}

/// Drive rate η for input power `power` (units of E0 ω_L), from P = ħ ω_L |η|² / (2κ).
fn drive_rate(params: &SystemParams, power: f64) -> f64 {
    (2.0 * params.cavity_decay * power * params.energy_unit() / HBAR).sqrt()
}

/// Fixed point of the field equation at frozen displacement `x`.
pub fn steady_state_field(params: &SystemParams, power: f64, x: f64) -> CavityState {
    let eta = drive_rate(params, power);
    let shift = params.detuning - params.quad_coupling * x * x;
    CavityState {
        a: Complex64::new(eta, 0.0) / Complex64::new(0.5 * params.cavity_decay, -shift),
    }
}

#[derive(Clone, Copy)]
struct Full {
    x: f64,
    p: f64,
    a: Complex64,
}

impl Full {
    fn axpy(self, h: f64, d: Full) -> Full {
        Full {
            x: self.x + h * d.x,
            p: self.p + h * d.p,
            a: self.a + d.a * h,
        }
    }
}

fn rhs(s: Full, t: f64, params: &SystemParams, modulation: &Modulation) -> Full {
    let m = params.mass;
    let w2 = params.mech_freq * params.mech_freq;
    let g2 = params.quad_coupling;
    let eta = drive_rate(params, modulation.input_power(t));
    let shift = params.detuning - g2 * s.x * s.x;
    Full {
        x: s.p / m,
        p: -m * w2 * s.x - 2.0 * HBAR * g2 * s.a.norm_sqr() * s.x - params.mech_damping * s.p,
        a: Complex64::new(-0.5 * params.cavity_decay, shift) * s.a + eta,
    }
}

/// One classical RK4 step of the coupled mechanics and cavity field, without adiabatic elimination.
///
/// The drive rate follows the instantaneous input power. Steps with κ·dt > 0.1 are warned about.
pub fn integrate_full_cavity(
    state: MechState,
    cavity: CavityState,
    params: &SystemParams,
    modulation: &Modulation,
    dt: f64,
) -> (MechState, CavityState) {
    if params.cavity_decay * dt > 0.1 {
        log::warn!(
            "kappa*dt = {} > 0.1: the cavity field is under-resolved",
            params.cavity_decay * dt
        );
    }
    let t = state.t;
    let y = Full {
        x: state.x,
        p: state.p,
        a: cavity.a,
    };
    let k1 = rhs(y, t, params, modulation);
    let k2 = rhs(y.axpy(0.5 * dt, k1), t + 0.5 * dt, params, modulation);
    let k3 = rhs(y.axpy(0.5 * dt, k2), t + 0.5 * dt, params, modulation);
    let k4 = rhs(y.axpy(dt, k3), t + dt, params, modulation);
    let next = Full {
        x: y.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        p: y.p + dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
        a: y.a + (k1.a + k2.a * 2.0 + k3.a * 2.0 + k4.a) * (dt / 6.0),
    };
    (
        MechState::new(next.x, next.p, t + dt),
        CavityState { a: next.a },
    )
}
