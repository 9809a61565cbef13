// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form mechanics of the adiabatically eliminated cavity: static and
//! modulated potentials, forces, the time-averaged (Kapitza) potential and
//! the stability analysis built on its curvature at the origin.
//!
//! Powers are in units of `E0 ω_L` (see [`crate::params`]); a power `P`
//! enters the mechanics as the energy `P · E0`, i.e. `P_phys / ω_L`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::{Modulation, SystemParams, HBAR};

/// Below this Ω/ω0 the micromotion is not separable from the macromotion.
pub const MIN_MODULATION_RATIO: f64 = 5.0;

#[inline]
fn drive_energy(params: &SystemParams, power: f64) -> f64 {
    power * params.energy_unit()
}

/// arctan[(Δ_c − g2 x²)/(κ/2)].
#[inline]
fn optical_phase(params: &SystemParams, x: f64) -> f64 {
    ((params.detuning - params.quad_coupling * x * x) / (0.5 * params.cavity_decay)).atan()
}

/// Bare trap U_m(x) = m ω_m² x²/2.
#[inline]
pub fn bare_potential(params: &SystemParams, x: f64) -> f64 {
    0.5 * params.mass * params.mech_freq * params.mech_freq * x * x
}

/// Steady-state intracavity photon number |a|² at displacement `x` for input power `power`.
pub fn adiabatic_intensity(params: &SystemParams, power: f64, x: f64) -> f64 {
    2.0 * drive_energy(params, power) * params.cavity_decay / HBAR / params.lorentz_denominator(x)
}

/// Static potential U_s(x) for a constant input power.
pub fn static_potential(params: &SystemParams, power: f64, x: f64) -> f64 {
    bare_potential(params, x) - 4.0 * drive_energy(params, power) * optical_phase(params, x)
}

/// U(x, t) = U_s(x) + u(x, t): the static potential at the instantaneous power P_in(t).
pub fn time_dependent_potential(
    params: &SystemParams,
    modulation: &Modulation,
    x: f64,
    t: f64,
) -> f64 {
    static_potential(params, modulation.input_power(t), x)
}

/// ∫ U(x, s) ds over [t0, t1], exact for the sinusoidal drive.
pub fn potential_time_integral(
    params: &SystemParams,
    modulation: &Modulation,
    x: f64,
    t0: f64,
    t1: f64,
) -> f64 {
    bare_potential(params, x) * (t1 - t0)
        - 4.0
            * drive_energy(params, modulation.power_integral(t0, t1))
            * optical_phase(params, x)
}

/// F_s(x) = −dU_s/dx at constant power.
pub fn static_force(params: &SystemParams, power: f64, x: f64) -> f64 {
    let w2 = params.mech_freq * params.mech_freq;
    -params.mass * w2 * x
        - 4.0 * params.quad_coupling * drive_energy(params, power) * params.cavity_decay * x
            / params.lorentz_denominator(x)
}

/// Total force −∂U/∂x at time `t`, i.e. F_s(x) + f(x, t).
pub fn total_force(params: &SystemParams, modulation: &Modulation, x: f64, t: f64) -> f64 {
    static_force(params, modulation.input_power(t), x)
}

/// Spatial amplitude 𝒜(x) of the modulation force f(x, t) = 𝒜(x) sin(Ωt).
pub fn modulation_amplitude(params: &SystemParams, modulation: &Modulation, x: f64) -> f64 {
    4.0 * params.quad_coupling * drive_energy(params, modulation.amplitude) * params.cavity_decay
        * x
        / params.lorentz_denominator(x)
}

pub fn modulation_force(params: &SystemParams, modulation: &Modulation, x: f64, t: f64) -> f64 {
    if modulation.amplitude == 0.0 {
        return 0.0;
    }
    modulation_amplitude(params, modulation, x) * (modulation.mod_freq * t).sin()
}

/// Fast displacement ζ ≈ −f(x, t)/(m Ω²) riding on the macromotion.
pub fn micromotion(params: &SystemParams, modulation: &Modulation, x: f64, t: f64) -> f64 {
    if modulation.amplitude == 0.0 {
        return 0.0;
    }
    check_modulation_ratio(params, modulation);
    let w = modulation.mod_freq;
    -modulation_force(params, modulation, x, t) / (params.mass * w * w)
}

/// Warns when Ω/ω0 falls below [`MIN_MODULATION_RATIO`]. Returns whether the ratio is adequate.
pub fn check_modulation_ratio(params: &SystemParams, modulation: &Modulation) -> bool {
    let w0 = effective_frequency(params, modulation.mean_power);
    let ratio = modulation.mod_freq / w0;
    let ok = ratio >= MIN_MODULATION_RATIO;
    if !ok {
        log::warn!(
            "Omega/omega_0 = {ratio:.3} < {MIN_MODULATION_RATIO}: time averaging is not justified"
        );
    }
    ok
}

/// Time-averaged potential Ū(x) governing the macromotion.
pub fn time_averaged_potential(params: &SystemParams, modulation: &Modulation, x: f64) -> f64 {
    let base = static_potential(params, modulation.mean_power, x);
    if modulation.amplitude == 0.0 {
        return base;
    }
    let w = modulation.mod_freq;
    let a = drive_energy(params, modulation.amplitude);
    let shape = 2.0 * params.quad_coupling * params.cavity_decay * x / params.lorentz_denominator(x);
    base + a * a / (params.mass * w * w) * shape * shape
}

/// Input power at which U_s switches from a single to a double well, in units of E0 ω_L.
pub fn critical_power(params: &SystemParams) -> f64 {
    let w2 = params.mech_freq * params.mech_freq;
    let kappa = params.cavity_decay;
    let energy = params.mass * w2 / (4.0 * params.quad_coupling.abs() * kappa)
        * (params.detuning * params.detuning + 0.25 * kappa * kappa);
    energy / params.energy_unit()
}

/// Frequency of the (inverted, for P0 > P_c) oscillator approximating U_s near x = 0.
pub fn effective_frequency(params: &SystemParams, power: f64) -> f64 {
    let w2 = params.mech_freq * params.mech_freq;
    let kappa = params.cavity_decay;
    let optical = 4.0 * drive_energy(params, power) / params.mass * params.quad_coupling * kappa
        / (params.detuning * params.detuning + 0.25 * kappa * kappa);
    (w2 + optical).abs().sqrt()
}

/// d²U_s/dx² at the origin.
pub fn static_curvature(params: &SystemParams, power: f64) -> f64 {
    let kappa = params.cavity_decay;
    params.mass * params.mech_freq * params.mech_freq
        + 4.0 * drive_energy(params, power) * params.quad_coupling * kappa
            / (params.detuning * params.detuning + 0.25 * kappa * kappa)
}

/// Curvature D = Ū''(0) of the time-averaged potential, in closed form.
pub fn curvature_d(params: &SystemParams, modulation: &Modulation) -> f64 {
    let base = static_curvature(params, modulation.mean_power);
    if modulation.amplitude == 0.0 {
        return base;
    }
    let w = modulation.mod_freq;
    let a = drive_energy(params, modulation.amplitude);
    base + 2.0 * a * a / (params.mass * w * w) * modulation_gain(params).powi(2)
}

/// 2 g2 κ / (Δ_c² + κ²/4): the x → 0 slope of the modulation shape.
fn modulation_gain(params: &SystemParams) -> f64 {
    let kappa = params.cavity_decay;
    2.0 * params.quad_coupling * kappa
        / (params.detuning * params.detuning + 0.25 * kappa * kappa)
}

/// Positive positions of the static double-well minima, empty below P_c.
pub fn static_wells(params: &SystemParams, power: f64) -> Vec<f64> {
    let w2 = params.mech_freq * params.mech_freq;
    let kappa = params.cavity_decay;
    // F_s = 0 away from x = 0  <=>  lorentz_denominator(x) = 4 |g2| W κ / (m ω_m²)
    let target = 4.0 * params.quad_coupling.abs() * drive_energy(params, power) * kappa
        / (params.mass * w2);
    let excess = target - 0.25 * kappa * kappa;
    if excess <= 0.0 {
        return Vec::new();
    }
    let s = excess.sqrt();
    let mut wells: Vec<f64> = [s, -s]
        .iter()
        .map(|root| (root - params.detuning) / params.quad_coupling.abs())
        .filter(|x2| *x2 > 0.0)
        .map(f64::sqrt)
        .collect();
    wells.sort_by(f64::total_cmp);
    wells.dedup();
    wells
}

/// Smallest modulation amplitude (units of E0 ω_L) making D > 0 at drive frequency `mod_freq`.
///
/// D is increasing in A, so the root is bracketed on (0, P0] and bisected.
pub fn stability_threshold(params: &SystemParams, mean_power: f64, mod_freq: f64) -> Result<f64> {
    if !(mod_freq > 0.0) {
        return Err(invalid("mod_freq", "must be positive"));
    }
    let curvature_at = |amp: f64| {
        curvature_d(
            params,
            &Modulation {
                mean_power,
                amplitude: amp,
                mod_freq,
            },
        )
    };
    if curvature_at(0.0) >= 0.0 {
        return Err(Error::NoRoot(format!(
            "origin already stable at A = 0 (P0 = {mean_power} <= P_c = {})",
            critical_power(params)
        )));
    }
    if curvature_at(mean_power) < 0.0 {
        return Err(Error::NoRoot(format!(
            "no stabilizing amplitude within the power constraint A <= P0 at Omega = {mod_freq}"
        )));
    }
    let (mut lo, mut hi) = (0.0, mean_power);
    while hi - lo > 1e-15 * mean_power {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if curvature_at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Stability diagram over (Ω/ω_m, A/P0).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityMap {
    pub mean_power: f64,
    /// Ω/ω_m samples.
    pub omega_axis: Vec<f64>,
    /// A/P0 samples.
    pub amp_axis: Vec<f64>,
    /// `curvature_grid[i][j]` is D at (omega_axis[i], amp_axis[j]), in E0/x0².
    pub curvature_grid: Vec<Vec<f64>>,
    pub stable_grid: Vec<Vec<bool>>,
    /// A*/P0 per Ω sample, `None` when the threshold lies outside the amplitude axis.
    pub threshold_curve: Vec<Option<f64>>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn stability_map(
    params: &SystemParams,
    mean_power: f64,
    omega_range: (f64, f64),
    amp_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<StabilityMap> {
    params.validate()?;
    let (w_lo, w_hi) = omega_range;
    let (a_lo, a_hi) = amp_range;
    if !(w_lo > 0.0 && w_hi >= w_lo) {
        return Err(invalid("omega_range", "must be positive and ordered"));
    }
    if !(a_lo >= 0.0 && a_hi >= a_lo && a_hi <= 1.0) {
        return Err(invalid("amp_range", "A/P0 must satisfy 0 <= lo <= hi <= 1"));
    }
    if resolution.0 == 0 || resolution.1 == 0 {
        return Err(invalid("resolution", "must be at least 1x1"));
    }
    let omega_axis = linspace(w_lo, w_hi, resolution.0);
    let amp_axis = linspace(a_lo, a_hi, resolution.1);
    let w_m = params.mech_freq;

    let rows: Vec<(Vec<f64>, Option<f64>)> = omega_axis
        .par_iter()
        .map(|&w_ratio| {
            let omega = w_ratio * w_m;
            let row = amp_axis
                .iter()
                .map(|&a_ratio| {
                    curvature_d(
                        params,
                        &Modulation {
                            mean_power,
                            amplitude: a_ratio * mean_power,
                            mod_freq: omega,
                        },
                    )
                })
                .collect();
            let threshold = stability_threshold(params, mean_power, omega)
                .ok()
                .map(|a| a / mean_power)
                .filter(|r| *r >= a_lo && *r <= a_hi);
            (row, threshold)
        })
        .collect();

    let mut curvature_grid = Vec::with_capacity(rows.len());
    let mut threshold_curve = Vec::with_capacity(rows.len());
    for (row, thr) in rows {
        curvature_grid.push(row);
        threshold_curve.push(thr);
    }
    let stable_grid = curvature_grid
        .iter()
        .map(|row| row.iter().map(|d| *d > 0.0).collect())
        .collect();
    if threshold_curve.iter().any(Option::is_none) {
        log::warn!("stability threshold lies outside the A/P0 range for some Omega samples");
    }
    Ok(StabilityMap {
        mean_power,
        omega_axis,
        amp_axis,
        curvature_grid,
        stable_grid,
        threshold_curve,
    })
}
