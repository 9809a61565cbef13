// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! Physical parameters, natural units and the modulated input-power drive.
//!
//! Everything runs with ħ = 1. Lengths, momenta and energies are reported in
//! the harmonic-oscillator units `x0 = sqrt(ħ/(m ω_m))`, `p0 = sqrt(m ħ ω_m)`,
//! `E0 = ħ ω_m`, and drive powers are carried as `P / (E0 ω_L)`, so the laser
//! frequency only ever appears through that ratio.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Reduced Planck constant in internal units.
pub const HBAR: f64 = 1.0;

/// Constants of the membrane-in-the-middle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Bare mechanical frequency ω_m.
    pub mech_freq: f64,
    /// Effective mass m.
    pub mass: f64,
    /// Cavity field decay rate κ.
    pub cavity_decay: f64,
    /// Mechanical damping rate γ.
    pub mech_damping: f64,
    /// Pump detuning Δ_c = ω_L − ω_c.
    pub detuning: f64,
    /// Quadratic optomechanical coupling g0^(2); must be negative.
    pub quad_coupling: f64,
    /// Laser frequency ω_L.
    pub laser_freq: f64,
    /// Thermal energy k_B T of the mechanical bath. Only the classical noise uses it.
    pub bath_temperature: f64,
    /// Minimum κ/ω_m below which reduced-potential operations warn.
    pub adiabatic_guard: f64,
}

impl SystemParams {
    pub const DEFAULT_ADIABATIC_GUARD: f64 = 50.0;

    /// Parameters with ω_m = m = 1, expressed through the dimensionless
    /// ratios used in the configuration file.
    pub fn dimensionless(
        kappa_over_omega_m: f64,
        detuning_over_omega_m: f64,
        g2_x0sq_over_omega_m: f64,
        gamma_over_omega_m: f64,
    ) -> Self {
        SystemParams {
            mech_freq: 1.0,
            mass: 1.0,
            cavity_decay: kappa_over_omega_m,
            mech_damping: gamma_over_omega_m,
            detuning: detuning_over_omega_m,
            quad_coupling: g2_x0sq_over_omega_m,
            laser_freq: 1.0,
            bath_temperature: 0.0,
            adiabatic_guard: Self::DEFAULT_ADIABATIC_GUARD,
        }
    }

    /// κ/ω_m = 200, Δ_c = 0, g0^(2) x0²/ω_m = −0.01, undamped.
    pub fn reference() -> Self {
        Self::dimensionless(200.0, 0.0, -0.01, 0.0)
    }

    pub fn with_damping(mut self, gamma: f64) -> Self {
        self.mech_damping = gamma;
        self
    }

    pub fn with_temperature(mut self, k_b_t: f64) -> Self {
        self.bath_temperature = k_b_t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn finite(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} is not finite")))
            }
        }
        finite("mech_freq", self.mech_freq)?;
        finite("mass", self.mass)?;
        finite("cavity_decay", self.cavity_decay)?;
        finite("mech_damping", self.mech_damping)?;
        finite("detuning", self.detuning)?;
        finite("quad_coupling", self.quad_coupling)?;
        finite("laser_freq", self.laser_freq)?;
        finite("bath_temperature", self.bath_temperature)?;
        if self.mech_freq <= 0.0 {
            return Err(invalid("mech_freq", "must be positive"));
        }
        if self.mass <= 0.0 {
            return Err(invalid("mass", "must be positive"));
        }
        if self.cavity_decay <= 0.0 {
            return Err(invalid("cavity_decay", "must be positive"));
        }
        if self.mech_damping < 0.0 {
            return Err(invalid("mech_damping", "must be non-negative"));
        }
        if self.laser_freq <= 0.0 {
            return Err(invalid("laser_freq", "must be positive"));
        }
        if self.quad_coupling >= 0.0 {
            return Err(invalid("quad_coupling", "must be negative"));
        }
        if self.bath_temperature < 0.0 {
            return Err(invalid("bath_temperature", "must be non-negative"));
        }
        Ok(())
    }

    /// Warns when κ/ω_m is below the adiabatic guard. Returns whether the guard holds.
    pub fn check_adiabatic(&self) -> bool {
        let ratio = self.cavity_decay / self.mech_freq;
        let ok = ratio >= self.adiabatic_guard;
        if !ok {
            log::warn!(
                "kappa/omega_m = {ratio} is below the adiabatic guard {}; the reduced potential may be inaccurate",
                self.adiabatic_guard
            );
        }
        ok
    }

    /// E0 = ħ ω_m.
    pub fn energy_unit(&self) -> f64 {
        HBAR * self.mech_freq
    }

    /// (Δ_c − g2 x²)² + κ²/4.
    #[inline]
    pub fn lorentz_denominator(&self, x: f64) -> f64 {
        let shift = self.detuning - self.quad_coupling * x * x;
        shift * shift + 0.25 * self.cavity_decay * self.cavity_decay
    }
}

/// Harmonic-oscillator scales of the bare mechanics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaturalUnits {
    pub x0: f64,
    pub p0: f64,
    pub e0: f64,
}

pub fn natural_units(params: &SystemParams) -> Result<NaturalUnits> {
    if !(params.mass > 0.0) {
        return Err(invalid("mass", "must be positive"));
    }
    if !(params.mech_freq > 0.0) {
        return Err(invalid("mech_freq", "must be positive"));
    }
    let m = params.mass;
    let w = params.mech_freq;
    Ok(NaturalUnits {
        x0: (HBAR / (m * w)).sqrt(),
        p0: (m * HBAR * w).sqrt(),
        e0: HBAR * w,
    })
}

/// Input power `P_in(t) = P0 − A sin(Ωt)`, with P0 and A in units of E0 ω_L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub mean_power: f64,
    pub amplitude: f64,
    pub mod_freq: f64,
}

impl Modulation {
    pub fn new(mean_power: f64, amplitude: f64, mod_freq: f64) -> Result<Self> {
        let m = Modulation {
            mean_power,
            amplitude,
            mod_freq,
        };
        m.validate()?;
        Ok(m)
    }

    /// Unmodulated drive at power `p0`.
    pub fn constant(mean_power: f64) -> Result<Self> {
        Self::new(mean_power, 0.0, 0.0)
    }

    /// Drive with amplitude given as a fraction of the mean power.
    pub fn from_ratio(mean_power: f64, a_over_p0: f64, mod_freq: f64) -> Result<Self> {
        Self::new(mean_power, a_over_p0 * mean_power, mod_freq)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean_power.is_finite() || self.mean_power < 0.0 {
            return Err(invalid("mean_power", "must be finite and non-negative"));
        }
        if !self.amplitude.is_finite() || self.amplitude < 0.0 {
            return Err(invalid("amplitude", "must be finite and non-negative"));
        }
        if self.amplitude > self.mean_power {
            return Err(invalid(
                "amplitude",
                format!(
                    "A = {} exceeds P0 = {}; input power would go negative",
                    self.amplitude, self.mean_power
                ),
            ));
        }
        if !self.mod_freq.is_finite() || self.mod_freq < 0.0 {
            return Err(invalid("mod_freq", "must be finite and non-negative"));
        }
        if self.amplitude > 0.0 && self.mod_freq <= 0.0 {
            return Err(invalid("mod_freq", "must be positive when A > 0"));
        }
        Ok(())
    }

    pub fn is_modulated(&self) -> bool {
        self.amplitude > 0.0
    }

    /// A/P0, or 0 for a zero drive.
    pub fn amplitude_ratio(&self) -> f64 {
        if self.mean_power > 0.0 {
            self.amplitude / self.mean_power
        } else {
            0.0
        }
    }

    #[inline]
    pub fn input_power(&self, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            self.mean_power
        } else {
            self.mean_power - self.amplitude * (self.mod_freq * t).sin()
        }
    }

    /// ∫ P_in(s) ds over [t0, t1].
    pub fn power_integral(&self, t0: f64, t1: f64) -> f64 {
        let mut acc = self.mean_power * (t1 - t0);
        if self.amplitude != 0.0 {
            let w = self.mod_freq;
            acc += self.amplitude / w * ((w * t1).cos() - (w * t0).cos());
        }
        acc
    }
}

pub fn input_power(modulation: &Modulation, t: f64) -> f64 {
    modulation.input_power(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_scales_for_unit_mass_and_frequency() {
        let u = natural_units(&SystemParams::reference()).unwrap();
        assert_eq!((u.x0, u.p0, u.e0), (1.0, 1.0, 1.0));
    }

    #[test]
    fn quadrupled_mass_halves_length_and_doubles_momentum() {
        let mut p = SystemParams::reference();
        p.mech_freq = 2.5;
        let base = natural_units(&p).unwrap();
        p.mass *= 4.0;
        let heavy = natural_units(&p).unwrap();
        assert!((heavy.x0 - base.x0 / 2.0).abs() < 1e-15);
        assert!((heavy.p0 - base.p0 * 2.0).abs() < 1e-14);
        assert!((heavy.x0 * heavy.p0 - HBAR).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_mass() {
        let mut p = SystemParams::reference();
        p.mass = 0.0;
        assert!(natural_units(&p).is_err());
        assert!(p.validate().is_err());
    }

    #[test]
    fn rejects_positive_coupling() {
        let mut p = SystemParams::reference();
        p.quad_coupling = 0.01;
        assert!(p.validate().is_err());
    }

    #[test]
    fn input_power_examples() {
        let flat = Modulation::constant(1260.0).unwrap();
        assert_eq!(flat.input_power(3.7), 1260.0);

        let full = Modulation::new(10.0, 10.0, 2.0).unwrap();
        assert!(full.input_power(PI / 4.0).abs() < 1e-12);

        let m = Modulation::from_ratio(1260.0, 0.2, 1.8).unwrap();
        let t = 1.5 * PI / 1.8;
        assert!((m.input_power(t) - 1512.0).abs() < 1e-9);
    }

    #[test]
    fn amplitude_above_mean_is_rejected() {
        assert!(Modulation::new(1.0, 1.5, 1.0).is_err());
        assert!(Modulation::new(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn period_average_is_mean_power() {
        let m = Modulation::from_ratio(1260.0, 0.7, 1.8).unwrap();
        let period = 2.0 * PI / m.mod_freq;
        // composite Simpson on one period
        let n = 2000;
        let h = period / n as f64;
        let mut s = m.input_power(0.0) + m.input_power(period);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * m.input_power(k as f64 * h);
        }
        let avg = s * h / 3.0 / period;
        assert!((avg - 1260.0).abs() / 1260.0 < 1e-10);
        assert!((m.power_integral(0.0, period) / period - 1260.0).abs() < 1e-9);
        assert!((m.input_power(0.3) - m.input_power(0.3 + period)).abs() < 1e-9);
    }

    #[test]
    fn power_integral_matches_quadrature() {
        let m = Modulation::from_ratio(5.0, 0.4, 3.1).unwrap();
        let (a, b) = (0.37, 1.91);
        let n = 4000;
        let h = (b - a) / n as f64;
        let mut s = m.input_power(a) + m.input_power(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * m.input_power(a + k as f64 * h);
        }
        assert!((s * h / 3.0 - m.power_integral(a, b)).abs() < 1e-10);
    }

    proptest::proptest! {
        #[test]
        fn input_power_never_negative(p0 in 0.0f64..5000.0, ratio in 0.0f64..=1.0,
                                      w in 0.01f64..10.0, t in -1e3f64..1e3) {
            let m = Modulation::from_ratio(p0, ratio, w).unwrap();
            proptest::prop_assert!(m.input_power(t) >= -1e-9 * p0.max(1.0));
        }

        #[test]
        fn natural_units_product_is_hbar(m in 1e-3f64..1e3, w in 1e-3f64..1e3) {
            let mut p = SystemParams::reference();
            p.mass = m;
            p.mech_freq = w;
            let u = natural_units(&p).unwrap();
            proptest::prop_assert!((u.x0 * u.p0 - HBAR).abs() < 1e-12);
        }
    }
}
