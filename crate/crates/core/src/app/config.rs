// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a TOML document with dotted keys, resolved into engine inputs.
//!
//! Times are given in units of 1/ω_m, lengths in x0 and momenta in p0.

use serde::{Deserialize, Serialize};

use crate::classical::{EnsembleConfig, HistogramSpec, Integrator};
use crate::error::{Error, Result};
use crate::params::{natural_units, Modulation, SystemParams};
use crate::quantum::GridSpec;

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Which engine a configuration is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Stability,
    Classical,
    Quantum,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Stability => "stability",
            Engine::Classical => "classical",
            Engine::Quantum => "quantum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub omega_m: f64,
    pub mass: f64,
    pub kappa_over_omega_m: f64,
    pub detuning_over_omega_m: f64,
    pub g2_x0sq_over_omega_m: f64,
    pub gamma_over_omega_m: f64,
    #[serde(rename = "kT_over_E0")]
    pub kt_over_e0: f64,
    pub laser_freq_over_omega_m: f64,
    pub adiabatic_guard: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            omega_m: 1.0,
            mass: 1.0,
            kappa_over_omega_m: 200.0,
            detuning_over_omega_m: 0.0,
            g2_x0sq_over_omega_m: -0.01,
            gamma_over_omega_m: 0.0,
            kt_over_e0: 0.0,
            laser_freq_over_omega_m: 1.0,
            adiabatic_guard: SystemParams::DEFAULT_ADIABATIC_GUARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationSection {
    #[serde(rename = "P0_over_E0_omegaL")]
    pub p0: f64,
    #[serde(rename = "A_over_P0")]
    pub a_over_p0: f64,
    #[serde(rename = "Omega_over_omega_m")]
    pub omega_over_omega_m: f64,
}

impl Default for ModulationSection {
    fn default() -> Self {
        ModulationSection {
            p0: 1260.0,
            a_over_p0: 0.0,
            omega_over_omega_m: 1.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalSection {
    pub n_traj: usize,
    pub t_end: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub integrator: Integrator,
    /// Initial widths; default x0/√2 and p0/√2.
    pub sigma_x: Option<f64>,
    pub sigma_p: Option<f64>,
    pub x_max: f64,
    pub x_bins: usize,
    pub p_max: f64,
    pub p_bins: usize,
    /// Write every recorded sample of every trajectory.
    pub write_trajectories: bool,
}

impl Default for ClassicalSection {
    fn default() -> Self {
        let h = HistogramSpec::default();
        ClassicalSection {
            n_traj: 1000,
            t_end: 100.0,
            dt: 1e-3,
            record_stride: 1000,
            integrator: Integrator::default(),
            sigma_x: None,
            sigma_p: None,
            x_max: h.x_max,
            x_bins: h.x_bins,
            p_max: h.p_max,
            p_bins: h.p_bins,
            write_trajectories: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumSection {
    pub n: usize,
    pub half_width: f64,
    pub t_end: f64,
    /// Time step; defaults to the stability bound 0.2 m dx²/ħ.
    pub dt: Option<f64>,
    /// Times at which P(x) and moments are written.
    pub record_times: Vec<f64>,
    /// Times at which the Wigner function is written; each must also be a record time.
    pub wigner_times: Vec<f64>,
    /// Centre of the initial displaced ground state.
    pub initial_offset: f64,
    pub edge_tolerance: f64,
}

impl Default for QuantumSection {
    fn default() -> Self {
        let g = GridSpec::default();
        QuantumSection {
            n: g.n,
            half_width: g.half_width,
            t_end: 100.0,
            dt: None,
            record_times: vec![],
            wigner_times: vec![],
            initial_offset: 0.0,
            edge_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub amp_min: f64,
    pub amp_max: f64,
    pub n_amp: usize,
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection {
            omega_min: 0.5,
            omega_max: 4.0,
            n_omega: 36,
            amp_min: 0.0,
            amp_max: 1.0,
            n_amp: 101,
        }
    }
}

/// The full configuration document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Engine this configuration targets; when set it must match the command.
    pub engine: Option<Engine>,
    pub seed: u64,
    pub system: SystemSection,
    pub modulation: ModulationSection,
    pub classical: ClassicalSection,
    pub quantum: QuantumSection,
    pub stability: StabilitySection,
}

/// Keys accepted in each table, for precise unknown-key diagnostics.
const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["engine", "seed", "system", "modulation", "classical", "quantum", "stability"]),
    (
        "system",
        &[
            "omega_m",
            "mass",
            "kappa_over_omega_m",
            "detuning_over_omega_m",
            "g2_x0sq_over_omega_m",
            "gamma_over_omega_m",
            "kT_over_E0",
            "laser_freq_over_omega_m",
            "adiabatic_guard",
        ],
    ),
    ("modulation", &["P0_over_E0_omegaL", "A_over_P0", "Omega_over_omega_m"]),
    (
        "classical",
        &[
            "n_traj",
            "t_end",
            "dt",
            "record_stride",
            "integrator",
            "sigma_x",
            "sigma_p",
            "x_max",
            "x_bins",
            "p_max",
            "p_bins",
            "write_trajectories",
        ],
    ),
    (
        "quantum",
        &[
            "n",
            "half_width",
            "t_end",
            "dt",
            "record_times",
            "wigner_times",
            "initial_offset",
            "edge_tolerance",
        ],
    ),
    ("stability", &["omega_min", "omega_max", "n_omega", "amp_min", "amp_max", "n_amp"]),
];

fn check_keys(table: &toml::Table) -> Result<()> {
    for (key, value) in table {
        let allowed = SCHEMA.iter().find(|(t, _)| t.is_empty()).expect("root schema").1;
        if !allowed.contains(&key.as_str()) {
            return Err(config_err(key, "unknown key"));
        }
        let Some((_, fields)) = SCHEMA.iter().find(|(t, _)| *t == key) else {
            continue;
        };
        let Some(sub) = value.as_table() else {
            return Err(config_err(key, "expected a table"));
        };
        for sub_key in sub.keys() {
            if !fields.contains(&sub_key.as_str()) {
                return Err(config_err(&format!("{key}.{sub_key}"), "unknown key"));
            }
        }
    }
    Ok(())
}

/// Recursively overlays `top` onto `base`.
pub fn merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Finds the dotted path of a deserialization error by re-deserializing each section alone.
fn locate(table: &toml::Table) -> Option<String> {
    for (section, value) in table {
        let Some(sub) = value.as_table() else { continue };
        for key in sub.keys() {
            let mut probe = toml::Table::new();
            let mut one = toml::Table::new();
            one.insert(key.clone(), sub[key].clone());
            probe.insert(section.clone(), toml::Value::Table(one));
            if toml::Value::Table(probe).try_into::<RunConfig>().is_err() {
                return Some(format!("{section}.{key}"));
            }
        }
    }
    None
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| config_err("<document>", e.message().to_string()))?;
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        check_keys(&table)?;
        let cfg: RunConfig = toml::Value::Table(table.clone()).try_into().map_err(|e: toml::de::Error| {
            let key = locate(&table).unwrap_or_else(|| "<document>".into());
            config_err(&key, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML rendering of the fully resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let s = &self.system;
        let w = s.omega_m;
        let mut p = SystemParams {
            mech_freq: w,
            mass: s.mass,
            cavity_decay: s.kappa_over_omega_m * w,
            mech_damping: s.gamma_over_omega_m * w,
            detuning: s.detuning_over_omega_m * w,
            quad_coupling: 0.0,
            laser_freq: s.laser_freq_over_omega_m * w,
            bath_temperature: 0.0,
            adiabatic_guard: s.adiabatic_guard,
        };
        let units = natural_units(&p).map_err(|e| config_err("system.omega_m", e.to_string()))?;
        p.quad_coupling = s.g2_x0sq_over_omega_m * w / (units.x0 * units.x0);
        p.bath_temperature = s.kt_over_e0 * units.e0;
        Ok(p)
    }

    pub fn modulation(&self) -> Result<Modulation> {
        let m = &self.modulation;
        Modulation::from_ratio(m.p0, m.a_over_p0, m.omega_over_omega_m * self.system.omega_m)
            .map_err(|e| config_err("modulation", e.to_string()))
    }

    pub fn ensemble(&self) -> Result<EnsembleConfig> {
        let p = self.system_params()?;
        let c = &self.classical;
        let w = self.system.omega_m;
        let mut e = EnsembleConfig::new(&p)?;
        e.n_traj = c.n_traj;
        e.seed = self.seed;
        e.t_end = c.t_end / w;
        e.dt = c.dt / w;
        e.record_stride = c.record_stride;
        e.integrator = c.integrator;
        let units = natural_units(&p)?;
        if let Some(sx) = c.sigma_x {
            e.sigma_x = sx * units.x0;
        }
        if let Some(sp) = c.sigma_p {
            e.sigma_p = sp * units.p0;
        }
        e.histogram = HistogramSpec {
            x_max: c.x_max * units.x0,
            x_bins: c.x_bins,
            p_max: c.p_max * units.p0,
            p_bins: c.p_bins,
        };
        e.keep_trajectories = c.write_trajectories;
        Ok(e)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let units = natural_units(&self.system_params()?)?;
        GridSpec::new(self.quantum.n, self.quantum.half_width * units.x0)
            .map_err(|e| config_err("quantum.n", e.to_string()))
    }

    /// Checks every value against the guards of the modules it feeds, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(key, format!("must be positive, got {v}")))
            }
        };
        let non_negative = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(key, format!("must be non-negative, got {v}")))
            }
        };
        positive("system.omega_m", s.omega_m)?;
        positive("system.mass", s.mass)?;
        positive("system.kappa_over_omega_m", s.kappa_over_omega_m)?;
        positive("system.laser_freq_over_omega_m", s.laser_freq_over_omega_m)?;
        non_negative("system.gamma_over_omega_m", s.gamma_over_omega_m)?;
        non_negative("system.kT_over_E0", s.kt_over_e0)?;
        positive("system.adiabatic_guard", s.adiabatic_guard)?;
        if !s.detuning_over_omega_m.is_finite() {
            return Err(config_err("system.detuning_over_omega_m", "must be finite"));
        }
        if !(s.g2_x0sq_over_omega_m < 0.0) || !s.g2_x0sq_over_omega_m.is_finite() {
            return Err(config_err(
                "system.g2_x0sq_over_omega_m",
                format!("must be negative, got {}", s.g2_x0sq_over_omega_m),
            ));
        }

        let m = &self.modulation;
        non_negative("modulation.P0_over_E0_omegaL", m.p0)?;
        if !(0.0..=1.0).contains(&m.a_over_p0) {
            return Err(config_err(
                "modulation.A_over_P0",
                format!("must lie in [0, 1] so the input power stays non-negative, got {}", m.a_over_p0),
            ));
        }
        if m.a_over_p0 > 0.0 {
            positive("modulation.Omega_over_omega_m", m.omega_over_omega_m)?;
        } else {
            non_negative("modulation.Omega_over_omega_m", m.omega_over_omega_m)?;
        }

        let c = &self.classical;
        if c.n_traj == 0 {
            return Err(config_err("classical.n_traj", "must be at least 1"));
        }
        positive("classical.t_end", c.t_end)?;
        positive("classical.dt", c.dt)?;
        if c.record_stride == 0 {
            return Err(config_err("classical.record_stride", "must be at least 1"));
        }
        if let Some(v) = c.sigma_x {
            non_negative("classical.sigma_x", v)?;
        }
        if let Some(v) = c.sigma_p {
            non_negative("classical.sigma_p", v)?;
        }
        positive("classical.x_max", c.x_max)?;
        positive("classical.p_max", c.p_max)?;
        if c.x_bins == 0 {
            return Err(config_err("classical.x_bins", "must be at least 1"));
        }
        if c.p_bins == 0 {
            return Err(config_err("classical.p_bins", "must be at least 1"));
        }

        let q = &self.quantum;
        if q.n < 8 {
            return Err(config_err("quantum.n", format!("need at least 8 points, got {}", q.n)));
        }
        positive("quantum.half_width", q.half_width)?;
        non_negative("quantum.t_end", q.t_end)?;
        if let Some(dt) = q.dt {
            positive("quantum.dt", dt)?;
            let dx = 2.0 * q.half_width / q.n as f64;
            let bound = crate::quantum::DT_SAFETY * dx * dx;
            if dt > bound {
                return Err(config_err(
                    "quantum.dt",
                    format!("{dt} exceeds the stability bound {bound:.4e} (0.2 dx^2 in scaled units)"),
                ));
            }
        }
        let mut last = 0.0;
        for &t in &q.record_times {
            if !(t >= last && t <= q.t_end) {
                return Err(config_err(
                    "quantum.record_times",
                    format!("must be sorted and within [0, t_end], found {t}"),
                ));
            }
            last = t;
        }
        for &t in &q.wigner_times {
            if !(q.record_times.contains(&t) || t == q.t_end) {
                return Err(config_err(
                    "quantum.wigner_times",
                    format!("{t} is neither a record time nor t_end"),
                ));
            }
        }
        if q.half_width - q.initial_offset.abs() < 8.0 {
            return Err(config_err(
                "quantum.half_width",
                "the grid must extend at least 8 x0 beyond the initial state",
            ));
        }
        positive("quantum.edge_tolerance", q.edge_tolerance)?;

        let st = &self.stability;
        positive("stability.omega_min", st.omega_min)?;
        if !(st.omega_max >= st.omega_min) {
            return Err(config_err("stability.omega_max", "must not be below omega_min"));
        }
        non_negative("stability.amp_min", st.amp_min)?;
        if !(st.amp_max >= st.amp_min && st.amp_max <= 1.0) {
            return Err(config_err("stability.amp_max", "must lie in [amp_min, 1]"));
        }
        if st.n_omega == 0 {
            return Err(config_err("stability.n_omega", "must be at least 1"));
        }
        if st.n_amp < 2 {
            return Err(config_err("stability.n_amp", "must be at least 2"));
        }
        Ok(())
    }
}
