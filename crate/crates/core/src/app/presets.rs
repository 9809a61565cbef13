// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! Bundled run configurations, one per panel.
//!
//! Panel letters (a)–(e) select A/P0 = 0, 0.10, 0.20, 0.26 and 1 at Ω/ω_m = 1.8.
//! `fig11` and `fig12` use panels (a)–(c) for A/P0 = 0, 0.20 and 1.

use crate::error::{Error, Result};

/// A/P0 for the five-panel presets.
pub const PANEL_AMPLITUDES: [(char, f64); 5] =
    [('a', 0.0), ('b', 0.10), ('c', 0.20), ('d', 0.26), ('e', 1.0)];

/// A/P0 for the three-panel presets.
pub const CONTRAST_AMPLITUDES: [(char, f64); 3] = [('a', 0.0), ('b', 0.20), ('c', 1.0)];

const STABILITY_FIG2: &str = r#"
engine = "stability"
[stability]
omega_min = 1.8
omega_max = 1.8
n_omega = 1
amp_min = 0.0
amp_max = 1.0
n_amp = 101
"#;

const STABILITY_FIG5: &str = r#"
engine = "stability"
[stability]
omega_min = 0.5
omega_max = 4.0
n_omega = 36
amp_min = 0.0
amp_max = 1.0
n_amp = 101
"#;

const CLASSICAL_UNDAMPED: &str = r#"
engine = "classical"
system.gamma_over_omega_m = 1e-6
[classical]
n_traj = 1000
t_end = 100.0
dt = 1e-3
record_stride = 1000
"#;

const CLASSICAL_DAMPED: &str = r#"
engine = "classical"
system.gamma_over_omega_m = 2e-2
[classical]
n_traj = 1000
t_end = 300.0
dt = 1e-3
record_stride = 1000
"#;

const QUANTUM_UNDAMPED: &str = r#"
engine = "quantum"
system.gamma_over_omega_m = 1e-6
[quantum]
n = 320
half_width = 50.0
t_end = 100.0
record_times = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0]
wigner_times = [100.0]
"#;

const QUANTUM_DAMPED: &str = r#"
engine = "quantum"
system.gamma_over_omega_m = 2e-2
[quantum]
n = 480
half_width = 60.0
t_end = 300.0
record_times = [25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0, 225.0, 250.0, 275.0, 300.0]
wigner_times = [100.0, 300.0]
"#;

/// `fig11`: no damping at all, classical ensemble and Wigner function at ω_m t = 100.
const CONTRAST_UNDAMPED: &str = r#"
system.gamma_over_omega_m = 0.0
[classical]
n_traj = 1000
t_end = 100.0
dt = 1e-3
record_stride = 1000
[quantum]
n = 320
half_width = 50.0
t_end = 100.0
record_times = [25.0, 50.0, 75.0, 100.0]
wigner_times = [100.0]
"#;

/// `fig12`: the damped counterpart at ω_m t = 300.
const CONTRAST_DAMPED: &str = r#"
system.gamma_over_omega_m = 2e-2
[classical]
n_traj = 1000
t_end = 300.0
dt = 1e-3
record_stride = 1000
[quantum]
n = 480
half_width = 60.0
t_end = 300.0
record_times = [100.0, 200.0, 300.0]
wigner_times = [300.0]
"#;

/// Bare oscillator started in its ground state; evolution should leave it unchanged.
const GROUND: &str = r#"
engine = "quantum"
modulation.P0_over_E0_omegaL = 0.0
system.gamma_over_omega_m = 0.0
[quantum]
n = 320
half_width = 25.0
t_end = 100.0
record_times = [50.0, 100.0]
wigner_times = [100.0]
"#;

/// Every bundled preset name.
pub fn names() -> Vec<String> {
    let mut out = vec!["fig2".to_string(), "fig5".to_string()];
    for fig in [7, 8, 9, 10] {
        for (label, _) in PANEL_AMPLITUDES {
            out.push(format!("fig{fig}{label}"));
        }
    }
    for fig in [11, 12] {
        out.push(format!("fig{fig}"));
        for (label, _) in CONTRAST_AMPLITUDES {
            out.push(format!("fig{fig}{label}"));
        }
    }
    out.push("ground".to_string());
    out
}

fn parse(text: &str) -> toml::Table {
    toml::from_str(text).expect("bundled presets are valid TOML")
}

fn with_amplitude(text: &str, a_over_p0: f64) -> toml::Table {
    let mut table = parse(text);
    let mut modulation = toml::Table::new();
    modulation.insert("A_over_P0".into(), toml::Value::Float(a_over_p0));
    table.insert("modulation".into(), toml::Value::Table(modulation));
    table
}

fn panel(panels: &[(char, f64)], label: &str) -> Option<f64> {
    let mut chars = label.chars();
    let c = chars.next()?;
    if chars.next().is_some() {
        return None;
    }
    panels.iter().find(|(l, _)| *l == c).map(|(_, a)| *a)
}

/// The configuration table for a preset, to be overlaid by a user file.
pub fn preset(name: &str) -> Result<toml::Table> {
    let unknown = || Error::Config {
        key: "preset".into(),
        reason: format!("unknown preset '{name}'; available: {}", names().join(", ")),
    };
    match name {
        "fig2" => return Ok(parse(STABILITY_FIG2)),
        "fig5" => return Ok(parse(STABILITY_FIG5)),
        "fig11" => return preset("fig11a"),
        "fig12" => return preset("fig12a"),
        "ground" => return Ok(parse(GROUND)),
        _ => {}
    }
    let digits: String = name.strip_prefix("fig").ok_or_else(unknown)?.chars().take_while(char::is_ascii_digit).collect();
    let label = &name[3 + digits.len()..];
    let (base, panels): (&str, &[(char, f64)]) = match digits.as_str() {
        "7" => (CLASSICAL_UNDAMPED, &PANEL_AMPLITUDES),
        "8" => (CLASSICAL_DAMPED, &PANEL_AMPLITUDES),
        "9" => (QUANTUM_UNDAMPED, &PANEL_AMPLITUDES),
        "10" => (QUANTUM_DAMPED, &PANEL_AMPLITUDES),
        "11" => (CONTRAST_UNDAMPED, &CONTRAST_AMPLITUDES),
        "12" => (CONTRAST_DAMPED, &CONTRAST_AMPLITUDES),
        _ => return Err(unknown()),
    };
    let a = panel(panels, label).ok_or_else(unknown)?;
    Ok(with_amplitude(base, a))
}
