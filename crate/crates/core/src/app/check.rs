// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! Small-size invariant battery run by the `check` command.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use super::output::Check;
use crate::classical::{
    integrate_full_cavity, run_trajectory, sample_initial, steady_state_field, EnsembleConfig, Integrator,
    MechState,
};
use crate::error::Result;
use crate::params::{natural_units, Modulation, SystemParams};
use crate::potential::{
    adiabatic_intensity, critical_power, curvature_d, static_curvature, static_force, static_potential,
    stability_threshold, time_averaged_potential,
};
use crate::quantum::{
    coherent_state_density, evolve_with, ground_state_density, liouvillian_apply_with, moments,
    probability_density, wigner, DensityMatrixGrid, EvolveOptions, GridSpec, LindbladCoefficients,
};

/// Fault injection for exercising the battery itself.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CheckOptions {
    /// Reverse the sign of the position-localization term of the master equation.
    pub flip_localization: bool,
}

impl CheckOptions {
    fn coefficients(&self) -> LindbladCoefficients {
        LindbladCoefficients {
            localization: if self.flip_localization { -1.0 } else { 1.0 },
            ..Default::default()
        }
    }
}

/// Runs every check; failures are reported in the returned list rather than as errors.
pub fn run_battery(cfg: &RunConfig, opts: &CheckOptions) -> Result<Vec<Check>> {
    let p = cfg.system_params()?;
    let m = cfg.modulation()?;
    let mut checks = Vec::new();
    potential_checks(&p, m.mean_power, &mut checks);
    classical_checks(&p, m.mean_power, cfg.seed, &mut checks)?;
    quantum_checks(&p, opts, &mut checks)?;
    for c in &checks {
        if c.passed {
            log::info!("pass {}: {}", c.name, c.detail);
        } else {
            log::warn!("FAIL {}: {}", c.name, c.detail);
        }
    }
    Ok(checks)
}

fn richardson_second(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let second = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    (4.0 * second(h) - second(2.0 * h)) / 3.0
}

fn richardson_first(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let first = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * first(h) - first(2.0 * h)) / 3.0
}

fn potential_checks(p: &SystemParams, p0: f64, checks: &mut Vec<Check>) {
    let units = natural_units(p).expect("validated parameters");
    let pc = critical_power(p);
    // the static curvature at the origin changes sign at P_c
    let below = static_curvature(p, pc * (1.0 - 1e-9));
    let above = static_curvature(p, pc * (1.0 + 1e-9));
    checks.push(Check::flag(
        "critical_power_sign_change",
        below > 0.0 && above < 0.0,
        format!("U_s''(0) = {below:.3e} below and {above:.3e} above P_c = {pc}"),
    ));

    let p0 = if p0 > 0.0 { p0 } else { 1.05 * pc };
    let h = 0.01 * units.x0;
    let mut worst = 0.0f64;
    for ratio in [0.0, 0.1, 0.26, 1.0] {
        for w in [1.0, 1.8, 3.0] {
            let m = Modulation::from_ratio(p0, ratio, w * p.mech_freq).expect("valid drive");
            let fd = richardson_second(|x| time_averaged_potential(p, &m, x), 0.0, h);
            let d = curvature_d(p, &m);
            let scale = p.mass * p.mech_freq * p.mech_freq + d.abs();
            worst = worst.max((fd - d).abs() / scale);
        }
    }
    checks.push(Check::at_most("curvature_closed_form_vs_finite_difference", worst, 1e-6));

    let mut worst = 0.0f64;
    let fmax = [1.0, 10.0, 29.9, 45.0]
        .iter()
        .map(|x| static_force(p, p0, x * units.x0).abs())
        .fold(1.0, f64::max);
    for x in [1.0, 10.0, 29.9, 45.0] {
        let x = x * units.x0;
        let fd = -richardson_first(|x| static_potential(p, p0, x), x, h);
        worst = worst.max((fd - static_force(p, p0, x)).abs() / fmax);
    }
    checks.push(Check::at_most("force_is_potential_gradient", worst, 1e-6));

    let thresholds: Vec<f64> = [1.0, 1.8, 3.0]
        .iter()
        .filter_map(|w| stability_threshold(p, p0, w * p.mech_freq).ok().map(|a| a / w))
        .collect();
    if thresholds.len() == 3 {
        let dev = thresholds.iter().map(|s| (s / thresholds[0] - 1.0).abs()).fold(0.0, f64::max);
        checks.push(Check::at_most("threshold_linear_in_omega", dev, 1e-9));
    }
}

fn hamiltonian(p: &SystemParams, p0: f64, s: &MechState) -> f64 {
    0.5 * s.p * s.p / p.mass + static_potential(p, p0, s.x)
}

fn classical_checks(p: &SystemParams, p0: f64, seed: u64, checks: &mut Vec<Check>) -> Result<()> {
    let units = natural_units(p)?;
    let conservative = SystemParams {
        mech_damping: 0.0,
        bath_temperature: 0.0,
        ..*p
    };
    let drive = Modulation::constant(p0)?;
    let dt = 1e-3 / p.mech_freq;
    let n_steps = (100.0 / (p.mech_freq * dt)).round() as usize;
    let start = MechState::new(units.x0, 0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let traj = run_trajectory(
        start,
        &conservative,
        &drive,
        dt,
        n_steps,
        100,
        f64::INFINITY,
        Integrator::VelocityVerlet,
        &mut rng,
    );
    let h0 = hamiltonian(p, p0, &start);
    let drift = traj
        .t
        .iter()
        .zip(&traj.x)
        .zip(&traj.p)
        .map(|((t, x), pv)| (hamiltonian(p, p0, &MechState::new(*x, *pv, *t)) - h0).abs())
        .fold(0.0, f64::max)
        / units.e0;
    checks.push(Check::at_most("energy_conservation_undamped", drift, 1e-4));

    let mut ens = EnsembleConfig::new(p)?;
    ens.n_traj = 10_000;
    ens.seed = seed;
    let energies: Vec<f64> = sample_initial(&ens)
        .iter()
        .map(|s| (0.5 * s.p * s.p / p.mass + 0.5 * p.mass * p.mech_freq.powi(2) * s.x * s.x) / units.e0)
        .collect();
    let n = energies.len() as f64;
    let mean = energies.iter().sum::<f64>() / n;
    let var = energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    checks.push(Check::at_most("initial_energy_z_score", (mean - 0.5).abs() / (var / n).sqrt(), 5.0));

    // full cavity dynamics against the adiabatic intensity along a slow trajectory
    let dt = 0.05 / p.cavity_decay;
    let mut s = MechState::new(5.0 * units.x0, 0.0, 0.0);
    let mut a = steady_state_field(p, p0, s.x);
    let mut worst = 0.0f64;
    let steps = (20.0 / (p.mech_freq * dt)).round() as usize;
    for _ in 0..steps {
        (s, a) = integrate_full_cavity(s, a, &conservative, &drive, dt);
        let exact = adiabatic_intensity(p, p0, s.x);
        worst = worst.max((a.intensity() - exact).abs() / exact);
    }
    checks.push(Check::at_most("adiabatic_intensity_tracking", worst, 1e-2));
    Ok(())
}

fn random_hermitian(spec: GridSpec, seed: u64) -> Result<DensityMatrixGrid> {
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(rng.random::<f64>(), 0.0);
        for j in i + 1..n {
            let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            v[i * n + j] = z;
            v[j * n + i] = z.conj();
        }
    }
    DensityMatrixGrid::from_values(spec, v, 0.0)
}

fn quantum_checks(p: &SystemParams, opts: &CheckOptions, checks: &mut Vec<Check>) -> Result<()> {
    let units = natural_units(p)?;
    let coeff = opts.coefficients();
    let damped = SystemParams {
        mech_damping: 0.02 * p.mech_freq,
        ..*p
    };
    let bare = Modulation::constant(0.0)?;
    let driven = Modulation::from_ratio(1260.0, 1.0, 1.8 * p.mech_freq)?;

    let rho = random_hermitian(GridSpec::new(48, 8.0 * units.x0)?, 7)?;
    let l = liouvillian_apply_with(&rho, &damped, &driven, 0.3, &coeff);
    let scale = l.max_abs().max(1e-300);
    let trace = l.values().iter().step_by(rho.n() + 1).sum::<Complex64>().norm() * rho.dx();
    checks.push(Check::at_most("liouvillian_trace_free", trace / (scale * rho.dx()), 1e-10));
    checks.push(Check::at_most(
        "liouvillian_hermiticity",
        l.hermiticity_defect() / scale,
        1e-10,
    ));

    let spec = GridSpec::new(480, 12.0 * units.x0)?;
    let ground = ground_state_density(&damped, &spec)?;
    let l = liouvillian_apply_with(&ground, &damped, &bare, 0.0, &coeff);
    checks.push(Check::at_most(
        "ground_state_fixed_point",
        l.max_abs() / (ground.max_abs() * damped.mech_damping),
        1e-4,
    ));

    let spec = GridSpec::new(96, 12.0 * units.x0)?;
    let rho0 = coherent_state_density(&damped, &spec, 2.0 * units.x0)?;
    let evolve_opts = EvolveOptions {
        coefficients: coeff,
        ..EvolveOptions::default()
    };
    let period = 2.0 * PI / p.mech_freq;
    match evolve_with(&rho0, &damped, &bare, period, &[], &evolve_opts) {
        Ok(evo) => {
            let last = evo.states.last().expect("final state");
            checks.push(Check::at_most("damped_trace_drift", evo.max_trace_drift(rho0.trace()), 1e-4));
            checks.push(Check::at_most("damped_hermiticity", evo.max_hermiticity_defect(), 1e-9));
            let purity = evo.reports.iter().map(|r| r.purity).fold(0.0, f64::max);
            checks.push(Check::at_most("damped_purity_bound", purity, 1.0 + 1e-8));
            let expected = 2.0 * units.x0 * (-0.5 * damped.mech_damping * period).exp();
            let got = moments(last).mean_x;
            checks.push(Check::at_most("damped_mean_decay", (got / expected - 1.0).abs(), 1e-3));
        }
        Err(e) => checks.push(Check::flag("damped_evolution_completes", false, e.to_string())),
    }

    let ground = ground_state_density(p, &GridSpec::new(160, 12.0 * units.x0)?)?;
    let w = wigner(&ground);
    let mut worst = 0.0f64;
    for (i, x) in w.x.iter().enumerate() {
        for (k, pv) in w.p.iter().enumerate() {
            let (xs, ps) = (x / units.x0, pv / units.p0);
            let exact = (-xs * xs - ps * ps).exp() / (PI * units.x0 * units.p0);
            worst = worst.max((w.get(i, k) - exact).abs() * units.x0 * units.p0);
        }
    }
    checks.push(Check::at_most("wigner_ground_state_gaussian", worst, 1e-6));
    checks.push(Check::at_least("wigner_ground_state_min", w.min() * units.x0 * units.p0, -1e-10));
    let marginal_error = w
        .position_marginal()
        .iter()
        .zip(probability_density(&ground))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        * units.x0;
    checks.push(Check::at_most("wigner_position_marginal", marginal_error, 1e-12));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correct_build_passes_and_flipped_localization_fails() {
        let cfg = RunConfig::default();
        let good = run_battery(&cfg, &CheckOptions::default()).unwrap();
        for c in &good {
            assert!(c.passed, "{} failed: {}", c.name, c.detail);
        }
        let bad = run_battery(&cfg, &CheckOptions { flip_localization: true }).unwrap();
        let failed: Vec<&str> = bad.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert!(!failed.is_empty());
        assert!(failed.contains(&"ground_state_fixed_point"), "{failed:?}");
    }
}
