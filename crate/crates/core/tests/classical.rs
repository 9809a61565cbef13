// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use optokap::classical::{
    integrate_full_cavity, macromotion_frequency, run_ensemble, run_trajectory, sample_initial,
    steady_state_field, EnsembleConfig, Integrator, MechState,
};
use optokap::potential::{adiabatic_intensity, curvature_d, static_curvature};
use optokap::{Modulation, SystemParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const P0: f64 = 1260.0;

fn trajectory(p: &SystemParams, m: &Modulation, x0: f64, t_end: f64, dt: f64, stride: usize) -> optokap::classical::Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let n = (t_end / dt).round() as usize;
    run_trajectory(MechState::new(x0, 0.0, 0.0), p, m, dt, n, stride, f64::INFINITY, Integrator::VelocityVerlet, &mut rng)
}

#[test]
fn initial_energy_follows_exponential_law() {
    let p = SystemParams::reference();
    let mut cfg = EnsembleConfig::new(&p).unwrap();
    cfg.n_traj = 100_000;
    cfg.seed = 77;
    let mut e: Vec<f64> = sample_initial(&cfg).iter().map(|s| 0.5 * (s.x * s.x + s.p * s.p)).collect();
    e.sort_by(f64::total_cmp);
    let n = e.len() as f64;
    let d = e
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let cdf = 1.0 - (-2.0 * v).exp();
            (cdf - k as f64 / n).abs().max(((k + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.6276 / n.sqrt(), "KS distance {d}");
    let mean = e.iter().sum::<f64>() / n;
    assert!((mean - 0.5).abs() < 5.0 * 0.5 / n.sqrt(), "{mean}");
}

#[test]
fn thermal_momentum_variance_matches_bath_temperature() {
    // drive off: a pure damped oscillator in contact with the bath
    let kt = 2.0;
    let p = SystemParams::reference().with_damping(0.2).with_temperature(kt);
    let m = Modulation::constant(0.0).unwrap();
    let mut cfg = EnsembleConfig::new(&p).unwrap();
    cfg.n_traj = 10_000;
    cfg.seed = 5;
    cfg.t_end = 60.0;
    cfg.dt = 0.01;
    cfg.record_stride = 6000;
    let run = run_ensemble(&cfg, &p, &m).unwrap();
    assert_eq!(run.escaped, 0);
    let n = run.final_states.len() as f64;
    let p2 = run.final_states.iter().map(|s| s.p * s.p).sum::<f64>() / n;
    let x2 = run.final_states.iter().map(|s| s.x * s.x).sum::<f64>() / n;
    assert!((p2 / kt - 1.0).abs() < 0.05, "<p^2>/m = {p2}");
    assert!((x2 / kt - 1.0).abs() < 0.05, "m w^2 <x^2> = {x2}");
}

#[test]
fn macromotion_frequency_matches_curvature_criterion() {
    let p = SystemParams::reference();
    let m = Modulation::from_ratio(P0, 1.0, 1.8).unwrap();
    let traj = trajectory(&p, &m, 2.0, 400.0, 1e-3, 20);
    let measured = macromotion_frequency(&traj, None, Some(0.9)).unwrap();
    let predicted = curvature_d(&p, &m).sqrt();
    assert!((predicted - 0.3857).abs() < 1e-3);
    assert!((measured / predicted - 1.0).abs() < 0.10, "{measured} vs {predicted}");
}

#[test]
fn macromotion_frequency_harmonic_limits() {
    let p = SystemParams::reference();
    let below = Modulation::constant(625.0).unwrap();
    let traj = trajectory(&p, &below, 0.5, 400.0, 1e-3, 20);
    let measured = macromotion_frequency(&traj, None, None).unwrap();
    let predicted = static_curvature(&p, 625.0).sqrt();
    assert!((measured / predicted - 1.0).abs() < 0.05, "{measured} vs {predicted}");

    let bare = Modulation::constant(0.0).unwrap();
    let traj = trajectory(&p, &bare, 0.5, 400.0, 1e-3, 20);
    let measured = macromotion_frequency(&traj, None, None).unwrap();
    assert!((measured - 1.0).abs() < 0.01, "{measured}");
}

/// Largest relative gap between the full-cavity intensity and the adiabatic one.
fn adiabatic_error(p: &SystemParams, m: &Modulation, t_end: f64) -> f64 {
    let dt = 0.05 / p.cavity_decay;
    let mut s = MechState::new(5.0, 0.0, 0.0);
    let mut a = steady_state_field(p, m.input_power(0.0), s.x);
    let mut worst = 0.0f64;
    for _ in 0..(t_end / dt).round() as usize {
        (s, a) = integrate_full_cavity(s, a, p, m, dt);
        let exact = adiabatic_intensity(p, m.input_power(s.t), s.x);
        worst = worst.max((a.intensity() - exact).abs() / a.intensity());
    }
    worst
}

#[test]
fn full_cavity_tracks_adiabatic_intensity() {
    let p = SystemParams::reference();
    for ratio in [0.0, 0.2] {
        let m = Modulation::from_ratio(P0, ratio, 1.8).unwrap();
        let err = adiabatic_error(&p, &m, 20.0);
        assert!(err < 0.01, "A/P0 = {ratio}: {err}");
    }
}

#[test]
fn adiabatic_error_scales_with_inverse_kappa() {
    for kappa in [100.0, 200.0, 400.0] {
        let p = SystemParams::dimensionless(kappa, 0.0, -0.01, 0.0);
        // same distance above threshold as the reference drive
        let pc = kappa / (16.0 * 0.01);
        let m = Modulation::from_ratio(1.008 * pc, 0.2, 1.8).unwrap();
        let err = adiabatic_error(&p, &m, 20.0);
        assert!(err <= 5.0 / kappa, "kappa = {kappa}: {err}");
    }
}

#[test]
fn undamped_static_ensemble_is_centred_and_spans_both_wells() {
    let p = SystemParams::reference().with_damping(1e-6);
    let m = Modulation::constant(P0).unwrap();
    let mut cfg = EnsembleConfig::new(&p).unwrap();
    cfg.seed = 1;
    let run = run_ensemble(&cfg, &p, &m).unwrap();
    let avg = run.density.time_averaged();
    let x = &run.density.x_centers;
    let mid = avg.len() / 2;
    let centre = 0.5 * (avg[mid - 1] + avg[mid]);
    let shoulder = |lo: f64, hi: f64| {
        let sel: Vec<f64> = x.iter().zip(&avg).filter(|(x, _)| x.abs() >= lo && x.abs() < hi).map(|(_, v)| *v).collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    assert!(centre > shoulder(2.0, 8.0), "centre {centre} vs shoulder {}", shoulder(2.0, 8.0));
    let mass = |lo: f64, hi: f64| x.iter().zip(&avg).filter(|(x, _)| **x >= lo && **x < hi).map(|(_, v)| v).sum::<f64>();
    assert!(mass(-35.0, -25.0) > 0.01 && mass(25.0, 35.0) > 0.01);
}

#[test]
fn damped_strong_modulation_collects_at_the_centre() {
    let p = SystemParams::reference().with_damping(2e-2);
    let m = Modulation::from_ratio(P0, 1.0, 1.8).unwrap();
    let mut cfg = EnsembleConfig::new(&p).unwrap();
    cfg.n_traj = 200;
    cfg.t_end = 300.0;
    let run = run_ensemble(&cfg, &p, &m).unwrap();
    assert!(run.mean_abs_x() < 3.0, "{}", run.mean_abs_x());
}
