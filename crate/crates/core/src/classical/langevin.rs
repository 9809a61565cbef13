// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::MechState;
use crate::params::{Modulation, SystemParams};
use crate::potential::total_force;

/// Stochastic integrator for `m ẍ = F(x, t) − γ p + ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exact Ornstein–Uhlenbeck half steps for friction and noise around a
    /// velocity-Verlet step of the conservative force.
    #[default]
    VelocityVerlet,
    /// First-order Euler–Maruyama, kept as a cross-check.
    EulerMaruyama,
}

/// Friction and thermal kick over `tau`: the exact OU propagator of `dp = −γ p dt + sqrt(2mγkT) dW`.
#[inline]
fn thermostat<R: Rng + ?Sized>(p: f64, params: &SystemParams, tau: f64, rng: &mut R) -> f64 {
    let gamma = params.mech_damping;
    if gamma == 0.0 {
        return p;
    }
    let decay = (-gamma * tau).exp();
    let mut next = decay * p;
    if params.bath_temperature > 0.0 {
        let var = params.mass * params.bath_temperature * (1.0 - decay * decay);
        let z: f64 = rng.sample(StandardNormal);
        next += var.sqrt() * z;
    }
    next
}

/// Advances `state` by `dt`. At zero temperature no random numbers are drawn.
pub fn langevin_step<R: Rng + ?Sized>(
    state: MechState,
    params: &SystemParams,
    modulation: &Modulation,
    dt: f64,
    integrator: Integrator,
    rng: &mut R,
) -> MechState {
    let m = params.mass;
    let t = state.t;
    match integrator {
        Integrator::VelocityVerlet => {
            let mut p = thermostat(state.p, params, 0.5 * dt, rng);
            p += 0.5 * dt * total_force(params, modulation, state.x, t);
            let x = state.x + dt * p / m;
            p += 0.5 * dt * total_force(params, modulation, x, t + dt);
            p = thermostat(p, params, 0.5 * dt, rng);
            MechState { x, p, t: t + dt }
        }
        Integrator::EulerMaruyama => {
            let force = total_force(params, modulation, state.x, t);
            let mut p = state.p + dt * (force - params.mech_damping * state.p);
            if params.mech_damping > 0.0 && params.bath_temperature > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                p += (2.0 * m * params.mech_damping * params.bath_temperature * dt).sqrt() * z;
            }
            MechState {
                x: state.x + dt * state.p / m,
                p,
                t: t + dt,
            }
        }
    }
}

/// Samples of a single trajectory at a fixed stride.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// Time at which the trajectory left the domain or became non-finite.
    pub escaped_at: Option<f64>,
}

impl Trajectory {
    fn push(&mut self, s: &MechState) {
        self.t.push(s.t);
        self.x.push(s.x);
        self.p.push(s.p);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> Option<MechState> {
        let n = self.len();
        (n > 0).then(|| MechState::new(self.x[n - 1], self.p[n - 1], self.t[n - 1]))
    }
}

/// Integrates `n_steps` steps, recording the initial state, every `stride`-th step and the final state.
///
/// Integration stops early when |x| exceeds `x_bound` or the state becomes non-finite.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory<R: Rng + ?Sized>(
    initial: MechState,
    params: &SystemParams,
    modulation: &Modulation,
    dt: f64,
    n_steps: usize,
    stride: usize,
    x_bound: f64,
    integrator: Integrator,
    rng: &mut R,
) -> Trajectory {
    let stride = stride.max(1);
    let mut traj = Trajectory::default();
    let mut s = initial;
    traj.push(&s);
    for step in 1..=n_steps {
        s = langevin_step(s, params, modulation, dt, integrator, rng);
        if !s.is_finite() || s.x.abs() > x_bound {
            traj.escaped_at = Some(s.t);
            break;
        }
        if step % stride == 0 {
            traj.push(&s);
        }
    }
    if traj.escaped_at.is_none() && n_steps % stride != 0 {
        traj.push(&s);
    }
    traj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{effective_frequency, static_potential};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const P0: f64 = 1260.0;

    fn energy(p: &SystemParams, s: &MechState) -> f64 {
        0.5 * s.p * s.p / p.mass + static_potential(p, P0, s.x)
    }

    #[test]
    fn zero_temperature_is_deterministic() {
        let p = SystemParams::reference().with_damping(0.02);
        let m = Modulation::from_ratio(P0, 0.5, 1.8).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        let s0 = MechState::new(0.7, -0.3, 0.0);
        for integrator in [Integrator::VelocityVerlet, Integrator::EulerMaruyama] {
            let ta = run_trajectory(s0, &p, &m, 1e-3, 5000, 50, 60.0, integrator, &mut a);
            let tb = run_trajectory(s0, &p, &m, 1e-3, 5000, 50, 60.0, integrator, &mut b);
            assert_eq!(ta, tb);
        }
    }

    #[test]
    fn undamped_static_energy_conserved() {
        let p = SystemParams::reference();
        let m = Modulation::constant(P0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = MechState::new(0.9, 0.8, 0.0);
        let e0 = energy(&p, &s);
        let mut worst = 0.0f64;
        for _ in 0..100_000 {
            s = langevin_step(s, &p, &m, 1e-3, Integrator::VelocityVerlet, &mut rng);
            worst = worst.max((energy(&p, &s) - e0).abs());
        }
        assert!(worst < 1e-4, "energy drift {worst}");
    }

    #[test]
    fn unstable_origin_grows_like_cosh() {
        let p = SystemParams::reference();
        let m = Modulation::constant(P0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let traj = run_trajectory(
            MechState::new(0.1, 0.0, 0.0),
            &p,
            &m,
            1e-3,
            10_000,
            100,
            60.0,
            Integrator::VelocityVerlet,
            &mut rng,
        );
        // least-squares fit of x(t) = 0.1 cosh(w t) over a scan of w
        let fit = |w: f64| -> f64 {
            traj.t
                .iter()
                .zip(&traj.x)
                .map(|(t, x)| (x - 0.1 * (w * t).cosh()).powi(2))
                .sum()
        };
        let (mut best_w, mut best) = (0.0, f64::INFINITY);
        for k in 0..20_000 {
            let w = 0.05 + k as f64 * 5e-6;
            let r = fit(w);
            if r < best {
                best = r;
                best_w = w;
            }
        }
        let w0 = effective_frequency(&p, P0);
        assert!((w0 - 0.0894).abs() < 1e-4);
        assert!((best_w - w0).abs() < 0.02 * w0, "fit {best_w} vs {w0}");
    }

    #[test]
    fn second_order_convergence() {
        let p = SystemParams::reference().with_damping(0.02);
        let m = Modulation::from_ratio(P0, 1.0, 1.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut end = |dt: f64| {
            let n = (10.0 / dt).round() as usize;
            run_trajectory(
                MechState::new(3.0, 0.5, 0.0),
                &p,
                &m,
                dt,
                n,
                n,
                60.0,
                Integrator::VelocityVerlet,
                &mut rng,
            )
            .last()
            .unwrap()
        };
        let (a, b, c) = (end(0.02), end(0.01), end(0.005));
        let e1 = ((a.x - b.x).powi(2) + (a.p - b.p).powi(2)).sqrt();
        let e2 = ((b.x - c.x).powi(2) + (b.p - c.p).powi(2)).sqrt();
        let order = (e1 / e2).log2();
        assert!(order >= 1.8, "order {order}");
    }

    #[test]
    fn escape_is_flagged() {
        let p = SystemParams::reference();
        let m = Modulation::constant(P0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let traj = run_trajectory(
            MechState::new(5.0, 3.0, 0.0),
            &p,
            &m,
            1e-3,
            100_000,
            100,
            20.0,
            Integrator::VelocityVerlet,
            &mut rng,
        );
        assert!(traj.escaped_at.is_some());
    }
}
