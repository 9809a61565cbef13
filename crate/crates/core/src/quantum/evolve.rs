// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::liouvillian::{Kernel, LindbladCoefficients, Planes};
use super::{moments, DensityMatrixGrid};
use crate::error::{invalid, Error, Result};
use crate::params::{Modulation, SystemParams, HBAR};
use crate::potential::potential_time_integral;

/// Largest admissible time step in units of m dx²/ħ.
pub const DT_SAFETY: f64 = 0.2;

/// Numerical settings and abort thresholds of [`evolve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Time step; defaults to the safety bound `DT_SAFETY · m dx²/ħ`.
    pub dt: Option<f64>,
    pub coefficients: LindbladCoefficients,
    /// Abort when |ρ| on the boundary exceeds this fraction of its peak.
    pub edge_tolerance: f64,
    /// Abort when |Tr ρ − Tr ρ0| exceeds this.
    pub trace_tolerance: f64,
    /// Abort when Tr ρ²/(Tr ρ)² exceeds 1 by more than this.
    pub purity_tolerance: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            dt: None,
            coefficients: LindbladCoefficients::default(),
            edge_tolerance: 1e-8,
            trace_tolerance: 1e-4,
            purity_tolerance: 1e-8,
        }
    }
}

/// Invariant diagnostics of one recorded state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub t: f64,
    pub trace: f64,
    pub purity: f64,
    /// Hermiticity defect before the state was re-symmetrized.
    pub hermiticity_defect: f64,
    pub edge_ratio: f64,
    pub min_diagonal: f64,
    pub mean_x: f64,
    pub mean_x2: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    /// States at the requested record times, in order.
    pub states: Vec<DensityMatrixGrid>,
    pub reports: Vec<StepReport>,
    /// Largest time step used.
    pub dt: f64,
    pub steps: usize,
}

impl Evolution {
    pub fn max_trace_drift(&self, reference: f64) -> f64 {
        self.reports
            .iter()
            .map(|r| (r.trace - reference).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_hermiticity_defect(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.hermiticity_defect)
            .fold(0.0, f64::max)
    }
}

/// Evolves `rho0` from `rho0.t` to `t_end`, returning the states at `record_times`
/// (and at `t_end` if it is not listed).
pub fn evolve(
    rho0: &DensityMatrixGrid,
    params: &SystemParams,
    modulation: &Modulation,
    t_end: f64,
    dt: Option<f64>,
    record_times: &[f64],
) -> Result<Evolution> {
    let opts = EvolveOptions {
        dt,
        ..EvolveOptions::default()
    };
    evolve_with(rho0, params, modulation, t_end, record_times, &opts)
}

/// Strang splitting: exact half steps of the diagonal potential and localization terms
/// around a fourth-order Taylor (RK4) step of the derivative terms.
pub fn evolve_with(
    rho0: &DensityMatrixGrid,
    params: &SystemParams,
    modulation: &Modulation,
    t_end: f64,
    record_times: &[f64],
    opts: &EvolveOptions,
) -> Result<Evolution> {
    params.validate()?;
    modulation.validate()?;
    params.check_adiabatic();
    let t0 = rho0.t;
    if !(t_end >= t0) {
        return Err(invalid("t_end", format!("{t_end} precedes the initial time {t0}")));
    }
    let spec = rho0.spec();
    let dx = spec.dx();
    let dt_bound = DT_SAFETY * params.mass * dx * dx / HBAR;
    let dt_max = opts.dt.unwrap_or(dt_bound);
    if !(dt_max > 0.0) || dt_max > dt_bound * (1.0 + 1e-12) {
        return Err(invalid(
            "dt",
            format!("{dt_max} outside (0, {dt_bound}] = (0, {DT_SAFETY} m dx^2/hbar]"),
        ));
    }
    let mut times: Vec<f64> = Vec::with_capacity(record_times.len() + 1);
    for &t in record_times {
        if !(t >= t0 && t <= t_end) {
            return Err(invalid("record_times", format!("{t} outside [{t0}, {t_end}]")));
        }
        if times.last().is_some_and(|&last| t < last) {
            return Err(invalid("record_times", "must be sorted"));
        }
        times.push(t);
    }
    if times.last().is_none_or(|&last| last < t_end) {
        times.push(t_end);
    }

    let n = spec.n;
    let x = rho0.x().to_vec();
    let kernel = Kernel::new(params, &x, dx, &opts.coefficients);
    let trace0 = rho0.trace();
    let mut rho = Planes::from_complex(n, rho0.values());
    let mut stage = Planes::zeros(n);
    let mut deriv = Planes::zeros(n);
    let mut scratch = Planes::zeros(n);
    let mut phase = vec![Complex64::new(0.0, 0.0); n];
    let mut damp = vec![0.0; n];

    let mut out = Evolution {
        states: Vec::with_capacity(times.len()),
        reports: Vec::with_capacity(times.len()),
        dt: 0.0,
        steps: 0,
    };
    let mut t = t0;
    for &target in &times {
        let span = target - t;
        let steps = if span > 0.0 { (span / dt_max).ceil() as usize } else { 0 };
        let h = if steps > 0 { span / steps as f64 } else { 0.0 };
        out.dt = out.dt.max(h);
        // localization factor over a half step depends only on |i − j|
        for (k, d) in damp.iter_mut().enumerate() {
            let sep = k as f64 * dx;
            *d = (-kernel.localization * sep * sep * 0.5 * h).exp();
        }
        for step in 0..steps {
            let ta = t0_plus(t, h, step);
            let tm = ta + 0.5 * h;
            let tb = t0_plus(t, h, step + 1);
            diagonal_step(&mut rho, &x, params, modulation, &kernel, &damp, &mut phase, ta, tm);
            taylor4(&kernel, h, &mut rho, &mut stage, &mut deriv, &mut scratch);
            diagonal_step(&mut rho, &x, params, modulation, &kernel, &damp, &mut phase, tm, tb);
            let tr = dx * (0..n).map(|i| rho.re[rho.at(i, i)]).sum::<f64>();
            if !tr.is_finite() || (tr - trace0).abs() > opts.trace_tolerance {
                return Err(Error::NumericalAbort {
                    t: tb,
                    reason: format!("trace {tr} drifted from {trace0}"),
                });
            }
            out.steps += 1;
            if out.steps % 2000 == 0 {
                log::debug!("t = {tb:.3}, trace = {tr:.12}");
            }
        }
        t = target;
        let mut state = DensityMatrixGrid::from_values(spec, rho.to_complex(), t)?;
        let defect = state.symmetrize();
        log::debug!("t = {t:.3}: hermiticity defect {defect:.3e} before symmetrization");
        rho = Planes::from_complex(n, state.values());
        let mom = moments(&state);
        let report = StepReport {
            t,
            trace: mom.trace,
            purity: mom.purity,
            hermiticity_defect: defect,
            edge_ratio: state.edge_ratio(),
            min_diagonal: state.min_diagonal(),
            mean_x: mom.mean_x,
            mean_x2: mom.mean_x2,
        };
        check_report(&report, trace0, opts)?;
        log::info!(
            "t = {t:.3}: trace {:.10}, purity {:.6}, <x> {:.4}, <x^2> {:.4}",
            report.trace,
            report.purity,
            report.mean_x,
            report.mean_x2
        );
        out.reports.push(report);
        out.states.push(state);
    }
    Ok(out)
}

#[inline]
fn t0_plus(t: f64, h: f64, k: usize) -> f64 {
    t + h * k as f64
}

fn check_report(r: &StepReport, trace0: f64, opts: &EvolveOptions) -> Result<()> {
    let abort = |reason: String| Err(Error::NumericalAbort { t: r.t, reason });
    if !(r.trace.is_finite() && r.purity.is_finite()) {
        return abort("state became non-finite".into());
    }
    if (r.trace - trace0).abs() > opts.trace_tolerance {
        return abort(format!("trace {} drifted from {trace0}", r.trace));
    }
    let purity = r.purity / (r.trace * r.trace);
    if purity > 1.0 + opts.purity_tolerance {
        return abort(format!("purity {purity} exceeds 1"));
    }
    if r.edge_ratio > opts.edge_tolerance {
        return abort(format!(
            "|rho| at the grid edge is {:.3e} of its peak (limit {:.1e}); enlarge the grid",
            r.edge_ratio, opts.edge_tolerance
        ));
    }
    if r.min_diagonal < -1e-10 {
        log::warn!("t = {}: negative density {:.3e} on the diagonal", r.t, r.min_diagonal);
    }
    Ok(())
}

/// ρ_ij ← ρ_ij exp(−i(Φ_i − Φ_j)) exp(−ℓ (x_i − x_j)² h/2) with Φ_i = ∫ U(x_i, s) ds over [ta, tb].
#[allow(clippy::too_many_arguments)]
fn diagonal_step(
    rho: &mut Planes,
    x: &[f64],
    params: &SystemParams,
    modulation: &Modulation,
    kernel: &Kernel,
    damp: &[f64],
    phase: &mut [Complex64],
    ta: f64,
    tb: f64,
) {
    for (ph, &xi) in phase.iter_mut().zip(x) {
        let action = kernel.potential_scale * potential_time_integral(params, modulation, xi, ta, tb);
        *ph = Complex64::from_polar(1.0, -action);
    }
    let phase: &[Complex64] = phase;
    rho.rows_mut().for_each(|(i, (re, im))| {
            let pi = phase[i];
            for (j, (vr, vi)) in re.iter_mut().zip(im.iter_mut()).enumerate() {
                let f = pi * phase[j].conj() * damp[i.abs_diff(j)];
                let (a, b) = (*vr, *vi);
                *vr = flush(f.re * a - f.im * b);
                *vi = flush(f.re * b + f.im * a);
            }
        });
}

/// Zeroes magnitudes below 1e-200 so the far tails never reach the subnormal range.
#[inline]
fn flush(v: f64) -> f64 {
    if v.abs() < 1e-200 {
        0.0
    } else {
        v
    }
}

/// ρ ← Σ_{k≤4} (hK)^k/k! ρ, evaluated in nested (Horner) form.
fn taylor4(
    kernel: &Kernel,
    h: f64,
    rho: &mut Planes,
    stage: &mut Planes,
    deriv: &mut Planes,
    scratch: &mut Planes,
) {
    stage.copy_from(rho);
    for c in [0.25, 1.0 / 3.0, 0.5, 1.0] {
        kernel.apply(stage, deriv, scratch);
        let a = c * h;
        for (s, (r, d)) in [
            (&mut stage.re, (&rho.re, &deriv.re)),
            (&mut stage.im, (&rho.im, &deriv.im)),
        ] {
            s.par_iter_mut()
                .zip(r.par_iter())
                .zip(d.par_iter())
                .for_each(|((s, r), d)| *s = r + a * d);
        }
    }
    std::mem::swap(rho, stage);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{
        coherent_state_density, ground_state_density, ground_state_wavefunction, GridSpec,
    };

    fn bare() -> Modulation {
        Modulation::constant(0.0).unwrap()
    }

    #[test]
    fn ground_state_survives_short_run() {
        let p = SystemParams::reference();
        let spec = GridSpec::new(128, 10.0).unwrap();
        let rho = ground_state_density(&p, &spec).unwrap();
        let ev = evolve(&rho, &p, &bare(), 5.0, None, &[1.0, 2.5]).unwrap();
        assert_eq!(ev.states.len(), 3);
        assert_eq!(ev.states[2].t, 5.0);
        let psi = ground_state_wavefunction(&p, &spec);
        for s in &ev.states {
            assert!(1.0 - s.fidelity(&psi) < 1e-6);
        }
        assert!(ev.max_trace_drift(1.0) < 1e-12);
        assert!(ev.max_hermiticity_defect() < 1e-12);
    }

    #[test]
    fn mean_position_decays_at_half_gamma() {
        let gamma = 0.02;
        let p = SystemParams::reference().with_damping(gamma);
        let spec = GridSpec::new(160, 12.0).unwrap();
        let rho = coherent_state_density(&p, &spec, 2.0).unwrap();
        let periods: Vec<f64> = (1..=5).map(|k| 2.0 * std::f64::consts::PI * k as f64).collect();
        let ev = evolve(&rho, &p, &bare(), *periods.last().unwrap(), None, &periods).unwrap();
        for r in &ev.reports {
            let rate = -(r.mean_x / 2.0).ln() / r.t;
            assert!((rate - 0.5 * gamma).abs() < 0.05 * 0.5 * gamma, "t {}: rate {rate}", r.t);
            assert!((r.trace - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn parity_is_preserved_under_modulated_drive() {
        let p = SystemParams::reference().with_damping(0.02);
        let m = Modulation::from_ratio(1260.0, 1.0, 1.8).unwrap();
        let spec = GridSpec::new(96, 12.0).unwrap();
        let rho = ground_state_density(&p, &spec).unwrap();
        let ev = evolve(&rho, &p, &m, 2.0, None, &[]).unwrap();
        let last = &ev.states[0];
        assert!(last.parity_defect() < 1e-8 * last.max_abs());
        assert!(ev.reports[0].mean_x.abs() < 1e-6);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let p = SystemParams::reference();
        let spec = GridSpec::new(64, 10.0).unwrap();
        let rho = ground_state_density(&p, &spec).unwrap();
        let bound = DT_SAFETY * spec.dx() * spec.dx();
        assert!(evolve(&rho, &p, &bare(), 1.0, Some(1.01 * bound), &[]).is_err());
        assert!(evolve(&rho, &p, &bare(), 1.0, Some(0.5 * bound), &[]).is_ok());
    }

    #[test]
    fn flipped_localization_aborts_on_purity() {
        let p = SystemParams::reference().with_damping(0.02);
        let spec = GridSpec::new(96, 10.0).unwrap();
        let rho = ground_state_density(&p, &spec).unwrap();
        let opts = EvolveOptions {
            coefficients: LindbladCoefficients {
                localization: -1.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let res = evolve_with(&rho, &p, &bare(), 1.0, &[], &opts);
        assert!(matches!(res, Err(Error::NumericalAbort { .. })), "{res:?}");
    }

    #[test]
    fn leaking_state_aborts_at_edge() {
        let p = SystemParams::reference();
        let m = Modulation::constant(1260.0).unwrap();
        // the ground state rolls off the inverted top of the double well
        let spec = GridSpec::new(96, 9.0).unwrap();
        let rho = ground_state_density(&p, &spec).unwrap();
        let res = evolve(&rho, &p, &m, 60.0, None, &[]);
        assert!(matches!(res, Err(Error::NumericalAbort { .. })), "{res:?}");
    }
}
