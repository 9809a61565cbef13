// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::langevin::{run_trajectory, Integrator, Trajectory};
use super::MechState;
use crate::error::{invalid, Error, Result};
use crate::params::{natural_units, Modulation, SystemParams};
use crate::potential::check_modulation_ratio;

/// Binning of the spatial and phase-space histograms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub x_max: f64,
    pub x_bins: usize,
    pub p_max: f64,
    pub p_bins: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            x_max: 60.0,
            x_bins: 240,
            p_max: 25.0,
            p_bins: 200,
        }
    }
}

fn bin_of(v: f64, max: f64, bins: usize) -> Option<usize> {
    if !(v.abs() <= max) {
        return None;
    }
    let k = ((v + max) / (2.0 * max) * bins as f64).floor() as usize;
    Some(k.min(bins - 1))
}

fn centers(max: f64, bins: usize) -> Vec<f64> {
    let w = 2.0 * max / bins as f64;
    (0..bins).map(|k| -max + (k as f64 + 0.5) * w).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub seed: u64,
    pub sigma_x: f64,
    pub sigma_p: f64,
    pub t_end: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub integrator: Integrator,
    pub histogram: HistogramSpec,
    /// Keep every recorded trajectory sample in the result.
    pub keep_trajectories: bool,
}

impl EnsembleConfig {
    /// 1000 trajectories from the bare ground-state Wigner distribution, σ_x = x0/√2, σ_p = p0/√2.
    pub fn new(params: &SystemParams) -> Result<Self> {
        let units = natural_units(params)?;
        Ok(EnsembleConfig {
            n_traj: 1000,
            seed: 0,
            sigma_x: units.x0 / 2f64.sqrt(),
            sigma_p: units.p0 / 2f64.sqrt(),
            t_end: 100.0 / params.mech_freq,
            dt: 1e-3 / params.mech_freq,
            record_stride: 1000,
            integrator: Integrator::default(),
            histogram: HistogramSpec::default(),
            keep_trajectories: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(invalid("n_traj", "must be at least 1"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(invalid("t_end", "must be non-negative"));
        }
        if !(self.sigma_x >= 0.0 && self.sigma_p >= 0.0) {
            return Err(invalid("sigma", "widths must be non-negative"));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be at least 1"));
        }
        let h = &self.histogram;
        if !(h.x_max > 0.0 && h.p_max > 0.0) || h.x_bins == 0 || h.p_bins == 0 {
            return Err(invalid("histogram", "needs positive extents and bin counts"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Independent, reproducible random stream for trajectory `index`.
pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn draw_initial<R: Rng + ?Sized>(cfg: &EnsembleConfig, rng: &mut R) -> MechState {
    let zx: f64 = rng.sample(StandardNormal);
    let zp: f64 = rng.sample(StandardNormal);
    MechState::new(cfg.sigma_x * zx, cfg.sigma_p * zp, 0.0)
}

/// Initial phase-space points, drawn from the same per-trajectory streams as [`run_ensemble`].
pub fn sample_initial(cfg: &EnsembleConfig) -> Vec<MechState> {
    (0..cfg.n_traj)
        .map(|k| draw_initial(cfg, &mut trajectory_rng(cfg.seed, k)))
        .collect()
}

/// Spatial probability per bin for every recorded time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub x_centers: Vec<f64>,
    pub bin_width: f64,
    pub times: Vec<f64>,
    /// `probs[k][i]`: fraction of in-domain trajectories in bin `i` at `times[k]`.
    pub probs: Vec<Vec<f64>>,
}

impl DensityHistogram {
    /// Average of all time slices.
    pub fn time_averaged(&self) -> Vec<f64> {
        let n = self.probs.len().max(1) as f64;
        let mut acc = vec![0.0; self.x_centers.len()];
        for slice in &self.probs {
            for (a, p) in acc.iter_mut().zip(slice) {
                *a += p;
            }
        }
        acc.iter().map(|a| a / n).collect()
    }
}

/// Joint (x, p) probability per bin at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceHistogram {
    pub x_centers: Vec<f64>,
    pub p_centers: Vec<f64>,
    pub dx: f64,
    pub dp: f64,
    pub t: f64,
    /// Row-major over (x, p).
    pub probs: Vec<f64>,
}

impl PhaseSpaceHistogram {
    pub fn prob(&self, ix: usize, ip: usize) -> f64 {
        self.probs[ix * self.p_centers.len() + ip]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub initial: Vec<MechState>,
    /// End states of the trajectories that stayed inside the domain.
    pub final_states: Vec<MechState>,
    pub escaped: usize,
    pub density: DensityHistogram,
    pub phase_space: PhaseSpaceHistogram,
    pub trajectories: Option<Vec<Trajectory>>,
}

impl EnsembleRun {
    pub fn mean_abs_x(&self) -> f64 {
        let n = self.final_states.len().max(1) as f64;
        self.final_states.iter().map(|s| s.x.abs()).sum::<f64>() / n
    }
}

pub fn run_ensemble(
    cfg: &EnsembleConfig,
    params: &SystemParams,
    modulation: &Modulation,
) -> Result<EnsembleRun> {
    cfg.validate()?;
    params.validate()?;
    modulation.validate()?;
    params.check_adiabatic();
    if modulation.is_modulated() {
        check_modulation_ratio(params, modulation);
        if cfg.dt > 0.05 / modulation.mod_freq {
            log::warn!(
                "dt = {} does not resolve the micromotion (want dt <= 0.05/Omega = {})",
                cfg.dt,
                0.05 / modulation.mod_freq
            );
        }
    }
    let n_steps = cfg.n_steps();
    let spec = cfg.histogram;

    let runs: Vec<(MechState, Trajectory)> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|k| {
            let mut rng = trajectory_rng(cfg.seed, k);
            let start = draw_initial(cfg, &mut rng);
            let traj = run_trajectory(
                start,
                params,
                modulation,
                cfg.dt,
                n_steps,
                cfg.record_stride,
                spec.x_max,
                cfg.integrator,
                &mut rng,
            );
            (start, traj)
        })
        .collect();

    let n_slices = n_steps / cfg.record_stride + 1;
    let times: Vec<f64> = (0..n_slices)
        .map(|k| (k * cfg.record_stride) as f64 * cfg.dt)
        .collect();
    let mut counts = vec![vec![0usize; spec.x_bins]; n_slices];
    let mut ps_counts = vec![0usize; spec.x_bins * spec.p_bins];
    let mut final_states = Vec::with_capacity(cfg.n_traj);
    let mut escaped = 0;
    for (_, traj) in &runs {
        for (k, x) in traj.x.iter().enumerate().take(n_slices) {
            if let Some(b) = bin_of(*x, spec.x_max, spec.x_bins) {
                counts[k][b] += 1;
            }
        }
        if traj.escaped_at.is_some() {
            escaped += 1;
            continue;
        }
        let end = traj.last().expect("trajectory has its initial sample");
        let end = MechState::new(end.x, end.p, n_steps as f64 * cfg.dt);
        final_states.push(end);
        if let (Some(ix), Some(ip)) = (
            bin_of(end.x, spec.x_max, spec.x_bins),
            bin_of(end.p, spec.p_max, spec.p_bins),
        ) {
            ps_counts[ix * spec.p_bins + ip] += 1;
        }
    }
    if escaped * 100 > cfg.n_traj {
        return Err(Error::TooManyEscapes {
            escaped,
            total: cfg.n_traj,
        });
    }
    if escaped > 0 {
        log::warn!("{escaped} of {} trajectories escaped", cfg.n_traj);
    }

    let probs = counts
        .into_iter()
        .map(|slice| {
            let total: usize = slice.iter().sum();
            let norm = total.max(1) as f64;
            slice.into_iter().map(|c| c as f64 / norm).collect()
        })
        .collect();
    let ps_total = ps_counts.iter().sum::<usize>().max(1) as f64;

    let (initial, trajectories): (Vec<MechState>, Vec<Trajectory>) = runs.into_iter().unzip();
    Ok(EnsembleRun {
        initial,
        final_states,
        escaped,
        density: DensityHistogram {
            x_centers: centers(spec.x_max, spec.x_bins),
            bin_width: 2.0 * spec.x_max / spec.x_bins as f64,
            times,
            probs,
        },
        phase_space: PhaseSpaceHistogram {
            x_centers: centers(spec.x_max, spec.x_bins),
            p_centers: centers(spec.p_max, spec.p_bins),
            dx: 2.0 * spec.x_max / spec.x_bins as f64,
            dp: 2.0 * spec.p_max / spec.p_bins as f64,
            t: n_steps as f64 * cfg.dt,
            probs: ps_counts.into_iter().map(|c| c as f64 / ps_total).collect(),
        },
        trajectories: cfg.keep_trajectories.then_some(trajectories),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P0: f64 = 1260.0;

    fn cfg(n: usize, t_end: f64) -> EnsembleConfig {
        let mut c = EnsembleConfig::new(&SystemParams::reference()).unwrap();
        c.n_traj = n;
        c.t_end = t_end;
        c.record_stride = 500;
        c
    }

    #[test]
    fn default_widths() {
        let c = EnsembleConfig::new(&SystemParams::reference()).unwrap();
        assert!((c.sigma_x - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((c.sigma_p - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.histogram.x_bins, 240);
    }

    #[test]
    fn sampling_is_reproducible_and_seed_dependent() {
        let mut c = cfg(50, 0.0);
        let a = sample_initial(&c);
        assert_eq!(a, sample_initial(&c));
        c.seed = 7;
        assert_ne!(a, sample_initial(&c));
    }

    #[test]
    fn initial_moments() {
        let c = cfg(100_000, 0.0);
        let s = sample_initial(&c);
        let n = s.len() as f64;
        let mx = s.iter().map(|s| s.x).sum::<f64>() / n;
        let mp = s.iter().map(|s| s.p).sum::<f64>() / n;
        let vx = s.iter().map(|s| (s.x - mx).powi(2)).sum::<f64>() / n;
        let vp = s.iter().map(|s| (s.p - mp).powi(2)).sum::<f64>() / n;
        // standard errors: mean sqrt(0.5/n), variance 0.5 sqrt(2/n)
        let se_mean = (0.5 / n).sqrt();
        let se_var = 0.5 * (2.0 / n).sqrt();
        assert!(mx.abs() < 5.0 * se_mean);
        assert!(mp.abs() < 5.0 * se_mean);
        assert!((vx - 0.5).abs() < 5.0 * se_var);
        assert!((vp - 0.5).abs() < 5.0 * se_var);
    }

    #[test]
    fn identical_config_gives_identical_run() {
        let p = SystemParams::reference().with_damping(0.02);
        let m = Modulation::from_ratio(P0, 1.0, 1.8).unwrap();
        let mut c = cfg(8, 5.0);
        c.keep_trajectories = true;
        let a = run_ensemble(&c, &p, &m).unwrap();
        let b = run_ensemble(&c, &p, &m).unwrap();
        assert_eq!(a.trajectories, b.trajectories);
        assert_eq!(a.density, b.density);
    }

    #[test]
    fn histogram_slices_are_normalized() {
        let p = SystemParams::reference();
        let m = Modulation::constant(P0).unwrap();
        let run = run_ensemble(&cfg(200, 5.0), &p, &m).unwrap();
        assert_eq!(run.density.times.len(), 11);
        for slice in &run.density.probs {
            assert!((slice.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((run.phase_space.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(run.escaped, 0);
    }

    #[test]
    fn escape_rate_above_one_percent_fails() {
        let p = SystemParams::reference();
        let m = Modulation::constant(P0).unwrap();
        let mut c = cfg(100, 100.0);
        c.histogram.x_max = 10.0;
        assert!(matches!(
            run_ensemble(&c, &p, &m),
            Err(Error::TooManyEscapes { .. })
        ));
    }

    #[test]
    fn mirrored_ensemble_is_even() {
        // the force is odd, so a mirrored trajectory is the mirror image of the original
        let p = SystemParams::reference().with_damping(0.02);
        let m = Modulation::from_ratio(P0, 0.2, 1.8).unwrap();
        let c = cfg(1, 30.0);
        let mut rng = trajectory_rng(0, 0);
        for k in 0..20 {
            let x0 = 0.3 * k as f64 - 3.0;
            let p0 = 0.1 * k as f64 - 1.0;
            let a = run_trajectory(
                MechState::new(x0, p0, 0.0), &p, &m, c.dt, 30_000, 1000, 60.0, c.integrator, &mut rng,
            );
            let b = run_trajectory(
                MechState::new(-x0, -p0, 0.0), &p, &m, c.dt, 30_000, 1000, 60.0, c.integrator, &mut rng,
            );
            for (xa, xb) in a.x.iter().zip(&b.x) {
                assert_eq!(*xa, -*xb);
            }
        }
    }
}
