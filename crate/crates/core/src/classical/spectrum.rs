// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::langevin::Trajectory;
use crate::error::{invalid, Error, Result};

/// Zero-padding factor applied before the FFT.
const PAD: usize = 4;
/// Minimum ratio of the peak power to the median power of the search band.
const PROMINENCE: f64 = 10.0;

/// Angular frequency of the dominant slow oscillation of `x(t)`.
///
/// Samples with `t` inside `window` (all samples when `None`) are detrended by their mean, Hann
/// windowed and zero padded. The strongest spectral line strictly below `cutoff` is located and
/// refined by parabolic interpolation. With `cutoff = None` the whole band up to Nyquist is
/// searched. For a modulated drive pass a cutoff below the lower micromotion sideband, for
/// example Ω/2.
///
/// Samples are assumed uniformly spaced.
pub fn macromotion_frequency(
    traj: &Trajectory,
    window: Option<(f64, f64)>,
    cutoff: Option<f64>,
) -> Result<f64> {
    let (t0, t1) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let xs: Vec<f64> = traj
        .t
        .iter()
        .zip(&traj.x)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(_, x)| *x)
        .collect();
    let n = xs.len();
    if n < 16 {
        return Err(invalid("trajectory", format!("{n} samples in window, need at least 16")));
    }
    let dt = traj.t[1] - traj.t[0];
    if !(dt > 0.0) {
        return Err(invalid("trajectory", "sample times must increase"));
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let len = (PAD * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (k, x) in xs.iter().enumerate() {
        let hann = 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
        buf[k] = Complex64::new((x - mean) * hann, 0.0);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let power: Vec<f64> = buf[..=len / 2].iter().map(|c| c.norm_sqr()).collect();

    let bin_freq = 2.0 * PI / (len as f64 * dt);
    let nyquist = PI / dt;
    let limit = cutoff.unwrap_or(nyquist).min(nyquist);
    // the Hann main lobe of the DC residue spans two unpadded bins
    let lo = 2 * len / n + 1;
    let hi = ((limit / bin_freq).ceil() as usize).min(power.len() - 1);
    let no_peak = || Error::NoSpectralPeak { cutoff: limit };
    if hi <= lo + 2 {
        return Err(no_peak());
    }
    let band = &power[lo..hi];
    let (k_rel, &peak) = band
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(no_peak)?;
    let k = lo + k_rel;
    let mut sorted = band.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let interior = k > lo && k + 1 < hi;
    if !interior || !(peak > PROMINENCE * median) {
        return Err(no_peak());
    }
    let (a, b, c) = (power[k - 1], power[k], power[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Ok((k as f64 + shift) * bin_freq)
}
