// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::DensityMatrixGrid;
use crate::params::HBAR;

/// W(x_i, p_m) stored row major with x as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub values: Vec<f64>,
    pub dx: f64,
    pub dp: f64,
    pub t: f64,
}

impl WignerGrid {
    #[inline]
    pub fn get(&self, i: usize, m: usize) -> f64 {
        self.values[i * self.p.len() + m]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// dx dp Σ W.
    pub fn integral(&self) -> f64 {
        self.dx * self.dp * self.values.iter().sum::<f64>()
    }

    /// ∫ W dp as a function of x.
    pub fn position_marginal(&self) -> Vec<f64> {
        self.values
            .chunks(self.p.len())
            .map(|row| self.dp * row.iter().sum::<f64>())
            .collect()
    }

    /// ∫ W dx as a function of p.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let np = self.p.len();
        (0..np)
            .map(|m| self.dx * (0..self.x.len()).map(|i| self.values[i * np + m]).sum::<f64>())
            .collect()
    }
}

/// W(x, p) = (1/πħ) ∫ ρ(x + y, x − y) e^{−2ipy/ħ} dy.
///
/// With y = k dx both arguments land on grid points, so no interpolation is needed. The sum
/// over k is an FFT of length N, giving p_m = m πħ/(N dx) for m in [−N/2, N/2).
pub fn wigner(rho: &DensityMatrixGrid) -> WignerGrid {
    let n = rho.n();
    let dx = rho.dx();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let half = n / 2;
    let dp = PI * HBAR / (n as f64 * dx);
    let p: Vec<f64> = (0..n).map(|m| (m as f64 - half as f64) * dp).collect();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, w)| {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let kmax = i.min(n - 1 - i);
        buf[0] = rho.get(i, i);
        for k in 1..=kmax {
            buf[k] = rho.get(i + k, i - k);
            buf[n - k] = rho.get(i - k, i + k);
        }
        fft.process(&mut buf);
        for (m, w) in w.iter_mut().enumerate() {
            let idx = (m + n - half) % n;
            *w = dx / (PI * HBAR) * buf[idx].re;
        }
    });
    WignerGrid {
        x: rho.x().to_vec(),
        p,
        values,
        dx,
        dp,
        t: rho.t,
    }
}

/// Momentum distribution ⟨p|ρ|p⟩ over the full Brillouin zone of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumDensity {
    pub p: Vec<f64>,
    pub density: Vec<f64>,
    pub dp: f64,
}

impl MomentumDensity {
    pub fn mean_p2(&self) -> f64 {
        self.dp * self.p.iter().zip(&self.density).map(|(p, d)| p * p * d).sum::<f64>()
    }

    pub fn total(&self) -> f64 {
        self.dp * self.density.iter().sum::<f64>()
    }
}

/// ρ̃(p) = (1/2πħ) ∫∫ e^{−ip(x − x′)/ħ} ρ(x, x′) dx dx′ by a double discrete Fourier sum.
///
/// Sampled at p_m = m πħ/(N dx), m in [−N, N), which contains the Wigner momentum axis.
pub fn momentum_density(rho: &DensityMatrixGrid) -> MomentumDensity {
    let n = rho.n();
    let dx = rho.dx();
    let len = 2 * n;
    let ifft = FftPlanner::new().plan_fft_inverse(len);
    // G_a[m] = Σ_b ρ_ab e^{+2πi m b / 2N}
    let mut g = vec![Complex64::new(0.0, 0.0); n * len];
    g.par_chunks_mut(len).enumerate().for_each(|(a, row)| {
        for b in 0..n {
            row[b] = rho.get(a, b);
        }
        ifft.process(row);
    });
    let twiddle: Vec<Complex64> = (0..len)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
        .collect();
    let scale = dx * dx / (2.0 * PI * HBAR);
    let dp = PI * HBAR / (n as f64 * dx);
    let density: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|mi| {
            let m = (mi + n) % len;
            let s: Complex64 = (0..n).map(|a| twiddle[(m * a) % len] * g[a * len + m]).sum();
            scale * s.re
        })
        .collect();
    let p = (0..len).map(|mi| (mi as f64 - n as f64) * dp).collect();
    MomentumDensity { p, density, dp }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;
    use crate::quantum::{coherent_state_density, ground_state_density, probability_density, GridSpec};

    fn ground() -> DensityMatrixGrid {
        ground_state_density(&SystemParams::reference(), &GridSpec::new(160, 12.0).unwrap()).unwrap()
    }

    #[test]
    fn ground_state_wigner_is_the_gaussian() {
        let w = wigner(&ground());
        let mut worst = 0.0f64;
        for (i, x) in w.x.iter().enumerate() {
            for (m, p) in w.p.iter().enumerate() {
                let exact = (-x * x - p * p).exp() / PI;
                worst = worst.max((w.get(i, m) - exact).abs());
            }
        }
        assert!(worst < 1e-6, "{worst}");
        assert!(w.min() >= -1e-10);
        assert!((w.integral() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn position_marginal_is_the_diagonal() {
        let p = SystemParams::reference();
        let rho = coherent_state_density(&p, &GridSpec::new(120, 12.0).unwrap(), 1.3).unwrap();
        let w = wigner(&rho);
        for (a, b) in w.position_marginal().iter().zip(probability_density(&rho)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn momentum_marginal_matches_spectral_density() {
        let rho = ground();
        let w = wigner(&rho);
        let md = momentum_density(&rho);
        let n = rho.n();
        let marg = w.momentum_marginal();
        for (m, v) in marg.iter().enumerate() {
            // the Wigner axis is the central half of the spectral axis
            let k = m + n / 2;
            assert!((md.p[k] - w.p[m]).abs() < 1e-12);
            assert!((v - md.density[k]).abs() < 1e-6);
        }
        assert!((md.total() - 1.0).abs() < 1e-10);
        assert!((md.mean_p2() - 0.5).abs() < 1e-6);
    }
}
