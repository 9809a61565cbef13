// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! Reduced mechanical density matrix ρ(x, x′) on a uniform grid.
//!
//! The master equation is the T = 0 Brownian-motion equation in position
//! representation. Its damping, diffusion and localization terms together are
//! γ D[b] with b the lowering operator of the bare trap, and the grid version
//! keeps that Lindblad structure with b replaced by `(√(mω_m/2) X + D1/√(2mω_m))`,
//! where `D1` is the fourth-order first-derivative matrix. Trace preservation
//! and Hermiticity then hold exactly at the stencil level.
//!
//! The grid is cell centred, `x_i = −L + (i + ½) dx` with `dx = 2L/N`, so it is
//! symmetric about the origin and parity is preserved to rounding. Values
//! outside the grid are zero.

mod evolve;
mod liouvillian;
mod wigner;

pub use evolve::{evolve, evolve_with, DT_SAFETY, EvolveOptions, Evolution, StepReport};
pub use liouvillian::{liouvillian_apply, liouvillian_apply_with, potential_on_grid, LindbladCoefficients};
pub use wigner::{momentum_density, wigner, MomentumDensity, WignerGrid};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::params::{natural_units, SystemParams};

/// Grid resolution and extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of points N.
    pub n: usize,
    /// Half width L of the domain [−L, L].
    pub half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n: 480,
            half_width: 60.0,
        }
    }
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        let spec = GridSpec { n, half_width };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(invalid("grid.n", format!("{} points, need at least 8", self.n)));
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(invalid("grid.half_width", "must be positive"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n)
            .map(|i| -self.half_width + (i as f64 + 0.5) * dx)
            .collect()
    }
}

/// ρ(x_i, x_j) stored row major: row index `i` is x, column index `j` is x′.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixGrid {
    spec: GridSpec,
    x: Vec<f64>,
    values: Vec<Complex64>,
    pub t: f64,
}

impl DensityMatrixGrid {
    /// Wraps raw values. `values.len()` must be `spec.n²`.
    pub fn from_values(spec: GridSpec, values: Vec<Complex64>, t: f64) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.n * spec.n {
            return Err(invalid(
                "values",
                format!("expected {} entries, got {}", spec.n * spec.n, values.len()),
            ));
        }
        Ok(DensityMatrixGrid {
            spec,
            x: spec.positions(),
            values,
            t,
        })
    }

    /// |ψ⟩⟨ψ| for a wave function sampled on the grid, normalized so that dx Σ |ψ|² = 1.
    pub fn from_pure_state(spec: GridSpec, psi: &[Complex64], t: f64) -> Result<Self> {
        spec.validate()?;
        if psi.len() != spec.n {
            return Err(invalid("psi", format!("expected {} samples", spec.n)));
        }
        let norm = (spec.dx() * psi.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(invalid("psi", "wave function has zero or non-finite norm"));
        }
        let psi: Vec<Complex64> = psi.iter().map(|c| c / norm).collect();
        let mut values = vec![Complex64::new(0.0, 0.0); spec.n * spec.n];
        values
            .par_chunks_mut(spec.n)
            .zip(psi.par_iter())
            .for_each(|(row, a)| {
                for (v, b) in row.iter_mut().zip(&psi) {
                    *v = a * b.conj();
                }
            });
        Self::from_values(spec, values, t)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn dx(&self) -> f64 {
        self.spec.dx()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.spec.n + j]
    }

    /// dx Σ_i ρ(x_i, x_i).
    pub fn trace(&self) -> f64 {
        let n = self.n();
        self.dx() * (0..n).map(|i| self.values[i * n + i].re).sum::<f64>()
    }

    /// Tr ρ² = dx² Σ_ij ρ_ij ρ_ji.
    pub fn purity(&self) -> f64 {
        let n = self.n();
        let sum: f64 = self
            .values
            .par_chunks(n)
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| (v * self.values[j * n + i]).re)
                    .sum::<f64>()
            })
            .sum();
        self.dx() * self.dx() * sum
    }

    /// max |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n();
        (0..n)
            .into_par_iter()
            .map(|i| {
                (i..n)
                    .map(|j| (self.values[i * n + j] - self.values[j * n + i].conj()).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// ρ ← (ρ + ρ†)/2. Returns the defect before symmetrization.
    pub fn symmetrize(&mut self) -> f64 {
        let defect = self.hermiticity_defect();
        let n = self.n();
        for i in 0..n {
            self.values[i * n + i].im = 0.0;
            for j in i + 1..n {
                let avg = 0.5 * (self.values[i * n + j] + self.values[j * n + i].conj());
                self.values[i * n + j] = avg;
                self.values[j * n + i] = avg.conj();
            }
        }
        defect
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .par_iter()
            .map(|v| v.norm())
            .reduce(|| 0.0, f64::max)
    }

    /// Largest |ρ| on the first and last rows and columns, relative to the largest |ρ| overall.
    pub fn edge_ratio(&self) -> f64 {
        let n = self.n();
        let peak = self.max_abs();
        let mut edge = 0.0f64;
        for k in 0..n {
            for (i, j) in [(0, k), (n - 1, k), (k, 0), (k, n - 1)] {
                edge = edge.max(self.values[i * n + j].norm());
            }
        }
        if peak > 0.0 {
            edge / peak
        } else {
            0.0
        }
    }

    /// ⟨ψ|ρ|ψ⟩ for a wave function normalized with dx Σ |ψ|² = 1.
    pub fn fidelity(&self, psi: &[Complex64]) -> f64 {
        let n = self.n();
        let dx = self.dx();
        let sum: Complex64 = self
            .values
            .par_chunks(n)
            .zip(psi.par_iter())
            .map(|(row, a)| {
                let inner: Complex64 = row.iter().zip(psi).map(|(v, b)| v * b).sum();
                a.conj() * inner
            })
            .sum();
        dx * dx * sum.re
    }

    /// ρ(x, x) → ρ(−x, −x′) mismatch, max norm.
    pub fn parity_defect(&self) -> f64 {
        let n = self.n();
        (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| (self.values[i * n + j] - self.values[(n - 1 - i) * n + (n - 1 - j)]).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn min_diagonal(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| self.values[i * n + i].re)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Position probability density P(x_i) = ρ(x_i, x_i).
pub fn probability_density(rho: &DensityMatrixGrid) -> Vec<f64> {
    let n = rho.n();
    (0..n).map(|i| rho.values[i * n + i].re).collect()
}

/// Grid quadratures of the lowest moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_x2: f64,
    pub purity: f64,
    pub trace: f64,
}

pub fn moments(rho: &DensityMatrixGrid) -> Moments {
    let dx = rho.dx();
    let p = probability_density(rho);
    let trace = dx * p.iter().sum::<f64>();
    let mean_x = dx * p.iter().zip(rho.x()).map(|(p, x)| p * x).sum::<f64>() / trace;
    let mean_x2 = dx * p.iter().zip(rho.x()).map(|(p, x)| p * x * x).sum::<f64>() / trace;
    Moments {
        mean_x,
        mean_x2,
        purity: rho.purity(),
        trace,
    }
}

/// Ground state of the bare trap displaced to `center`, sampled on the grid and normalized.
pub fn coherent_wavefunction(params: &SystemParams, spec: &GridSpec, center: f64) -> Vec<Complex64> {
    let mw = params.mass * params.mech_freq;
    let x = spec.positions();
    let raw: Vec<f64> = x
        .iter()
        .map(|x| (-0.5 * mw * (x - center) * (x - center)).exp())
        .collect();
    let norm = (spec.dx() * raw.iter().map(|v| v * v).sum::<f64>()).sqrt();
    raw.iter().map(|v| Complex64::new(v / norm, 0.0)).collect()
}

/// Ground state of the bare trap, ψ0(x) ∝ exp(−mω_m x²/2), normalized on the grid.
pub fn ground_state_wavefunction(params: &SystemParams, spec: &GridSpec) -> Vec<Complex64> {
    coherent_wavefunction(params, spec, 0.0)
}

/// |ψ0⟩⟨ψ0| on the grid. The grid must reach at least 8 x0 on each side.
pub fn ground_state_density(params: &SystemParams, spec: &GridSpec) -> Result<DensityMatrixGrid> {
    coherent_state_density(params, spec, 0.0)
}

/// Displaced ground state |α⟩⟨α| centred at `center`.
pub fn coherent_state_density(
    params: &SystemParams,
    spec: &GridSpec,
    center: f64,
) -> Result<DensityMatrixGrid> {
    params.validate()?;
    spec.validate()?;
    let x0 = natural_units(params)?.x0;
    if spec.half_width - center.abs() < 8.0 * x0 {
        return Err(invalid(
            "grid.half_width",
            format!(
                "state centred at {center} needs the grid to reach 8 x0 beyond it, half width is {}",
                spec.half_width
            ),
        ));
    }
    DensityMatrixGrid::from_pure_state(*spec, &coherent_wavefunction(params, spec, center), 0.0)
}
