// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DensityMatrixGrid;
use crate::params::{Modulation, SystemParams, HBAR};
use crate::potential::time_dependent_potential;

/// Fourth-order second derivative, offsets −2..=2, in units of 1/dx².
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
/// Fourth-order first derivative, offsets −2..=2, in units of 1/dx.
const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
/// The commutator D1 X − X D1, a dimensionless stencil that sums to 1.
const COMMUTATOR: [f64; 5] = [-1.0 / 6.0, 2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 6.0];

/// Multipliers on the individual terms of the generator. All are 1 for the physical model;
/// the check battery flips signs to confirm that the invariants detect a broken term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladCoefficients {
    pub kinetic: f64,
    pub potential: f64,
    pub damping: f64,
    pub diffusion: f64,
    pub localization: f64,
}

impl Default for LindbladCoefficients {
    fn default() -> Self {
        LindbladCoefficients {
            kinetic: 1.0,
            potential: 1.0,
            damping: 1.0,
            diffusion: 1.0,
            localization: 1.0,
        }
    }
}

/// U(x_i, t) on the grid, identical to the classical time-dependent potential.
pub fn potential_on_grid(
    params: &SystemParams,
    modulation: &Modulation,
    x: &[f64],
    t: f64,
) -> Vec<f64> {
    x.iter()
        .map(|&x| time_dependent_potential(params, modulation, x, t))
        .collect()
}

/// Real and imaginary parts of an N×N matrix, row major, surrounded by two rows and columns
/// of zeros so that five-point stencils need no boundary branches.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Planes {
    n: usize,
    pub(crate) re: Vec<f64>,
    pub(crate) im: Vec<f64>,
}

impl Planes {
    pub(crate) fn zeros(n: usize) -> Self {
        let len = (n + 4) * (n + 4);
        Planes {
            n,
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }

    #[inline]
    pub(crate) fn stride(&self) -> usize {
        self.n + 4
    }

    /// Offset of element (i, j).
    #[inline]
    pub(crate) fn at(&self, i: usize, j: usize) -> usize {
        (i + 2) * self.stride() + j + 2
    }

    pub(crate) fn from_complex(n: usize, v: &[Complex64]) -> Self {
        let mut p = Planes::zeros(n);
        for i in 0..n {
            let b = p.at(i, 0);
            for (j, c) in v[i * n..(i + 1) * n].iter().enumerate() {
                p.re[b + j] = c.re;
                p.im[b + j] = c.im;
            }
        }
        p
    }

    pub(crate) fn to_complex(&self) -> Vec<Complex64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let b = self.at(i, 0);
            out.extend(
                self.re[b..b + n]
                    .iter()
                    .zip(&self.im[b..b + n])
                    .map(|(&re, &im)| Complex64::new(re, im)),
            );
        }
        out
    }

    pub(crate) fn copy_from(&mut self, other: &Planes) {
        self.re.copy_from_slice(&other.re);
        self.im.copy_from_slice(&other.im);
    }

    /// Interior rows of both planes as mutable (re, im) slices of length N, with the row index.
    pub(crate) fn rows_mut(
        &mut self,
    ) -> impl IndexedParallelIterator<Item = (usize, (&mut [f64], &mut [f64]))> {
        let (n, w) = (self.n, self.stride());
        self.re[2 * w..(n + 2) * w]
            .par_chunks_mut(w)
            .zip(self.im[2 * w..(n + 2) * w].par_chunks_mut(w))
            .map(move |(re, im)| (&mut re[2..n + 2], &mut im[2..n + 2]))
            .enumerate()
    }
}

/// Offsets of the five-point stencils other than the centre.
const OFFSETS: [usize; 4] = [0, 1, 3, 4];

/// The derivative part of the generator: kinetic, damping and diffusion terms.
///
/// The generator splits as `i k (D2_i − D2_j) + R`, where the kinetic factor `k` is real and
/// the damping and diffusion part `R` is a real operator, so the real and imaginary planes
/// are processed with real stencils only. The damping coefficients that shift the row index i
/// depend on the column through x′ and are stored per column in `col[s][j]`; those that shift
/// the column index are stored per row in `row[i][s]`. The centre offsets of the two kinetic
/// stencils cancel and the first-derivative and commutator stencils vanish there.
pub(crate) struct Kernel {
    n: usize,
    /// k D2 at the four off-centre offsets, k = ħ/(2m dx²).
    kinetic: [f64; 4],
    col: [Vec<f64>; 4],
    row: Vec<[f64; 4]>,
    /// d D1 at the four off-centre offsets, d = γħ/(4mω dx²); applied as (D1_i + D1_j)².
    diffusion: [f64; 4],
    diffuse: bool,
    /// γmω/(4ħ), rate of the diagonal −ℓ (x − x′)² term.
    pub(crate) localization: f64,
    pub(crate) potential_scale: f64,
}

impl Kernel {
    pub(crate) fn new(params: &SystemParams, x: &[f64], dx: f64, c: &LindbladCoefficients) -> Self {
        let n = x.len();
        let m = params.mass;
        let mw = m * params.mech_freq;
        let gamma = params.mech_damping;
        let damp = 0.5 * gamma * c.damping;
        let coef = |s: usize, pos: f64| 0.5 * damp * COMMUTATOR[s] + damp * pos * D1[s] / dx;
        let k = c.kinetic * HBAR / (2.0 * m * dx * dx);
        let d = gamma * c.diffusion * HBAR / (4.0 * mw * dx * dx);
        Kernel {
            n,
            kinetic: OFFSETS.map(|s| k * D2[s]),
            col: OFFSETS.map(|s| x.iter().map(|&xj| coef(s, xj)).collect()),
            row: x.iter().map(|&xi| OFFSETS.map(|s| coef(s, xi))).collect(),
            diffusion: OFFSETS.map(|s| d * D1[s]),
            diffuse: d != 0.0,
            localization: gamma * c.localization * mw / (4.0 * HBAR),
            potential_scale: c.potential / HBAR,
        }
    }

    /// out = (kinetic + damping + diffusion)(src). All three share the padded layout.
    pub(crate) fn apply(&self, src: &Planes, out: &mut Planes, scratch: &mut Planes) {
        let n = self.n;
        let w = src.stride();
        if self.diffuse {
            // scratch = (D1_i + D1_j) src, in units of 1/dx
            scratch.rows_mut().for_each(|(i, (qr, qi))| {
                let b = src.at(i, 0);
                for (plane, q) in [(&src.re, qr), (&src.im, qi)] {
                    let vert = vertical(plane, b, w, n);
                    let horiz = horizontal(plane, b, n);
                    for (j, q) in q.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for k in 0..4 {
                            acc += D1[OFFSETS[k]] * (vert[k][j] + horiz[k][j]);
                        }
                        *q = acc;
                    }
                }
            });
        }
        let scratch: &Planes = scratch;
        out.rows_mut().for_each(|(i, (o_re, o_im))| {
            let b = src.at(i, 0);
            let vert = |p| vertical(p, b, w, n);
            let horiz = |p| horizontal(p, b, n);
            let (vr, vi, hr, hi) = (vert(&src.re), vert(&src.im), horiz(&src.re), horiz(&src.im));
            let col = [&self.col[0][..n], &self.col[1][..n], &self.col[2][..n], &self.col[3][..n]];
            let row = self.row[i];
            let kin = self.kinetic;
            let o_re = &mut o_re[..n];
            let o_im = &mut o_im[..n];
            for j in 0..n {
                let mut xr = 0.0;
                let mut xi = 0.0;
                for k in 0..4 {
                    xr += col[k][j] * vr[k][j] + row[k] * hr[k][j] - kin[k] * (vi[k][j] - hi[k][j]);
                    xi += col[k][j] * vi[k][j] + row[k] * hi[k][j] + kin[k] * (vr[k][j] - hr[k][j]);
                }
                o_re[j] = xr;
                o_im[j] = xi;
            }
            if self.diffuse {
                let (qvr, qvi) = (vert(&scratch.re), vert(&scratch.im));
                let (qhr, qhi) = (horiz(&scratch.re), horiz(&scratch.im));
                let dif = self.diffusion;
                for j in 0..n {
                    let mut xr = 0.0;
                    let mut xi = 0.0;
                    for k in 0..4 {
                        xr += dif[k] * (qvr[k][j] + qhr[k][j]);
                        xi += dif[k] * (qvi[k][j] + qhi[k][j]);
                    }
                    o_re[j] += xr;
                    o_im[j] += xi;
                }
            }
        });
    }
}

/// The rows i + s − 2 of a padded plane, starting at column 0 of row i = offset `b`.
#[inline]
fn vertical(p: &[f64], b: usize, w: usize, n: usize) -> [&[f64]; 4] {
    OFFSETS.map(|s| &p[b + s * w - 2 * w..][..n])
}

/// Row i of a padded plane shifted by s − 2 columns.
#[inline]
fn horizontal(p: &[f64], b: usize, n: usize) -> [&[f64]; 4] {
    OFFSETS.map(|s| &p[b + s - 2..][..n])
}

/// dρ/dt from the full generator at time `t`.
pub fn liouvillian_apply(
    rho: &DensityMatrixGrid,
    params: &SystemParams,
    modulation: &Modulation,
    t: f64,
) -> DensityMatrixGrid {
    liouvillian_apply_with(rho, params, modulation, t, &LindbladCoefficients::default())
}

/// [`liouvillian_apply`] with per-term multipliers.
pub fn liouvillian_apply_with(
    rho: &DensityMatrixGrid,
    params: &SystemParams,
    modulation: &Modulation,
    t: f64,
    coefficients: &LindbladCoefficients,
) -> DensityMatrixGrid {
    let n = rho.n();
    let x = rho.x();
    let kernel = Kernel::new(params, x, rho.dx(), coefficients);
    let src = Planes::from_complex(n, rho.values());
    let mut out = Planes::zeros(n);
    let mut scratch = Planes::zeros(n);
    kernel.apply(&src, &mut out, &mut scratch);
    let u = potential_on_grid(params, modulation, x, t);
    let mut values = out.to_complex();
    let src = rho.values();
    values.par_chunks_mut(n).enumerate().for_each(|(i, o)| {
        for (j, o) in o.iter_mut().enumerate() {
            let sep = x[i] - x[j];
            let rate = Complex64::new(
                -kernel.localization * sep * sep,
                -kernel.potential_scale * (u[i] - u[j]),
            );
            *o += rate * src[i * n + j];
        }
    });
    DensityMatrixGrid::from_values(rho.spec(), values, rho.t).expect("same grid as input")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{coherent_state_density, ground_state_density, GridSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

    fn random_hermitian(spec: GridSpec, seed: u64) -> DensityMatrixGrid {
        let n = spec.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = vec![ZERO; n * n];
        for i in 0..n {
            v[i * n + i] = Complex64::new(rng.random::<f64>(), 0.0);
            for j in i + 1..n {
                let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                v[i * n + j] = z;
                v[j * n + i] = z.conj();
            }
        }
        DensityMatrixGrid::from_values(spec, v, 0.0).unwrap()
    }

    fn driven() -> (SystemParams, Modulation) {
        (
            SystemParams::reference().with_damping(0.02),
            Modulation::from_ratio(1260.0, 1.0, 1.8).unwrap(),
        )
    }

    #[test]
    fn ground_state_is_stationary_in_bare_trap() {
        let bare = Modulation::constant(0.0).unwrap();
        let spec = GridSpec::new(800, 8.0).unwrap();
        for gamma in [0.0, 0.02] {
            let p = SystemParams::reference().with_damping(gamma);
            let rho = ground_state_density(&p, &spec).unwrap();
            let d = liouvillian_apply(&rho, &p, &bare, 0.0);
            assert!(d.max_abs() < 1e-8, "gamma {gamma}: {}", d.max_abs());
        }
    }

    #[test]
    fn generator_preserves_hermiticity_and_trace() {
        let (p, m) = driven();
        let spec = GridSpec::new(40, 6.0).unwrap();
        for seed in 0..4 {
            let rho = random_hermitian(spec, seed);
            let d = liouvillian_apply(&rho, &p, &m, 0.37);
            let scale = d.max_abs();
            assert!(d.hermiticity_defect() < 1e-13 * scale);
            assert!(d.trace().abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn stencil_coefficients_are_consistent() {
        assert!((D2.iter().sum::<f64>()).abs() < 1e-15);
        assert!((D1.iter().sum::<f64>()).abs() < 1e-15);
        let first_moment: f64 = D1.iter().enumerate().map(|(s, c)| c * (s as f64 - 2.0)).sum();
        assert!((first_moment - 1.0).abs() < 1e-15);
        let second_moment: f64 = D2
            .iter()
            .enumerate()
            .map(|(s, c)| c * (s as f64 - 2.0).powi(2))
            .sum();
        assert!((second_moment - 2.0).abs() < 1e-14);
        let c_sum: f64 = COMMUTATOR.iter().sum();
        assert!((c_sum - 1.0).abs() < 1e-15);
        for s in 0..5 {
            let k = s as f64 - 2.0;
            assert!((COMMUTATOR[s] - D1[s] * k).abs() < 1e-15);
        }
    }

    #[test]
    fn damping_moves_mean_position_like_the_continuum() {
        // d⟨x⟩/dt = ⟨p⟩/m − γ⟨x⟩/2 and d⟨p⟩/dt = −m ω² ⟨x⟩ − γ⟨p⟩/2 in the bare trap
        let p = SystemParams::reference().with_damping(0.1);
        let bare = Modulation::constant(0.0).unwrap();
        let spec = GridSpec::new(400, 12.0).unwrap();
        let rho = coherent_state_density(&p, &spec, 1.5).unwrap();
        let d = liouvillian_apply(&rho, &p, &bare, 0.0);
        let dx = spec.dx();
        let rate: f64 = d
            .x()
            .iter()
            .enumerate()
            .map(|(i, x)| x * d.get(i, i).re)
            .sum::<f64>()
            * dx;
        assert!((rate - (-0.05 * 1.5)).abs() < 1e-6, "{rate}");
    }

    #[test]
    fn localization_sign_controls_purity_loss() {
        let (p, m) = driven();
        let spec = GridSpec::new(120, 10.0).unwrap();
        let rho = ground_state_density(&p, &spec).unwrap();
        let purity_rate = |c: &LindbladCoefficients| {
            let d = liouvillian_apply_with(&rho, &p, &m, 0.0, c);
            // d Tr ρ²/dt = 2 Re Tr(ρ dρ/dt)
            let n = spec.n;
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += (rho.get(i, j) * d.get(j, i)).re;
                }
            }
            2.0 * s * spec.dx() * spec.dx()
        };
        let good = purity_rate(&LindbladCoefficients::default());
        let flipped = purity_rate(&LindbladCoefficients {
            localization: -1.0,
            ..Default::default()
        });
        assert!(good <= 1e-9, "{good}");
        assert!(flipped > 1e-3, "{flipped}");
    }
}
