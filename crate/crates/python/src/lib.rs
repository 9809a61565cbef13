// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! Python bindings for the `optokap` crate.
//!
//! Arrays cross the boundary as plain Python lists; matrices are lists of rows.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use optokap::app::{self, Command};
use optokap::classical::{run_ensemble as run_ensemble_rs, EnsembleConfig};
use optokap::{potential, quantum, Error};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::InvalidParameter { .. } | Error::Config { .. } => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

/// Mechanical, cavity and bath parameters in units with ω_m = m = 1.
#[pyclass(name = "SystemParams", module = "optokap", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PySystemParams {
    inner: optokap::SystemParams,
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (kappa=200.0, detuning=0.0, g2=-0.01, gamma=0.0, k_b_t=0.0))]
    fn new(kappa: f64, detuning: f64, g2: f64, gamma: f64, k_b_t: f64) -> PyResult<Self> {
        let inner = optokap::SystemParams::dimensionless(kappa, detuning, g2, gamma).with_temperature(k_b_t);
        inner.validate().map_err(to_py)?;
        Ok(PySystemParams { inner })
    }

    /// κ = 200, Δ = 0, g2 = −0.01, undamped, zero temperature.
    #[staticmethod]
    fn reference() -> Self {
        PySystemParams {
            inner: optokap::SystemParams::reference(),
        }
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.cavity_decay
    }

    #[getter]
    fn detuning(&self) -> f64 {
        self.inner.detuning
    }

    #[getter]
    fn g2(&self) -> f64 {
        self.inner.quad_coupling
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.mech_damping
    }

    #[getter]
    fn k_b_t(&self) -> f64 {
        self.inner.bath_temperature
    }

    /// Input power at which the origin turns from a minimum into a maximum.
    fn critical_power(&self) -> f64 {
        potential::critical_power(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemParams(kappa={}, detuning={}, g2={}, gamma={}, k_b_t={})",
            self.inner.cavity_decay,
            self.inner.detuning,
            self.inner.quad_coupling,
            self.inner.mech_damping,
            self.inner.bath_temperature
        )
    }
}

/// Input power P(t) = P0 − A sin(Ω t).
#[pyclass(name = "Modulation", module = "optokap", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PyModulation {
    inner: optokap::Modulation,
}

#[pymethods]
impl PyModulation {
    #[new]
    #[pyo3(signature = (mean_power, amplitude_ratio=0.0, frequency=1.8))]
    fn new(mean_power: f64, amplitude_ratio: f64, frequency: f64) -> PyResult<Self> {
        let inner = optokap::Modulation::from_ratio(mean_power, amplitude_ratio, frequency).map_err(to_py)?;
        Ok(PyModulation { inner })
    }

    #[getter]
    fn mean_power(&self) -> f64 {
        self.inner.mean_power
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.inner.amplitude
    }

    #[getter]
    fn frequency(&self) -> f64 {
        self.inner.mod_freq
    }

    fn power(&self, t: f64) -> f64 {
        self.inner.input_power(t)
    }

    fn __repr__(&self) -> String {
        format!(
            "Modulation(mean_power={}, amplitude={}, frequency={})",
            self.inner.mean_power, self.inner.amplitude, self.inner.mod_freq
        )
    }
}

/// Static potential U_s(x) at constant input power.
#[pyfunction]
fn static_potential(params: &PySystemParams, power: f64, x: Vec<f64>) -> Vec<f64> {
    x.iter().map(|x| potential::static_potential(&params.inner, power, *x)).collect()
}

/// Time-averaged effective potential including the micromotion term.
#[pyfunction]
fn effective_potential(params: &PySystemParams, modulation: &PyModulation, x: Vec<f64>) -> Vec<f64> {
    x.iter()
        .map(|x| potential::time_averaged_potential(&params.inner, &modulation.inner, *x))
        .collect()
}

/// Curvature D of the effective potential at the origin.
#[pyfunction]
fn curvature(params: &PySystemParams, modulation: &PyModulation) -> f64 {
    potential::curvature_d(&params.inner, &modulation.inner)
}

/// Smallest amplitude A that stabilizes the origin at drive frequency Ω.
#[pyfunction]
fn stability_threshold(params: &PySystemParams, mean_power: f64, frequency: f64) -> PyResult<f64> {
    potential::stability_threshold(&params.inner, mean_power, frequency).map_err(to_py)
}

/// Positive-x minima of the static potential; empty below the critical power.
#[pyfunction]
fn static_wells(params: &PySystemParams, power: f64) -> Vec<f64> {
    potential::static_wells(&params.inner, power)
}

/// Result of a classical Langevin ensemble.
#[pyclass(name = "EnsembleResult", module = "optokap", frozen, get_all)]
pub struct PyEnsembleResult {
    /// Final positions of the trajectories that stayed inside the domain.
    x: Vec<f64>,
    /// Final momenta, aligned with `x`.
    p: Vec<f64>,
    /// Number of trajectories that left the histogram domain.
    escaped: usize,
    /// Histogram bin centres.
    bins: Vec<f64>,
    /// Recording times of the density rows.
    times: Vec<f64>,
    /// Position probability per bin at each recording time.
    density: Vec<Vec<f64>>,
}

#[pymethods]
impl PyEnsembleResult {
    fn mean_abs_x(&self) -> f64 {
        self.x.iter().map(|x| x.abs()).sum::<f64>() / self.x.len().max(1) as f64
    }
}

/// Integrates a thermal ensemble started from the bare oscillator's ground-state spread.
#[pyfunction]
#[pyo3(signature = (params, modulation, n_traj=1000, t_end=100.0, dt=1e-3, record_stride=1000, seed=0))]
fn run_ensemble(
    py: Python<'_>,
    params: &PySystemParams,
    modulation: &PyModulation,
    n_traj: usize,
    t_end: f64,
    dt: f64,
    record_stride: usize,
    seed: u64,
) -> PyResult<PyEnsembleResult> {
    let mut cfg = EnsembleConfig::new(&params.inner).map_err(to_py)?;
    cfg.n_traj = n_traj;
    cfg.t_end = t_end;
    cfg.dt = dt;
    cfg.record_stride = record_stride;
    cfg.seed = seed;
    let (p, m) = (params.inner, modulation.inner);
    let run = py.detach(|| run_ensemble_rs(&cfg, &p, &m)).map_err(to_py)?;
    Ok(PyEnsembleResult {
        x: run.final_states.iter().map(|s| s.x).collect(),
        p: run.final_states.iter().map(|s| s.p).collect(),
        escaped: run.escaped,
        bins: run.density.x_centers,
        times: run.density.times,
        density: run.density.probs,
    })
}

/// Position-space density matrix on a uniform grid.
#[pyclass(name = "DensityMatrix", module = "optokap", frozen)]
pub struct PyDensityMatrix {
    inner: quantum::DensityMatrixGrid,
}

#[pymethods]
impl PyDensityMatrix {
    /// Ground state of the bare oscillator.
    #[staticmethod]
    fn ground_state(params: &PySystemParams, n: usize, half_width: f64) -> PyResult<Self> {
        let spec = quantum::GridSpec::new(n, half_width).map_err(to_py)?;
        let inner = quantum::ground_state_density(&params.inner, &spec).map_err(to_py)?;
        Ok(PyDensityMatrix { inner })
    }

    /// Coherent state centred at `x0` with zero mean momentum.
    #[staticmethod]
    fn coherent_state(params: &PySystemParams, n: usize, half_width: f64, x0: f64) -> PyResult<Self> {
        let spec = quantum::GridSpec::new(n, half_width).map_err(to_py)?;
        let inner = quantum::coherent_state_density(&params.inner, &spec, x0).map_err(to_py)?;
        Ok(PyDensityMatrix { inner })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.x().to_vec()
    }

    fn trace(&self) -> f64 {
        self.inner.trace()
    }

    fn purity(&self) -> f64 {
        quantum::moments(&self.inner).purity
    }

    /// ⟨x⟩ and ⟨x²⟩.
    fn moments(&self) -> (f64, f64) {
        let m = quantum::moments(&self.inner);
        (m.mean_x, m.mean_x2)
    }

    fn probability_density(&self) -> Vec<f64> {
        quantum::probability_density(&self.inner)
    }

    /// Wigner function as `(x, p, W)` with `W[i][k]` at `(x[i], p[k])`.
    fn wigner(&self, py: Python<'_>) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let w = py.detach(|| quantum::wigner(&self.inner));
        let rows = w.values.chunks(w.p.len()).map(<[f64]>::to_vec).collect();
        (w.x, w.p, rows)
    }

    /// Master-equation evolution to `t_end`; returns the states at `record_times` followed by the final one.
    #[pyo3(signature = (params, modulation, t_end, record_times=Vec::new(), dt=None))]
    fn evolve(
        &self,
        py: Python<'_>,
        params: &PySystemParams,
        modulation: &PyModulation,
        t_end: f64,
        record_times: Vec<f64>,
        dt: Option<f64>,
    ) -> PyResult<Vec<PyDensityMatrix>> {
        let (p, m) = (params.inner, modulation.inner);
        let evo = py
            .detach(|| quantum::evolve(&self.inner, &p, &m, t_end, dt, &record_times))
            .map_err(to_py)?;
        Ok(evo.states.into_iter().map(|inner| PyDensityMatrix { inner }).collect())
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(n={}, t={})", self.inner.n(), self.inner.t)
    }
}

/// Names of the bundled presets.
#[pyfunction]
fn presets() -> Vec<String> {
    app::preset_names()
}

/// Runs `command` ("stability", "classical", "quantum" or "check") from a preset into `out`.
///
/// Returns the manifest's observables and a map of check name to pass flag.
#[pyfunction]
#[pyo3(signature = (command, out, preset=None, config=None, seed=None))]
fn run(
    py: Python<'_>,
    command: &str,
    out: PathBuf,
    preset: Option<String>,
    config: Option<String>,
    seed: Option<u64>,
) -> PyResult<(BTreeMap<String, f64>, BTreeMap<String, bool>)> {
    let command = match command {
        "stability" => Command::Stability,
        "classical" => Command::Classical,
        "quantum" => Command::Quantum,
        "check" => Command::Check,
        other => return Err(PyValueError::new_err(format!("unknown command `{other}`"))),
    };
    let cfg = app::load_config(preset.as_deref(), config.as_deref(), seed).map_err(to_py)?;
    let manifest = py
        .detach(|| app::run(command, &cfg, &out, preset.as_deref()))
        .map_err(to_py)?;
    let checks = manifest.checks.iter().map(|c| (c.name.clone(), c.passed)).collect();
    Ok((manifest.observables, checks))
}

#[pymodule]
#[pyo3(name = "optokap")]
pub fn optokap_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyModulation>()?;
    m.add_class::<PyEnsembleResult>()?;
    m.add_class::<PyDensityMatrix>()?;
    m.add_function(wrap_pyfunction!(static_potential, m)?)?;
    m.add_function(wrap_pyfunction!(effective_potential, m)?)?;
    m.add_function(wrap_pyfunction!(curvature, m)?)?;
    m.add_function(wrap_pyfunction!(stability_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(static_wells, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
