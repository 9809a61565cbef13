// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

//! The four pipelines behind the command line: stability maps, classical ensembles,
//! quantum evolution and the invariant battery.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::check::{run_battery, CheckOptions};
use super::config::{merge, Engine, RunConfig};
use super::output::{Check, CsvWriter, RunIdentity, RunManifest};
use super::presets::preset;
use crate::classical::run_ensemble;
use crate::error::{Error, Result};
use crate::params::natural_units;
use crate::potential::{
    critical_power, curvature_d, effective_frequency, stability_map, stability_threshold,
    static_potential, static_wells, time_averaged_potential,
};
use crate::quantum::{
    coherent_state_density, coherent_wavefunction, evolve_with, moments, probability_density, wigner,
    EvolveOptions,
};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const INVARIANT: i32 = 4;
}

/// Exit code for an error raised by a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => exit::IO,
        Error::Config { .. } | Error::InvalidParameter { .. } => exit::CONFIG,
        Error::NumericalAbort { .. }
        | Error::TooManyEscapes { .. }
        | Error::NoRoot(_)
        | Error::NoSpectralPeak { .. } => exit::NUMERICAL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Stability,
    Classical,
    Quantum,
    Check,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stability => "stability",
            Command::Classical => "classical",
            Command::Quantum => "quantum",
            Command::Check => "check",
        }
    }

    fn engine(&self) -> Option<Engine> {
        match self {
            Command::Stability => Some(Engine::Stability),
            Command::Classical => Some(Engine::Classical),
            Command::Quantum => Some(Engine::Quantum),
            Command::Check => None,
        }
    }
}

/// Resolves the effective configuration: preset, then the file on top, then the seed override.
pub fn load_config(preset_name: Option<&str>, file_text: Option<&str>, seed: Option<u64>) -> Result<RunConfig> {
    let mut table = match preset_name {
        Some(name) => preset(name)?,
        None => toml::Table::new(),
    };
    if let Some(text) = file_text {
        let top: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config {
                key: "<document>".into(),
                reason: e.message().to_string(),
            })?;
        merge(&mut table, top);
    }
    if let Some(seed) = seed {
        let seed = i64::try_from(seed).map_err(|_| Error::Config {
            key: "seed".into(),
            reason: "must fit in a signed 64-bit integer".into(),
        })?;
        table.insert("seed".into(), toml::Value::Integer(seed));
    }
    RunConfig::from_table(table)
}

struct Context<'a> {
    dir: &'a Path,
    hash: String,
    outputs: Vec<String>,
}

impl Context<'_> {
    fn csv(&mut self, name: &str, header: &[&str]) -> Result<CsvWriter> {
        self.outputs.push(name.to_string());
        CsvWriter::create(&self.dir.join(name), &self.hash, header)
    }
}

/// Runs `command` with a resolved configuration, writing CSVs and `manifest.json` into `out`.
pub fn run(command: Command, cfg: &RunConfig, out: &Path, preset_name: Option<&str>) -> Result<RunManifest> {
    run_with(command, cfg, out, preset_name, &CheckOptions::default())
}

pub fn run_with(
    command: Command,
    cfg: &RunConfig,
    out: &Path,
    preset_name: Option<&str>,
    check_opts: &CheckOptions,
) -> Result<RunManifest> {
    if let (Some(want), Some(have)) = (command.engine(), cfg.engine) {
        if want != have {
            return Err(Error::Config {
                key: "engine".into(),
                reason: format!("configuration targets '{}' but the command is '{}'", have.name(), command.name()),
            });
        }
    }
    std::fs::create_dir_all(out)?;
    let identity = RunIdentity::new(command.name(), preset_name, cfg);
    let mut ctx = Context {
        dir: out,
        hash: identity.hash(),
        outputs: Vec::new(),
    };
    let start = Instant::now();
    let mut observables = BTreeMap::new();
    let checks = match command {
        Command::Stability => cmd_stability(cfg, &mut ctx, &mut observables)?,
        Command::Classical => cmd_classical(cfg, &mut ctx, &mut observables)?,
        Command::Quantum => cmd_quantum(cfg, &mut ctx, &mut observables)?,
        Command::Check => run_battery(cfg, check_opts)?,
    };
    let manifest = RunManifest {
        manifest_sha256: ctx.hash.clone(),
        identity,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        checks,
        observables,
        outputs: ctx.outputs,
    };
    manifest.write(out)?;
    Ok(manifest)
}

fn cmd_stability(cfg: &RunConfig, ctx: &mut Context, obs: &mut BTreeMap<String, f64>) -> Result<Vec<Check>> {
    let p = cfg.system_params()?;
    let m = cfg.modulation()?;
    let units = natural_units(&p)?;
    let e0 = units.e0;
    let p0 = m.mean_power;
    let st = &cfg.stability;
    let map = stability_map(
        &p,
        p0,
        (st.omega_min, st.omega_max),
        (st.amp_min, st.amp_max),
        (st.n_omega, st.n_amp),
    )?;

    let mut w = ctx.csv("stability_map.csv", &["Omega_over_omega_m", "A_over_P0", "D", "stable"])?;
    for (i, omega) in map.omega_axis.iter().enumerate() {
        for (j, a) in map.amp_axis.iter().enumerate() {
            let stable = if map.stable_grid[i][j] { 1.0 } else { 0.0 };
            w.row(&[*omega, *a, map.curvature_grid[i][j] * units.x0 * units.x0 / e0, stable])?;
        }
    }
    w.finish()?;

    let mut w = ctx.csv("threshold.csv", &["Omega_over_omega_m", "A_star_over_P0"])?;
    for (omega, thr) in map.omega_axis.iter().zip(&map.threshold_curve) {
        w.row_opt(&[Some(*omega), *thr])?;
    }
    w.finish()?;

    let mut w = ctx.csv("potential.csv", &["x", "U_s", "U_bar"])?;
    let span = cfg.classical.x_max;
    let n = 4 * span.ceil() as usize * 2;
    for k in 0..=n {
        let x = (-span + 2.0 * span * k as f64 / n as f64) * units.x0;
        let ubar = if m.is_modulated() { time_averaged_potential(&p, &m, x) } else { static_potential(&p, p0, x) };
        w.row(&[x / units.x0, static_potential(&p, p0, x) / e0, ubar / e0])?;
    }
    w.finish()?;

    obs.insert("critical_power".into(), critical_power(&p));
    obs.insert("omega0_over_omega_m".into(), effective_frequency(&p, p0) / p.mech_freq);
    obs.insert("D".into(), curvature_d(&p, &m) * units.x0 * units.x0 / e0);
    if let Some(x) = static_wells(&p, p0).iter().copied().find(|x| *x > 0.0) {
        obs.insert("well_radius".into(), x / units.x0);
        obs.insert("well_depth".into(), (static_potential(&p, p0, x) - static_potential(&p, p0, 0.0)) / e0);
    }
    if m.mod_freq > 0.0 {
        match stability_threshold(&p, p0, m.mod_freq) {
            Ok(a) => {
                obs.insert("threshold_at_Omega".into(), a / p0);
            }
            Err(e) => log::warn!("no threshold at the configured Omega: {e}"),
        }
    }

    let mut checks = Vec::new();
    let slopes: Vec<f64> = map
        .omega_axis
        .iter()
        .zip(&map.threshold_curve)
        .filter_map(|(w, t)| t.map(|t| t / w))
        .collect();
    if slopes.len() >= 2 {
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let dev = slopes.iter().map(|s| (s / mean - 1.0).abs()).fold(0.0, f64::max);
        checks.push(Check::at_most("threshold_linear_in_omega", dev, 1e-9));
    }
    let missing = map.threshold_curve.iter().filter(|t| t.is_none()).count();
    if missing > 0 {
        log::warn!("{missing} Omega samples have no threshold inside the A/P0 range");
    }
    Ok(checks)
}

fn cmd_classical(cfg: &RunConfig, ctx: &mut Context, obs: &mut BTreeMap<String, f64>) -> Result<Vec<Check>> {
    let p = cfg.system_params()?;
    let m = cfg.modulation()?;
    let ens = cfg.ensemble()?;
    let units = natural_units(&p)?;
    let tu = 1.0 / p.mech_freq;
    let run = run_ensemble(&ens, &p, &m)?;

    let mut w = ctx.csv("density.csv", &["t", "x", "prob"])?;
    for (t, probs) in run.density.times.iter().zip(&run.density.probs) {
        for (x, pr) in run.density.x_centers.iter().zip(probs) {
            w.row(&[t / tu, x / units.x0, *pr])?;
        }
    }
    w.finish()?;

    let mut w = ctx.csv("density_time_averaged.csv", &["x", "prob"])?;
    for (x, pr) in run.density.x_centers.iter().zip(run.density.time_averaged()) {
        w.row(&[x / units.x0, pr])?;
    }
    w.finish()?;

    let ps = &run.phase_space;
    let mut w = ctx.csv("phase_space.csv", &["x", "p", "prob"])?;
    for (ix, x) in ps.x_centers.iter().enumerate() {
        for (ip, pv) in ps.p_centers.iter().enumerate() {
            w.row(&[x / units.x0, pv / units.p0, ps.prob(ix, ip)])?;
        }
    }
    w.finish()?;

    let mut w = ctx.csv("final_states.csv", &["x", "p"])?;
    for s in &run.final_states {
        w.row(&[s.x / units.x0, s.p / units.p0])?;
    }
    w.finish()?;

    if let Some(trajs) = &run.trajectories {
        let mut w = ctx.csv("trajectories.csv", &["traj", "t", "x", "p"])?;
        for (k, tr) in trajs.iter().enumerate() {
            for ((t, x), pv) in tr.t.iter().zip(&tr.x).zip(&tr.p) {
                w.row(&[k as f64, t / tu, x / units.x0, pv / units.p0])?;
            }
        }
        w.finish()?;
    }

    obs.insert("mean_abs_x_final".into(), run.mean_abs_x() / units.x0);
    obs.insert("escaped".into(), run.escaped as f64);
    obs.insert("n_traj".into(), ens.n_traj as f64);

    let mut checks = vec![Check::at_most(
        "escape_fraction",
        run.escaped as f64 / ens.n_traj as f64,
        0.01,
    )];
    if cfg.classical.sigma_x.is_none() && cfg.classical.sigma_p.is_none() && ens.n_traj >= 100 {
        // the bare-trap energy of the initial ensemble has mean E0/2
        let energies: Vec<f64> = run
            .initial
            .iter()
            .map(|s| 0.5 * s.p * s.p / p.mass + 0.5 * p.mass * p.mech_freq * p.mech_freq * s.x * s.x)
            .map(|e| e / units.e0)
            .collect();
        let n = energies.len() as f64;
        let mean = energies.iter().sum::<f64>() / n;
        let var = energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let z = (mean - 0.5).abs() / (var / n).sqrt();
        checks.push(Check::at_most("initial_energy_z_score", z, 5.0));
    }
    checks.push(Check::flag(
        "final_states_finite",
        run.final_states.iter().all(|s| s.is_finite()),
        "all non-escaped final states are finite",
    ));
    Ok(checks)
}

fn cmd_quantum(cfg: &RunConfig, ctx: &mut Context, obs: &mut BTreeMap<String, f64>) -> Result<Vec<Check>> {
    let p = cfg.system_params()?;
    let m = cfg.modulation()?;
    let units = natural_units(&p)?;
    let tu = 1.0 / p.mech_freq;
    let q = &cfg.quantum;
    let spec = cfg.grid()?;
    let center = q.initial_offset * units.x0;
    let rho0 = coherent_state_density(&p, &spec, center)?;
    let opts = EvolveOptions {
        dt: q.dt.map(|dt| dt * tu),
        edge_tolerance: q.edge_tolerance,
        ..EvolveOptions::default()
    };
    let record: Vec<f64> = q.record_times.iter().map(|t| t * tu).collect();
    let evo = evolve_with(&rho0, &p, &m, q.t_end * tu, &record, &opts)?;

    let mut w = ctx.csv("moments.csv", &[
        "t",
        "trace",
        "purity",
        "hermiticity_defect",
        "edge_ratio",
        "min_diagonal",
        "mean_x",
        "mean_x2",
    ])?;
    let x0sq = units.x0 * units.x0;
    let initial = moments(&rho0);
    w.row(&[0.0, initial.trace, initial.purity, rho0.hermiticity_defect(), rho0.edge_ratio(), rho0.min_diagonal(), initial.mean_x / units.x0, initial.mean_x2 / x0sq])?;
    for r in &evo.reports {
        w.row(&[
            r.t / tu,
            r.trace,
            r.purity,
            r.hermiticity_defect,
            r.edge_ratio,
            r.min_diagonal,
            r.mean_x / units.x0,
            r.mean_x2 / x0sq,
        ])?;
    }
    w.finish()?;

    let mut w = ctx.csv("density.csv", &["t", "x", "P"])?;
    for state in std::iter::once(&rho0).chain(&evo.states) {
        for (x, pr) in state.x().iter().zip(probability_density(state)) {
            w.row(&[state.t / tu, x / units.x0, pr * units.x0])?;
        }
    }
    w.finish()?;

    for &tw in &q.wigner_times {
        let Some(state) = evo.states.iter().find(|s| (s.t / tu - tw).abs() < 1e-9 * tw.max(1.0)) else {
            continue;
        };
        let wg = wigner(state);
        let name = format!("wigner_t{}.csv", format_time(tw));
        let mut w = ctx.csv(&name, &["x", "p", "W"])?;
        for (i, x) in wg.x.iter().enumerate() {
            for (k, pv) in wg.p.iter().enumerate() {
                w.row(&[x / units.x0, pv / units.p0, wg.get(i, k) * units.x0 * units.p0])?;
            }
        }
        w.finish()?;
        let peak = wg.max();
        obs.insert(format!("wigner_min_over_peak_t{}", format_time(tw)), wg.min() / peak);
    }

    let last = evo.reports.last().expect("t_end is always recorded");
    obs.insert("mean_x2_final".into(), last.mean_x2 / x0sq);
    obs.insert("purity_final".into(), last.purity);
    obs.insert("dt".into(), evo.dt / tu);
    obs.insert("steps".into(), evo.steps as f64);

    let mut checks = vec![
        Check::at_most("trace_drift", evo.max_trace_drift(initial.trace), 1e-4),
        Check::at_most("hermiticity_defect", evo.max_hermiticity_defect(), 1e-9),
        Check::at_most(
            "edge_ratio",
            evo.reports.iter().map(|r| r.edge_ratio).fold(0.0, f64::max),
            q.edge_tolerance,
        ),
    ];
    if m.mean_power == 0.0 && q.initial_offset == 0.0 {
        let psi = coherent_wavefunction(&p, &spec, 0.0);
        let worst = evo.states.iter().map(|s| 1.0 - s.fidelity(&psi)).fold(0.0, f64::max);
        checks.push(Check::at_most("ground_state_infidelity", worst, 1e-6));
    }
    Ok(checks)
}

/// `100.0` becomes `100`, `12.5` becomes `12.5`.
fn format_time(t: f64) -> String {
    format!("{t}")
}
