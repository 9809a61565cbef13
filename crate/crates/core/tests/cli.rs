// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use optokap::app::{CsvTable, RunManifest};

fn optokap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optokap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn out_of_range_amplitude_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[modulation]\nA_over_P0 = 1.5\n");
    let out_dir = dir.path().join("out");
    let out = optokap(&["stability", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("modulation.A_over_P0"), "{}", stderr(&out));
}

#[test]
fn unknown_key_and_unknown_preset_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[classical]\nn_trajectories = 10\n");
    let out_dir = dir.path().join("out");
    let out = optokap(&["classical", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("classical.n_trajectories"), "{}", stderr(&out));

    let out = optokap(&["stability", "--preset", "fig99", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    let out = optokap(&["stability", "--config", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fixed_seed_reproduces_trajectory_output_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 11\n[system]\ngamma_over_omega_m = 0.02\nkT_over_E0 = 0.5\n\
         [classical]\nn_traj = 1\nt_end = 5.0\ndt = 1e-3\nrecord_stride = 100\nwrite_trajectories = true\n",
    );
    let runs: Vec<Vec<u8>> = ["a", "b"]
        .iter()
        .map(|name| {
            let out_dir = dir.path().join(name);
            let out = optokap(&["classical", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
            std::fs::read(out_dir.join("trajectories.csv")).unwrap()
        })
        .collect();
    assert!(runs[0].len() > 100);
    assert_eq!(runs[0], runs[1]);

    let other = dir.path().join("c");
    let out = optokap(&["classical", "--config", &cfg, "--seed", "12", "--out", other.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(std::fs::read(other.join("trajectories.csv")).unwrap(), runs[0]);
}

#[test]
fn fig2_threshold_and_manifest_hash_in_every_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = optokap(&["stability", "--preset", "fig2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let manifest = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
    assert!(manifest.passed());
    let thr = manifest.observables["threshold_at_Omega"];
    assert!((thr - 0.2258770).abs() < 1e-6, "{thr}");
    assert!((manifest.observables["critical_power"] - 1250.0).abs() < 1e-9);

    for name in ["stability_map.csv", "threshold.csv", "potential.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, format!("# manifest_sha256={}", manifest.manifest_sha256), "{name}");
    }
    let table = CsvTable::read(&dir.path().join("threshold.csv")).unwrap();
    assert!((table.column("A_star_over_P0").unwrap()[0] - thr).abs() < 1e-12);

    let again = tempfile::tempdir().unwrap();
    let out = optokap(&["stability", "--preset", "fig2", "--out", again.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(RunManifest::read(&again.path().join("manifest.json")).unwrap().manifest_sha256, manifest.manifest_sha256);
}

#[test]
fn threshold_outside_amplitude_range_is_left_empty_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[stability]\nomega_min = 1.0\nomega_max = 2.0\nn_omega = 3\namp_min = 0.0\namp_max = 0.15\nn_amp = 4\n",
    );
    let out_dir = dir.path().join("out");
    let out = optokap(&["stability", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("no threshold"), "{}", stderr(&out));
    let table = CsvTable::read(&out_dir.join("threshold.csv")).unwrap();
    let thr = table.column("A_star_over_P0").unwrap();
    // A*/P0 = 0.1255 Ω: inside the range at Ω = 1, outside at Ω = 1.5 and 2
    assert!(thr[0].is_finite());
    assert!(thr[1].is_nan() && thr[2].is_nan(), "{thr:?}");
    let raw = std::fs::read_to_string(out_dir.join("threshold.csv")).unwrap();
    assert!(raw.lines().last().unwrap().ends_with(','), "{raw}");
}

#[test]
fn check_battery_passes_and_catches_a_flipped_localization_sign() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good");
    let out = optokap(&["check", "--out", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(RunManifest::read(&good.join("manifest.json")).unwrap().passed());

    let bad = dir.path().join("bad");
    let out = optokap(&["check", "--inject-localization-sign-error", "--out", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("ground_state_fixed_point"), "{}", stderr(&out));
}

#[test]
fn presets_subcommand_lists_every_panel() {
    let out = optokap(&["presets"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig2", "fig5", "fig7a", "fig8e", "fig9c", "fig10e", "fig11", "fig12c", "ground"] {
        assert!(text.lines().any(|l| l == name), "{name} missing");
    }
}
