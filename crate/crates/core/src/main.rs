// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use optokap::app::{exit, exit_code, load_config, preset_names, run_with, CheckOptions, Command};

#[derive(Parser)]
#[command(name = "optokap", version, about = "Dynamic stabilization of an optomechanical double well")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stability map and threshold curve of the origin.
    Stability(RunArgs),
    /// Classical Langevin ensemble.
    Classical(RunArgs),
    /// Master-equation evolution of the density matrix.
    Quantum(RunArgs),
    /// Invariant battery at small sizes.
    Check(CheckArgs),
    /// List the bundled presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file, overlaid on the preset if one is given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Bundled preset to start from.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Reverse the sign of the localization term to confirm the battery catches it.
    #[arg(long, hide = true)]
    inject_localization_sign_error: bool,
}

fn execute(command: Command, args: &RunArgs, check: CheckOptions) -> i32 {
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return exit::IO;
            }
        },
        None => None,
    };
    let cfg = match load_config(args.preset.as_deref(), text.as_deref(), args.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match run_with(command, &cfg, &args.out, args.preset.as_deref(), &check) {
        Ok(manifest) => {
            for c in manifest.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} ({})", c.name, c.detail);
            }
            if manifest.passed() {
                exit::OK
            } else {
                exit::INVARIANT
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match &cli.command {
        Cmd::Stability(a) => execute(Command::Stability, a, CheckOptions::default()),
        Cmd::Classical(a) => execute(Command::Classical, a, CheckOptions::default()),
        Cmd::Quantum(a) => execute(Command::Quantum, a, CheckOptions::default()),
        Cmd::Check(a) => execute(
            Command::Check,
            &a.run,
            CheckOptions {
                flip_localization: a.inject_localization_sign_error,
            },
        ),
        Cmd::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            exit::OK
        }
    };
    ExitCode::from(code as u8)
}
