// SPDX-License-Identifier: Apache-2.0

//! `pfs`: run one algorithm, sweep a grid of horizons and trials, or run the
//! randomized verification suites.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pfs_core::experiment::{run_algorithm, run_sweep, Algorithm};
use pfs_core::problem::GENERATOR;
use pfs_core::verify::{default_subjects, run_all, Level, Subject, VerifyOptions};
use pfs_core::{hindsight_optimum, InstanceDescription, Point};

use crate::config::{config_hash, Config};

#[derive(Parser)]
#[command(
    name = "pfs",
    version,
    about = "Online gradient descent with Polyak feasibility steps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write a per-round CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// PFS-Cor1, PFS-Cor2, PFS-Cor3, DPP or DPP-T.
        #[arg(long)]
        algo: Algorithm,
        #[arg(long = "T")]
        horizon: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sweep grid of the config and write one summary row per (algorithm, T).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check the convergence guarantees on random samples.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        /// Instance JSON (or a config containing one); defaults to the built-in set.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scales the contraction factor checked by the contraction suite.
        #[arg(long, default_value_t = 1.0)]
        gamma_scale: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

fn run(config: PathBuf, algo: Algorithm, horizon: usize, seed: u64, out: PathBuf) -> Result<()> {
    if horizon == 0 {
        bail!("--T must be at least 1");
    }
    let mut cfg = Config::load(&config)?;
    cfg.instance.seed = seed;
    cfg.instance.horizon = horizon;
    cfg.algorithm = Some(algo);
    cfg.sweep = None;
    let instance = cfg.instance.build()?;
    let logs = run_algorithm(&instance, algo, horizon, &cfg.params())?;
    let x_star = hindsight_optimum(&instance, horizon)?;
    let comment = [
        ("algorithm", algo.name().to_string()),
        ("seed", seed.to_string()),
        ("T", horizon.to_string()),
        ("generator", GENERATOR.to_string()),
        ("config_sha256", config_hash(&cfg)),
    ];
    output::write_run_csv(&out, &comment, &instance, &logs, &x_star)
}

fn sweep(config: PathBuf, out: PathBuf, workers: Option<usize>) -> Result<()> {
    let cfg = Config::load(&config)?;
    let Some(grid) = cfg.sweep.as_ref() else {
        bail!("config {} has no \"sweep\" section", config.display());
    };
    if workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    let base = cfg.instance.build()?;
    let rows = run_sweep(&base, grid, workers)?;
    let comment = [
        ("base_seed", grid.base_seed.to_string()),
        ("generator", GENERATOR.to_string()),
        ("config_sha256", config_hash(&cfg)),
    ];
    output::write_sweep_csv(&out, &comment, &rows)
}

fn load_subject(path: &PathBuf) -> Result<Subject> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let description = match InstanceDescription::from_json(&text) {
        Ok(d) => d,
        Err(direct) => serde_json::from_str::<Config>(&text)
            .map(|c| c.instance)
            .map_err(|_| direct)
            .with_context(|| format!("parsing instance {}", path.display()))?,
    };
    let instance = description.build()?;
    let origin = Point::zeros(instance.dim());
    let interior = (instance.constraint.value(&origin) < 0.0).then_some(origin);
    Ok(Subject {
        label: path.display().to_string(),
        instance,
        interior,
    })
}

/// Returns whether every suite passed.
fn verify(level: LevelArg, instance: Option<PathBuf>, seed: u64, gamma_scale: f64) -> Result<bool> {
    let level = match level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    if !(gamma_scale.is_finite() && gamma_scale > 0.0) {
        bail!("--gamma-scale must be positive");
    }
    let subjects = match instance {
        Some(path) => vec![load_subject(&path)?],
        None => default_subjects(level)?,
    };
    let opts = VerifyOptions {
        level,
        seed,
        gamma_scale,
    };
    let reports = run_all(&subjects, &opts)?;
    for r in &reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!("{status} {:<26} {:<16} checked={}", r.suite, r.instance, r.checked);
    }
    match reports.iter().find(|r| !r.passed()) {
        Some(first) => {
            println!("counterexample: {}", serde_json::to_string(first)?);
            Ok(false)
        }
        None => Ok(true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            algo,
            horizon,
            seed,
            out,
        } => run(config, algo, horizon, seed, out).map(|()| true),
        Command::Sweep { config, out, workers } => sweep(config, out, workers).map(|()| true),
        Command::Verify {
            level,
            instance,
            seed,
            gamma_scale,
        } => verify(level, instance, seed, gamma_scale),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
