// SPDX-License-Identifier: Apache-2.0

//! Seeded trials and the (algorithm × horizon × trial) sweep.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{preset_cor1, preset_cor2, preset_cor3, preset_dpp, run_dpp, run_pfs, RoundLog};
use crate::analysis::{compute_metrics, hindsight_optimum, Metrics};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::problem::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "PFS-Cor1")]
    PfsCor1,
    #[serde(rename = "PFS-Cor2")]
    PfsCor2,
    #[serde(rename = "PFS-Cor3")]
    PfsCor3,
    #[serde(rename = "DPP")]
    Dpp,
    #[serde(rename = "DPP-T")]
    DppT,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::PfsCor1,
        Algorithm::PfsCor2,
        Algorithm::PfsCor3,
        Algorithm::Dpp,
        Algorithm::DppT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PfsCor1 => "PFS-Cor1",
            Algorithm::PfsCor2 => "PFS-Cor2",
            Algorithm::PfsCor3 => "PFS-Cor3",
            Algorithm::Dpp => "DPP",
            Algorithm::DppT => "DPP-T",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown algorithm {s:?}; expected one of PFS-Cor1, PFS-Cor2, PFS-Cor3, DPP, DPP-T"
                ))
            })
    }
}

/// Knobs shared by all algorithms of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    /// Strict-feasibility margin of `x1` for the anytime-feasible preset.
    pub alpha: f64,
    /// Tightening constant of DPP-T, `rho = min(ε, c/√T)`.
    pub c: f64,
    /// Initial action for the PFS presets; the origin when absent.
    pub x1: Option<Point>,
}

impl Default for AlgoParams {
    fn default() -> Self {
        AlgoParams {
            alpha: 0.25,
            c: 20.0,
            x1: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub logs: Vec<RoundLog>,
    pub x_star: Point,
    pub metrics: Metrics,
}

/// Runs one algorithm on `instance` (whose cost stream must cover `horizon`).
pub fn run_algorithm(
    instance: &ProblemInstance,
    algorithm: Algorithm,
    horizon: usize,
    params: &AlgoParams,
) -> Result<Vec<RoundLog>> {
    let x1 = params.x1.clone().unwrap_or_else(|| Point::zeros(instance.dim()));
    match algorithm {
        Algorithm::PfsCor1 => run_pfs(instance, &preset_cor1(instance, params.alpha, horizon, x1)?, horizon),
        Algorithm::PfsCor2 => run_pfs(instance, &preset_cor2(instance, horizon, x1)?, horizon),
        Algorithm::PfsCor3 => run_pfs(instance, &preset_cor3(instance, horizon, x1)?, horizon),
        Algorithm::Dpp => run_dpp(instance, &preset_dpp(instance, horizon, false, params.c)?, horizon),
        Algorithm::DppT => run_dpp(instance, &preset_dpp(instance, horizon, true, params.c)?, horizon),
    }
}

/// Regenerates the cost stream from `seed`, runs the algorithm and scores it
/// against the hindsight optimum of the full horizon.
pub fn run_trial(
    base: &ProblemInstance,
    algorithm: Algorithm,
    horizon: usize,
    seed: u64,
    params: &AlgoParams,
) -> Result<TrialOutcome> {
    let instance = base.with_costs(seed, horizon)?;
    let logs = run_algorithm(&instance, algorithm, horizon, params)?;
    let x_star = hindsight_optimum(&instance, horizon)?;
    let metrics = compute_metrics(&logs, &instance, &x_star)?;
    Ok(TrialOutcome { logs, x_star, metrics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub horizons: Vec<usize>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub base_seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_c")]
    pub c: f64,
}

fn default_alpha() -> f64 {
    AlgoParams::default().alpha
}

fn default_c() -> f64 {
    AlgoParams::default().c
}

impl SweepConfig {
    /// `T = 2000, 4000, …, 20000`, 30 trials, PFS (anytime preset), DPP and DPP-T.
    pub fn default_grid(base_seed: u64) -> Self {
        SweepConfig {
            horizons: (1..=10).map(|k| 2000 * k).collect(),
            trials: 30,
            algorithms: vec![Algorithm::PfsCor1, Algorithm::Dpp, Algorithm::DppT],
            base_seed,
            alpha: default_alpha(),
            c: default_c(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "horizons must be nonempty and strictly increasing".into(),
            ));
        }
        if self.horizons[0] == 0 {
            return Err(Error::InvalidInput("horizons must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidInput("at least one algorithm is required".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> AlgoParams {
        AlgoParams {
            alpha: self.alpha,
            c: self.c,
            x1: None,
        }
    }

    /// Seed of trial `index` (0-based).
    pub fn trial_seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub trials: usize,
    pub regret: Stat,
    pub cum_violation: Stat,
    pub cum_pos_violation: Stat,
    pub max_violation: Stat,
    /// Trials whose last round violates count as `T + 1`.
    pub first_feasible_round: Stat,
    pub never_feasible: usize,
}

impl SummaryRow {
    fn aggregate(algorithm: Algorithm, horizon: usize, metrics: &[Metrics]) -> Self {
        let col = |f: &dyn Fn(&Metrics) -> f64| Stat::of(&metrics.iter().map(f).collect::<Vec<_>>());
        SummaryRow {
            algorithm,
            horizon,
            trials: metrics.len(),
            regret: col(&|m| m.regret),
            cum_violation: col(&|m| m.cum_violation),
            cum_pos_violation: col(&|m| m.cum_pos_violation),
            max_violation: col(&|m| m.max_violation),
            first_feasible_round: col(&|m| m.first_feasible_round.unwrap_or(horizon + 1) as f64),
            never_feasible: metrics.iter().filter(|m| m.first_feasible_round.is_none()).count(),
        }
    }
}

/// Runs every cell of the grid, in parallel on `workers` threads (rayon's default
/// when `None`), and summarizes per `(algorithm, T)` in config order. Cells are
/// independent and deterministic, so the result does not depend on `workers`.
pub fn run_sweep(base: &ProblemInstance, config: &SweepConfig, workers: Option<usize>) -> Result<Vec<SummaryRow>> {
    config.validate()?;
    let params = config.params();
    let cells: Vec<(Algorithm, usize, usize)> = config
        .algorithms
        .iter()
        .flat_map(|&a| {
            config
                .horizons
                .iter()
                .flat_map(move |&t| (0..config.trials).map(move |k| (a, t, k)))
        })
        .collect();
    let run_cells = || -> Result<Vec<Metrics>> {
        cells
            .par_iter()
            .map(|&(a, t, k)| run_trial(base, a, t, config.trial_seed(k), &params).map(|o| o.metrics))
            .collect()
    };
    let metrics = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?
            .install(run_cells)?,
        None => run_cells()?,
    };
    Ok(metrics
        .chunks(config.trials)
        .zip(cells.chunks(config.trials))
        .map(|(m, c)| SummaryRow::aggregate(c[0].0, c[0].1, m))
        .collect())
}
