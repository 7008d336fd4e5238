// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::geometry::Point;

/// Errors raised by the oracles, algorithms and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("round {t} is outside 1..={horizon}")]
    InvalidRound { t: usize, horizon: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("tightened sublevel set at rho = {rho} is empty")]
    InfeasibleLevel { rho: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Point,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
