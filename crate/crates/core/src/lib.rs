// SPDX-License-Identifier: Apache-2.0

//! Constrained online convex optimization with Polyak feasibility steps.
//!
//! Each round the learner plays `x_t`, observes the cost `f_t` and a single
//! constraint query `(g(x_t), s_t ∈ ∂g(x_t))`, takes a gradient step on the cost
//! and then a Polyak-style subgradient step on a linearized, tightened version of
//! the constraint. With the right step size and tightening this keeps every
//! played action feasible while retaining `O(√T)` regret.
//!
//! The crate also ships a drift-plus-penalty baseline, evaluators for the
//! regret/violation guarantees, and property checkers used by the `verify` suites.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod analysis;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod problem;
pub mod verify;

pub use algorithms::{
    pfs_step, preset_cor1, preset_cor2, preset_cor3, preset_dpp, run_dpp, run_pfs, DppConfig, PfsConfig, RoundLog,
};
pub use analysis::{compute_metrics, hindsight_optimum, BoundReport, Metrics};
pub use error::{Error, Result};
pub use geometry::{project_ball, project_box, project_halfspace, Halfspace, Point};
pub use problem::{
    generate_cost_stream, make_paper_instance, ConstraintModel, ConstraintOracle, CostStream, InstanceDescription,
    ProblemInstance,
};
