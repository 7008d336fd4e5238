// SPDX-License-Identifier: Apache-2.0

//! Regret and violation metrics, the hindsight comparator, closed-form
//! evaluators for the regret/violation guarantees, and checkers for the
//! error-bound and Polyak-contraction properties.

use serde::{Deserialize, Serialize};

use crate::algorithms::{PfsConfig, RoundLog};
use crate::error::{Error, Result};
use crate::geometry::{project_ball, project_box, Point, ZERO_NORM};
use crate::problem::{ConstraintModel, ProblemInstance};

/// Accuracy target of the polytope distance oracle.
pub const DISTANCE_TOL: f64 = 1e-10;
/// Sweep cap for the alternating-projection oracle.
pub const MAX_SWEEPS: usize = 100_000;
/// Stopping threshold on the gradient mapping of the hindsight solver.
pub const HINDSIGHT_TOL: f64 = 1e-8;
pub const HINDSIGHT_MAX_ITERS: usize = 100_000;

/// Aggregate outcome of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub regret: f64,
    /// `Σ g(x_t)`
    pub cum_violation: f64,
    /// `Σ [g(x_t)]₊`
    pub cum_pos_violation: f64,
    /// `max_t g(x_t)`
    pub max_violation: f64,
    /// Smallest `t₀` with `g(x_t) ≤ 0` for all `t ≥ t₀`; `None` if the last round violates.
    pub first_feasible_round: Option<usize>,
}

pub fn compute_metrics(logs: &[RoundLog], instance: &ProblemInstance, x_star: &Point) -> Result<Metrics> {
    let mut played = 0.0;
    let mut comparator = 0.0;
    let mut cum_violation = 0.0;
    let mut cum_pos_violation = 0.0;
    let mut max_violation = f64::NEG_INFINITY;
    for log in logs {
        played += log.cost_value;
        comparator += instance.costs.value(log.t, x_star)?;
        cum_violation += log.g_value;
        cum_pos_violation += log.g_value.max(0.0);
        max_violation = max_violation.max(log.g_value);
    }
    let first_feasible_round = match logs.iter().rposition(|l| l.g_value > 0.0) {
        None if logs.is_empty() => None,
        None => Some(logs[0].t),
        Some(last) if last + 1 < logs.len() => Some(logs[last + 1].t),
        Some(_) => None,
    };
    Ok(Metrics {
        regret: played - comparator,
        cum_violation,
        cum_pos_violation,
        max_violation,
        first_feasible_round,
    })
}

/// Euclidean projection onto `{x : g(x) ≤ −rho}`.
///
/// Box-shaped constraints are clamped exactly; general polytopes use Dykstra's
/// alternating projections over the row halfspaces.
pub fn project_sublevel(x: &Point, model: &ConstraintModel, rho: f64) -> Result<Point> {
    x.ensure_dim(model.dim(), "point")?;
    x.ensure_finite("point")?;
    if model.value(x) <= -rho {
        return Ok(x.clone());
    }
    if let Some((lo, hi)) = model.as_box() {
        let lo = Point::new(lo.coords().iter().map(|l| l + rho).collect());
        let hi = Point::new(hi.coords().iter().map(|h| h - rho).collect());
        if (0..x.dim()).any(|i| lo[i] > hi[i]) {
            return Err(Error::InfeasibleLevel { rho });
        }
        return project_box(x, &lo, &hi);
    }
    dykstra(x, model, rho)
}

fn dykstra(x0: &Point, model: &ConstraintModel, rho: f64) -> Result<Point> {
    let mut rows = Vec::with_capacity(model.rows().len());
    for (a, b) in model.rows() {
        let n2 = a.norm_sq();
        if n2.sqrt() < ZERO_NORM {
            if -b > -rho {
                return Err(Error::InfeasibleLevel { rho });
            }
            continue;
        }
        rows.push((a, b - rho, n2));
    }
    let d = x0.dim();
    let mut x = x0.coords().to_vec();
    let mut incr = vec![vec![0.0; d]; rows.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for ((a, c, n2), e) in rows.iter().zip(incr.iter_mut()) {
            let z: Vec<f64> = x.iter().zip(e.iter()).map(|(xi, ei)| xi + ei).collect();
            let excess = a.coords().iter().zip(&z).map(|(ai, zi)| ai * zi).sum::<f64>() - c;
            let k = if excess > 0.0 { excess / n2 } else { 0.0 };
            for i in 0..d {
                let next = z[i] - k * a[i];
                change = change.max((next - x[i]).abs());
                let e_next = z[i] - next;
                change = change.max((e_next - e[i]).abs());
                x[i] = next;
                e[i] = e_next;
            }
        }
        residual = change;
        if change <= 1e-3 * DISTANCE_TOL {
            break;
        }
    }
    let result = Point::new(x);
    let violation = model.value(&result) + rho;
    if violation > 1e3 * DISTANCE_TOL {
        return Err(Error::InfeasibleLevel { rho });
    }
    if residual > 1e-3 * DISTANCE_TOL {
        return Err(Error::NonConvergence {
            iterations: MAX_SWEEPS,
            residual,
            last: result,
        });
    }
    Ok(result)
}

/// `dist(x, X_rho)` with `X_rho = {g ≤ −rho}`. A test oracle; the online
/// algorithms never call it.
pub fn distance_to_sublevel(x: &Point, instance: &ProblemInstance, rho: f64) -> Result<f64> {
    Ok(project_sublevel(x, &instance.constraint, rho)?.distance(x))
}

fn prefix_mean(instance: &ProblemInstance, horizon: usize) -> Result<Point> {
    if horizon == 0 || horizon > instance.horizon() {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must lie in 1..={}",
            instance.horizon()
        )));
    }
    let d = instance.dim();
    let mut acc = vec![0.0; d];
    for v in &instance.costs.targets()[..horizon] {
        for (a, c) in acc.iter_mut().zip(v.coords()) {
            *a += c;
        }
    }
    Ok(Point::new(acc.into_iter().map(|a| a / horizon as f64).collect()))
}

/// Box-constrained quadratic costs separate by coordinate, so the comparator is
/// the mean target clamped to the box. `None` when the constraint is not a box.
pub fn hindsight_closed_form(instance: &ProblemInstance, horizon: usize) -> Result<Option<Point>> {
    let Some((lo, hi)) = instance.constraint.as_box() else {
        return Ok(None);
    };
    Ok(Some(project_box(&prefix_mean(instance, horizon)?, &lo, &hi)?))
}

/// Projected gradient descent on `(1/T) Σ f_t` over `{g ≤ 0}`, using only cost
/// gradient queries. Stops once the gradient mapping falls below `1e-8`.
pub fn hindsight_iterative(instance: &ProblemInstance, horizon: usize) -> Result<Point> {
    if horizon == 0 || horizon > instance.horizon() {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must lie in 1..={}",
            instance.horizon()
        )));
    }
    // the averaged objective is 2κ-smooth; half the 1/L step keeps it a genuine iteration
    let step = 1.0 / (4.0 * instance.costs.scale());
    let model = &instance.constraint;
    let mut x = project_sublevel(&Point::zeros(instance.dim()), model, 0.0)?;
    let mut residual = f64::INFINITY;
    for _ in 0..HINDSIGHT_MAX_ITERS {
        let mut grad = Point::zeros(instance.dim());
        for t in 1..=horizon {
            let (_, g) = instance.costs.eval(t, &x)?;
            grad = grad.add_scaled(1.0 / horizon as f64, &g);
        }
        let next = project_sublevel(&x.add_scaled(-step, &grad), model, 0.0)?;
        residual = next.distance(&x) / step;
        x = next;
        if residual <= HINDSIGHT_TOL {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        iterations: HINDSIGHT_MAX_ITERS,
        residual,
        last: x,
    })
}

/// Best fixed feasible action over rounds `1..=horizon`.
pub fn hindsight_optimum(instance: &ProblemInstance, horizon: usize) -> Result<Point> {
    match hindsight_closed_form(instance, horizon)? {
        Some(x) => Ok(x),
        None => hindsight_iterative(instance, horizon),
    }
}

/// The two sides of an inequality `lhs ≤ rhs + tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.tolerance
    }
}

/// Error bound `dist(x, X_rho) ≤ [g(x) + rho]₊ / σ`.
pub fn check_lemma1(x: &Point, instance: &ProblemInstance, rho: f64) -> Result<BoundCheck> {
    let lhs = distance_to_sublevel(x, instance, rho)?;
    let rhs = (instance.constraint.value(x) + rho).max(0.0) / instance.sigma;
    Ok(BoundCheck {
        lhs,
        rhs,
        tolerance: 1e-9,
    })
}

/// Polyak contraction `dist²(x⁺, X_rho) ≤ γ·dist²(x, X_rho)` for the exact step
/// `x⁺ = Π_{R·Ball}(x − [g(x)+rho]₊/‖s‖²·s)`. `None` when the subgradient is zero.
pub fn check_lemma2(x: &Point, instance: &ProblemInstance, rho: f64) -> Result<Option<BoundCheck>> {
    check_lemma2_with_gamma(x, instance, rho, instance.gamma())
}

/// [`check_lemma2`] against an arbitrary contraction factor.
pub fn check_lemma2_with_gamma(
    x: &Point,
    instance: &ProblemInstance,
    rho: f64,
    gamma: f64,
) -> Result<Option<BoundCheck>> {
    let (g, s) = instance.constraint.eval(x)?;
    let s_sq = s.norm_sq();
    if s_sq.sqrt() < ZERO_NORM {
        return Ok(None);
    }
    let next = project_ball(&x.add_scaled(-(g + rho).max(0.0) / s_sq, &s), instance.radius)?;
    let before = distance_to_sublevel(x, instance, rho)?;
    let after = distance_to_sublevel(&next, instance, rho)?;
    Ok(Some(BoundCheck {
        lhs: after * after,
        rhs: gamma * before * before,
        tolerance: 1e-9,
    }))
}

/// Right-hand sides of the regret and violation guarantees for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `2R²/η + (η/2)G_f²T + (G_f ρ/σ)T`
    pub thm1_regret_bound: f64,
    pub cor2_feasible_after: usize,
    /// `√T ≥ 4RG_g/(εξ)`
    pub cor2_cumulative_condition: bool,
    /// `dist(x₁, X_ρ)` as evaluated by the distance oracle.
    pub initial_distance: f64,
    eta: f64,
    rho: f64,
    gamma: f64,
    radius: f64,
    cost_grad_bound: f64,
    constraint_grad_bound: f64,
    sigma: f64,
    horizon: usize,
}

impl BoundReport {
    fn violation_bound(&self, t: usize, distance: f64) -> f64 {
        let decay = self.gamma.powf((t as f64 - 1.0) / 2.0);
        self.constraint_grad_bound * decay * distance
            + self.eta * self.constraint_grad_bound * self.cost_grad_bound / (1.0 - self.gamma.sqrt())
            - self.rho
    }

    /// `G_g γ^{(t−1)/2} dist(x₁, X_ρ) + η G_g G_f/(1 − √γ) − ρ`
    pub fn thm1_violation_bound(&self, t: usize) -> f64 {
        self.violation_bound(t, self.initial_distance)
    }

    /// Same bound with `dist(x₁, X_ρ)` replaced by the diameter `2R`.
    pub fn thm1_violation_bound_coarse(&self, t: usize) -> f64 {
        self.violation_bound(t, 2.0 * self.radius)
    }

    pub fn cor3_violation_bound(&self, t: usize) -> f64 {
        cor3_formula(
            self.radius,
            self.constraint_grad_bound,
            self.sigma,
            1.0 - self.gamma.sqrt(),
            self.horizon,
            t,
        )
    }
}

pub fn theorem1_bounds(instance: &ProblemInstance, config: &PfsConfig, horizon: usize) -> Result<BoundReport> {
    config.validate(instance)?;
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    let t = horizon as f64;
    let (eta, rho) = (config.eta, config.rho);
    let thm1_regret_bound = 2.0 * instance.radius.powi(2) / eta
        + 0.5 * eta * instance.cost_grad_bound.powi(2) * t
        + instance.cost_grad_bound * rho / instance.sigma * t;
    let (cor2_feasible_after, cor2_cumulative_condition) = cor2_report(instance, horizon)?;
    Ok(BoundReport {
        thm1_regret_bound,
        cor2_feasible_after,
        cor2_cumulative_condition,
        initial_distance: distance_to_sublevel(&config.x1, instance, rho)?,
        eta,
        rho,
        gamma: instance.gamma(),
        radius: instance.radius,
        cost_grad_bound: instance.cost_grad_bound,
        constraint_grad_bound: instance.constraint_grad_bound,
        sigma: instance.sigma,
        horizon,
    })
}

/// Round after which the untightened-start preset is feasible, and whether its
/// cumulative guarantee applies. Logarithms are natural.
pub fn cor2_report(instance: &ProblemInstance, horizon: usize) -> Result<(usize, bool)> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    let sqrt_t = (horizon as f64).sqrt();
    let gg = instance.constraint_grad_bound;
    let threshold = 1.0
        + 2.0 * gg * gg / (instance.sigma * instance.sigma)
            * (4.0 * gg * instance.radius * sqrt_t / instance.epsilon).ln();
    let feasible_after = threshold.ceil().max(1.0) as usize;
    let cumulative_ok = sqrt_t >= 4.0 * instance.radius * gg / (instance.epsilon * instance.xi());
    Ok((feasible_after, cumulative_ok))
}

fn cor3_formula(radius: f64, gg: f64, sigma: f64, xi: f64, horizon: usize, t: usize) -> f64 {
    2.0 * radius * gg * (-(sigma * sigma) * (t as f64 - 1.0) / (2.0 * gg * gg)).exp()
        + 2.0 * radius * gg / (xi * (horizon as f64).sqrt())
}

/// `2RG_g exp(−σ²(t−1)/(2G_g²)) + 2RG_g/(ξ√T)`
pub fn cor3_violation_bound(instance: &ProblemInstance, horizon: usize, t: usize) -> Result<f64> {
    if t == 0 || t > horizon {
        return Err(Error::InvalidRound { t, horizon });
    }
    Ok(cor3_formula(
        instance.radius,
        instance.constraint_grad_bound,
        instance.sigma,
        instance.xi(),
        horizon,
        t,
    ))
}

/// `2RG_f√T`
pub fn cor3_regret_bound(instance: &ProblemInstance, horizon: usize) -> f64 {
    2.0 * instance.radius * instance.cost_grad_bound * (horizon as f64).sqrt()
}
