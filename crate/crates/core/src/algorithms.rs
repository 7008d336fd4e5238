// SPDX-License-Identifier: Apache-2.0

//! Online gradient descent with Polyak feasibility steps, its parameter
//! presets, and the drift-plus-penalty baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project_ball, Point, ZERO_NORM};
use crate::problem::{ConstraintOracle, ProblemInstance};

/// Slack allowed when checking that an initial action lies in `R·Ball`.
const BALL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfsConfig {
    pub eta: f64,
    pub rho: f64,
    pub x1: Point,
}

impl PfsConfig {
    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta = {} must be positive", self.eta)));
        }
        if !(0.0..=instance.epsilon).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!(
                "rho = {} must lie in [0, epsilon = {}]",
                self.rho, instance.epsilon
            )));
        }
        check_initial_action(&self.x1, instance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DppConfig {
    /// Proximal weight of the primal update.
    pub alpha: f64,
    /// Penalty weight on the cost gradient.
    pub v: f64,
    pub rho: f64,
    pub x1: Point,
    pub q1: f64,
}

impl DppConfig {
    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        if !(self.alpha > 0.0 && self.v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} and V = {} must be positive",
                self.alpha, self.v
            )));
        }
        if !(self.q1 >= 0.0 && self.rho >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "q1 = {} and rho = {} must be nonnegative",
                self.q1, self.rho
            )));
        }
        check_initial_action(&self.x1, instance)
    }
}

fn check_initial_action(x1: &Point, instance: &ProblemInstance) -> Result<()> {
    x1.ensure_dim(instance.dim(), "initial action")?;
    x1.ensure_finite("initial action")?;
    if x1.norm() > instance.radius * (1.0 + BALL_SLACK) {
        return Err(Error::Precondition(format!(
            "initial action has norm {} > R = {}",
            x1.norm(),
            instance.radius
        )));
    }
    Ok(())
}

/// What happened in one round: the played action and the feedback it got.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub t: usize,
    pub x: Point,
    pub cost_value: f64,
    pub g_value: f64,
    /// Step length applied to the cost gradient this round.
    pub eta_effective: f64,
    /// Virtual queue before the update (drift-plus-penalty only).
    pub queue: Option<f64>,
}

/// One round of the update: a gradient step on the cost, then a Polyak step on the
/// linearized tightened constraint, then projection onto `R·Ball`.
///
/// A subgradient with norm below `1e-15` skips the feasibility step.
pub fn pfs_step(x_t: &Point, grad_f: &Point, g_t: f64, s_t: &Point, eta: f64, rho: f64, radius: f64) -> Result<Point> {
    x_t.ensure_finite("action")?;
    grad_f.ensure_finite("cost gradient")?;
    s_t.ensure_finite("constraint subgradient")?;
    if !g_t.is_finite() {
        return Err(Error::InvalidInput("constraint value is not finite".into()));
    }
    if !(eta > 0.0) || !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} must be positive and rho = {rho} nonnegative"
        )));
    }
    let y = x_t.add_scaled(-eta, grad_f);
    let s_sq = s_t.norm_sq();
    if s_sq.sqrt() < ZERO_NORM {
        return project_ball(&y, radius);
    }
    let linearized = g_t + s_t.dot(&(&y - x_t)) + rho;
    let step = linearized.max(0.0) / s_sq;
    project_ball(&y.add_scaled(-step, s_t), radius)
}

/// Runs the algorithm for `horizon` rounds against the instance's own constraint.
pub fn run_pfs(instance: &ProblemInstance, config: &PfsConfig, horizon: usize) -> Result<Vec<RoundLog>> {
    run_pfs_with_oracle(instance, config, horizon, &instance.constraint)
}

/// As [`run_pfs`], with constraint feedback drawn from `oracle`. Exactly one query
/// is made per round, at the played action.
pub fn run_pfs_with_oracle<O: ConstraintOracle + ?Sized>(
    instance: &ProblemInstance,
    config: &PfsConfig,
    horizon: usize,
    oracle: &O,
) -> Result<Vec<RoundLog>> {
    config.validate(instance)?;
    check_horizon(instance, horizon)?;
    let mut x = config.x1.clone();
    let mut logs = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let (cost_value, grad) = instance.costs.eval(t, &x)?;
        let (g_t, s_t) = oracle.query(&x)?;
        let next = pfs_step(&x, &grad, g_t, &s_t, config.eta, config.rho, instance.radius)?;
        logs.push(RoundLog {
            t,
            x,
            cost_value,
            g_value: g_t,
            eta_effective: config.eta,
            queue: None,
        });
        x = next;
    }
    Ok(logs)
}

fn check_horizon(instance: &ProblemInstance, horizon: usize) -> Result<()> {
    if horizon == 0 || horizon > instance.horizon() {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must lie in 1..={} (length of the cost stream)",
            instance.horizon()
        )));
    }
    Ok(())
}

/// Strictly feasible start with margin `alpha`: `rho = alpha/√T`, `eta = ξ·rho/(G_f·G_g)`.
/// Keeps every played action feasible.
pub fn preset_cor1(instance: &ProblemInstance, alpha: f64, horizon: usize, x1: Point) -> Result<PfsConfig> {
    if !(alpha > 0.0 && alpha <= instance.epsilon) {
        return Err(Error::Precondition(format!(
            "alpha = {alpha} must lie in (0, epsilon = {}]",
            instance.epsilon
        )));
    }
    x1.ensure_dim(instance.dim(), "initial action")?;
    let g1 = instance.constraint.value(&x1);
    if g1 > -alpha {
        return Err(Error::Precondition(format!(
            "initial action has g = {g1}, which is not <= -alpha = {}",
            -alpha
        )));
    }
    let rho = alpha / (horizon as f64).sqrt();
    let eta = instance.xi() * rho / (instance.cost_grad_bound * instance.constraint_grad_bound);
    let config = PfsConfig { eta, rho, x1 };
    config.validate(instance)?;
    Ok(config)
}

/// Arbitrary start in `R·Ball`: `eta = ξε/(2 G_f G_g √T)`, `rho = ε/√T`.
pub fn preset_cor2(instance: &ProblemInstance, horizon: usize, x1: Point) -> Result<PfsConfig> {
    let sqrt_t = (horizon as f64).sqrt();
    let eta =
        instance.xi() * instance.epsilon / (2.0 * instance.cost_grad_bound * instance.constraint_grad_bound * sqrt_t);
    let rho = (instance.epsilon / sqrt_t).min(instance.epsilon);
    let config = PfsConfig { eta, rho, x1 };
    config.validate(instance)?;
    Ok(config)
}

/// No tightening: `eta = 2R/(G_f √T)`, `rho = 0`.
pub fn preset_cor3(instance: &ProblemInstance, horizon: usize, x1: Point) -> Result<PfsConfig> {
    let eta = 2.0 * instance.radius / (instance.cost_grad_bound * (horizon as f64).sqrt());
    let config = PfsConfig { eta, rho: 0.0, x1 };
    config.validate(instance)?;
    Ok(config)
}

/// Drift-plus-penalty baseline. Per round, with `(g_t, s_t)` queried at `x_t`:
///
/// ```text
/// x_{t+1} = Π_{R·Ball}(x_t − (V·∇f_t(x_t) + Q_t·s_t) / (2α))
/// Q_{t+1} = max(Q_t + g(x_{t+1}) + ρ, 0)
/// ```
///
/// The queue update queries the constraint a second time, at `x_{t+1}`.
pub fn run_dpp(instance: &ProblemInstance, config: &DppConfig, horizon: usize) -> Result<Vec<RoundLog>> {
    run_dpp_with_oracle(instance, config, horizon, &instance.constraint)
}

pub fn run_dpp_with_oracle<O: ConstraintOracle + ?Sized>(
    instance: &ProblemInstance,
    config: &DppConfig,
    horizon: usize,
    oracle: &O,
) -> Result<Vec<RoundLog>> {
    config.validate(instance)?;
    check_horizon(instance, horizon)?;
    let step = 1.0 / (2.0 * config.alpha);
    let mut x = config.x1.clone();
    let mut queue = config.q1;
    let mut logs = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let (cost_value, grad) = instance.costs.eval(t, &x)?;
        let (g_t, s_t) = oracle.query(&x)?;
        let direction = grad.scale(config.v).add_scaled(queue, &s_t);
        let next = project_ball(&x.add_scaled(-step, &direction), instance.radius)?;
        let (g_next, _) = oracle.query(&next)?;
        logs.push(RoundLog {
            t,
            x,
            cost_value,
            g_value: g_t,
            eta_effective: config.v * step,
            queue: Some(queue),
        });
        queue = (queue + g_next + config.rho).max(0.0);
        x = next;
    }
    Ok(logs)
}

/// `alpha = T`, `V = √T`, `Q_1 = 0`, start at the origin; tightened runs use
/// `rho = min(ε, c/√T)`.
pub fn preset_dpp(instance: &ProblemInstance, horizon: usize, tightened: bool, c: f64) -> Result<DppConfig> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    let sqrt_t = (horizon as f64).sqrt();
    let rho = if tightened {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tightening constant c = {c} must be positive"
            )));
        }
        instance.epsilon.min(c / sqrt_t)
    } else {
        0.0
    };
    Ok(DppConfig {
        alpha: horizon as f64,
        v: sqrt_t,
        rho,
        x1: Point::zeros(instance.dim()),
        q1: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project_halfspace, Halfspace};
    use crate::problem::{make_paper_instance, CountingOracle};
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec())
    }

    #[test]
    fn step_examples() {
        let got = pfs_step(&p(&[0.7, 0.0]), &p(&[-2.0, 0.0]), 0.2, &p(&[1.0, 0.0]), 0.1, 0.0, 1.0).unwrap();
        assert!(got.max_abs_diff(&p(&[0.5, 0.0])) < 1e-15);
        let h = Halfspace::from_linearization(&p(&[0.7, 0.0]), 0.2, &p(&[1.0, 0.0]), 0.0).unwrap();
        let composed = project_ball(&project_halfspace(&p(&[0.9, 0.0]), &h).unwrap(), 1.0).unwrap();
        assert!(got.max_abs_diff(&composed) < 1e-15);

        let got = pfs_step(&p(&[0.0, 0.0]), &p(&[1.0, 0.0]), -0.5, &p(&[1.0, 0.0]), 0.1, 0.0, 1.0).unwrap();
        assert_eq!(got, p(&[-0.1, 0.0]));

        let got = pfs_step(&p(&[0.0, 0.0]), &p(&[1.0, 0.0]), 0.3, &p(&[0.0, 0.0]), 0.1, 0.0, 1.0).unwrap();
        assert_eq!(got, p(&[-0.1, 0.0]));
    }

    #[test]
    fn step_projects_onto_ball() {
        let got = pfs_step(&p(&[0.9, 0.0]), &p(&[-5.0, 0.0]), -1.0, &p(&[0.0, 0.0]), 0.1, 0.0, 1.0).unwrap();
        assert_eq!(got, p(&[1.0, 0.0]));
    }

    #[test]
    fn step_rejects_nonfinite() {
        assert!(pfs_step(
            &p(&[f64::NAN, 0.0]),
            &p(&[0.0, 0.0]),
            0.0,
            &p(&[1.0, 0.0]),
            0.1,
            0.0,
            1.0
        )
        .is_err());
        assert!(pfs_step(
            &p(&[0.0, 0.0]),
            &p(&[0.0, 0.0]),
            f64::INFINITY,
            &p(&[1.0, 0.0]),
            0.1,
            0.0,
            1.0
        )
        .is_err());
        assert!(pfs_step(&p(&[0.0, 0.0]), &p(&[0.0, 0.0]), 0.0, &p(&[1.0, 0.0]), 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn first_round_plays_x1() {
        let inst = make_paper_instance(3, 1).unwrap();
        let cfg = PfsConfig {
            eta: 0.1,
            rho: 0.0,
            x1: p(&[0.2, -0.1]),
        };
        let logs = run_pfs(&inst, &cfg, 1).unwrap();
        assert_eq!(logs.len(), 1);
        assert_eq!(logs[0].t, 1);
        assert_eq!(logs[0].x, p(&[0.2, -0.1]));
    }

    #[test]
    fn runs_are_replayable() {
        let inst = make_paper_instance(11, 500).unwrap();
        let cfg = preset_cor1(&inst, 0.25, 500, Point::zeros(2)).unwrap();
        assert_eq!(run_pfs(&inst, &cfg, 500).unwrap(), run_pfs(&inst, &cfg, 500).unwrap());
        let dpp = preset_dpp(&inst, 500, false, 20.0).unwrap();
        assert_eq!(run_dpp(&inst, &dpp, 500).unwrap(), run_dpp(&inst, &dpp, 500).unwrap());
    }

    #[test]
    fn oracle_queried_once_per_round_at_played_action() {
        let inst = make_paper_instance(5, 300).unwrap();
        let cfg = preset_cor3(&inst, 300, p(&[0.7, 0.7])).unwrap();
        let counter = CountingOracle::new(&inst.constraint);
        let logs = run_pfs_with_oracle(&inst, &cfg, 300, &counter).unwrap();
        assert_eq!(counter.calls(), 300);
        let queried = counter.into_queries();
        assert!(logs.iter().zip(&queried).all(|(log, q)| &log.x == q));
    }

    #[test]
    fn dpp_uses_two_queries_per_round() {
        let inst = make_paper_instance(5, 100).unwrap();
        let cfg = preset_dpp(&inst, 100, true, 20.0).unwrap();
        let counter = CountingOracle::new(&inst.constraint);
        run_dpp_with_oracle(&inst, &cfg, 100, &counter).unwrap();
        assert_eq!(counter.calls(), 200);
    }

    #[test]
    fn pfs_iterates_stay_in_ball() {
        let inst = make_paper_instance(2, 1000).unwrap();
        let cfg = PfsConfig {
            eta: 0.3,
            rho: 0.0,
            x1: p(&[0.0, 1.0]),
        };
        for log in run_pfs(&inst, &cfg, 1000).unwrap() {
            assert!(log.x.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn cor1_preset_values() {
        let inst = make_paper_instance(1, 1).unwrap();
        let xi = 1.0 - 0.5f64.sqrt();
        let c = preset_cor1(&inst, 0.25, 10_000, Point::zeros(2)).unwrap();
        assert!((c.rho - 0.0025).abs() < 1e-15);
        assert!((c.eta - xi * 0.0025 / 2f64.sqrt()).abs() < 1e-15);
        assert!((c.eta - 5.1777e-4).abs() < 1e-8);
        let c = preset_cor1(&inst, 0.25, 4, Point::zeros(2)).unwrap();
        assert!((c.rho - 0.125).abs() < 1e-15);
        assert!((c.eta - xi * 0.125 / 2f64.sqrt()).abs() < 1e-15);
        assert!((c.eta - 0.02589).abs() < 1e-5);
        assert!(matches!(
            preset_cor1(&inst, 0.3, 4, Point::zeros(2)),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            preset_cor1(&inst, 0.25, 4, p(&[0.4, 0.0])),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn cor2_preset_values() {
        let inst = make_paper_instance(1, 1).unwrap();
        let xi = 1.0 - 0.5f64.sqrt();
        let c = preset_cor2(&inst, 10_000, Point::zeros(2)).unwrap();
        assert!((c.rho - 0.0025).abs() < 1e-15);
        assert!((c.eta - 2.5889e-4).abs() < 1e-8);
        let c = preset_cor2(&inst, 1, p(&[0.6, 0.8])).unwrap();
        assert_eq!(c.rho, 0.25);
        assert!((c.eta - xi * 0.25 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        for t in [1, 2, 3, 17, 1000, 1 << 20] {
            assert!(preset_cor2(&inst, t, Point::zeros(2)).unwrap().rho <= inst.epsilon);
        }
        assert!(preset_cor2(&inst, 10, p(&[1.0, 1.0])).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cor3_preset_values() {
        let inst = make_paper_instance(1, 1).unwrap();
        let c = preset_cor3(&inst, 10_000, Point::zeros(2)).unwrap();
        assert!((c.eta - 0.0141421).abs() < 1e-7);
        assert_eq!(c.rho, 0.0);
        let c = preset_cor3(&inst, 4, Point::zeros(2)).unwrap();
        assert!((c.eta - 0.7071).abs() < 1e-4);
        assert_eq!(c.rho, 0.0);
    }

    #[test]
    fn dpp_preset_values() {
        let inst = make_paper_instance(1, 1).unwrap();
        assert!((preset_dpp(&inst, 10_000, true, 20.0).unwrap().rho - 0.2).abs() < 1e-15);
        assert_eq!(preset_dpp(&inst, 2000, true, 20.0).unwrap().rho, 0.25);
        let plain = preset_dpp(&inst, 10_000, false, 20.0).unwrap();
        assert_eq!(plain.rho, 0.0);
        assert_eq!(plain.alpha, 10_000.0);
        assert_eq!(plain.v, 100.0);
        assert_eq!(plain.q1, 0.0);
        assert!(preset_dpp(&inst, 100, true, 0.0).is_err());
    }

    #[test]
    fn dpp_first_update_is_scaled_gradient_step() {
        let inst = make_paper_instance(4, 10).unwrap();
        let cfg = preset_dpp(&inst, 10, false, 20.0).unwrap();
        let logs = run_dpp(&inst, &cfg, 2).unwrap();
        let (_, grad) = inst.costs.eval(1, &cfg.x1).unwrap();
        let expected = project_ball(&cfg.x1.add_scaled(-cfg.v / (2.0 * cfg.alpha), &grad), 1.0).unwrap();
        assert_eq!(logs[0].queue, Some(0.0));
        assert!(logs[1].x.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn dpp_queue_stays_empty_while_strictly_feasible() {
        let inst = make_paper_instance(4, 10_000).unwrap();
        let cfg = preset_dpp(&inst, 10_000, true, 20.0).unwrap();
        let logs = run_dpp(&inst, &cfg, 50).unwrap();
        for w in logs.windows(2) {
            if w[1].g_value <= -cfg.rho && w[0].queue == Some(0.0) {
                assert_eq!(w[1].queue, Some(0.0));
            }
        }
        assert!(logs[..10].iter().all(|l| l.queue == Some(0.0)));
    }

    #[test]
    fn horizon_must_fit_cost_stream() {
        let inst = make_paper_instance(4, 10).unwrap();
        let cfg = preset_cor3(&inst, 10, Point::zeros(2)).unwrap();
        assert!(run_pfs(&inst, &cfg, 11).is_err());
        assert!(run_pfs(&inst, &cfg, 0).is_err());
    }

    fn step_inputs() -> impl Strategy<Value = (Point, Point, f64, Point, f64, f64)> {
        (
            prop::collection::vec(-0.7..0.7f64, 2),
            prop::collection::vec(-6.0..6.0f64, 2),
            -1.0..1.0f64,
            prop::collection::vec(-2.0..2.0f64, 2),
            1e-4..0.5f64,
            0.0..0.25f64,
        )
            .prop_filter("nonzero subgradient", |(_, _, _, s, _, _)| {
                Point::new(s.clone()).norm() > 1e-3
            })
            .prop_map(|(x, g, gt, s, eta, rho)| (Point::new(x), Point::new(g), gt, Point::new(s), eta, rho))
    }

    proptest! {
        #[test]
        fn hinge_update_equals_projection_composition((x, grad, g_t, s, eta, rho) in step_inputs()) {
            let got = pfs_step(&x, &grad, g_t, &s, eta, rho, 1.0).unwrap();
            let y = x.add_scaled(-eta, &grad);
            let h = Halfspace::from_linearization(&x, g_t, &s, rho).unwrap();
            let composed = project_ball(&project_halfspace(&y, &h).unwrap(), 1.0).unwrap();
            prop_assert!(got.max_abs_diff(&composed) <= 1e-12);
        }

        /// The linearized halfspace contains the tightened set, so projecting onto
        /// it moves no point farther from any tightened-feasible point.
        #[test]
        fn linearized_halfspace_is_nonexpansive_toward_tightened_set(
            xt in prop::collection::vec(-1.0..1.0f64, 2),
            feas in prop::collection::vec(-0.25..0.25f64, 2),
            v in prop::collection::vec(-2.0..2.0f64, 2),
            rho in 0.0..0.25f64,
        ) {
            let inst = make_paper_instance(1, 1).unwrap();
            let xt = Point::new(xt);
            let v = Point::new(v);
            // scale into X_rho = [-(0.5 - rho), 0.5 - rho]^2
            let x = Point::new(feas).scale((0.5 - rho) / 0.25);
            prop_assume!(inst.constraint.value(&x) <= -rho);
            let (g_t, s_t) = inst.constraint.eval(&xt).unwrap();
            let h = Halfspace::from_linearization(&xt, g_t, &s_t, rho).unwrap();
            prop_assert!(h.contains(&x) || h.normal().dot(&x) - h.offset() <= 1e-12);
            prop_assert!(project_halfspace(&v, &h).unwrap().distance(&x) <= v.distance(&x) + 1e-12);
        }
    }
}
