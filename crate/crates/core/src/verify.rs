// SPDX-License-Identifier: Apache-2.0

//! Randomized property suites over one or more problem instances.
//!
//! Each suite samples inputs from a fixed seed, checks one guarantee on every
//! sample and stops at the first counterexample, which is kept as JSON.

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algorithms::{pfs_step, preset_cor1, preset_cor2, preset_cor3, run_pfs, PfsConfig};
use crate::analysis::{
    check_lemma1, check_lemma2_with_gamma, compute_metrics, cor2_report, cor3_regret_bound, cor3_violation_bound,
    hindsight_closed_form, hindsight_iterative, hindsight_optimum, theorem1_bounds,
};
use crate::error::Result;
use crate::geometry::{project_ball, project_halfspace, Halfspace, Point};
use crate::problem::{make_paper_instance, random_certified_polytope, seeded_rng, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    /// Samples per pointwise suite.
    pub fn samples(self) -> usize {
        match self {
            Level::Quick => 100,
            Level::Full => 10_000,
        }
    }

    /// `(η, ρ)` pairs for the regret/violation envelope suite.
    pub fn envelope_pairs(self) -> usize {
        match self {
            Level::Quick => 10,
            Level::Full => 50,
        }
    }

    /// Horizon of the corollary runs.
    pub fn corollary_horizon(self) -> usize {
        match self {
            Level::Quick => 2000,
            Level::Full => 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    /// Multiplies the contraction factor used by the Polyak-contraction suite.
    /// Values below 1 assert a stronger contraction than holds (mutation testing).
    pub gamma_scale: f64,
}

impl VerifyOptions {
    pub fn new(level: Level) -> Self {
        VerifyOptions {
            level,
            seed: 0,
            gamma_scale: 1.0,
        }
    }
}

/// An instance under test, with a strictly feasible point when one is known.
#[derive(Debug, Clone)]
pub struct Subject {
    pub label: String,
    pub instance: ProblemInstance,
    pub interior: Option<Point>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub instance: String,
    pub checked: usize,
    pub counterexample: Option<Value>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Horizon of the regret/violation envelope runs.
pub const ENVELOPE_HORIZON: usize = 2000;
/// Seeds compared by the hindsight suite.
pub const HINDSIGHT_SEEDS: u64 = 20;

/// The box experiment, plus five random certified polytopes at the full level.
pub fn default_subjects(level: Level) -> Result<Vec<Subject>> {
    let mut subjects = vec![Subject {
        label: "box".into(),
        instance: make_paper_instance(0, ENVELOPE_HORIZON)?,
        interior: Some(Point::zeros(2)),
    }];
    if level == Level::Full {
        for k in 0..5u64 {
            let d = 2 + (k as usize % 2);
            let (instance, interior) = random_certified_polytope(1000 + k, d, 3 + k as usize, ENVELOPE_HORIZON)?;
            subjects.push(Subject {
                label: format!("polytope-{k}-d{d}"),
                instance,
                interior: Some(interior),
            });
        }
    }
    Ok(subjects)
}

pub fn run_all(subjects: &[Subject], opts: &VerifyOptions) -> Result<Vec<SuiteReport>> {
    let mut reports = Vec::new();
    for s in subjects {
        reports.push(fact1_suite(s, opts)?);
        reports.push(lemma1_suite(s, opts)?);
        reports.push(lemma2_suite(s, opts)?);
        reports.push(theorem1_suite(s, opts)?);
        reports.push(cor1_suite(s, opts)?);
        reports.push(cor2_suite(s, opts)?);
        reports.push(cor3_suite(s, opts)?);
        reports.push(hindsight_suite(s, opts)?);
    }
    Ok(reports)
}

fn suite_seed(opts: &VerifyOptions, salt: u64) -> u64 {
    opts.seed.wrapping_mul(0x100_0000_01b3).wrapping_add(salt)
}

fn uniform_in_ball<R: Rng>(rng: &mut R, d: usize, radius: f64) -> Point {
    loop {
        let u = Point::new((0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect());
        if u.norm() <= 1.0 {
            return u.scale(radius);
        }
    }
}

/// Points between pairs of row normals at several radii; on the box these are
/// the diagonals, where the Polyak contraction is tight.
fn boundary_points(instance: &ProblemInstance) -> Vec<Point> {
    let rows = instance.constraint.rows();
    let mut out = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b) = (&rows[i].0, &rows[j].0);
            let dir = a.scale(1.0 / a.norm()).add_scaled(1.0 / b.norm(), b);
            if dir.norm() < 1e-6 {
                continue;
            }
            for r in [0.6, 0.8, 1.0] {
                out.push(dir.scale(r * instance.radius / dir.norm()));
            }
        }
    }
    out
}

/// Sample points: the boundary points at `rho ∈ {0, ε}`, then uniform points of
/// `R·Ball` with `rho ~ U[0, ε]`, `n` in total.
fn lemma_samples(instance: &ProblemInstance, n: usize, seed: u64) -> Vec<(Point, f64)> {
    let mut out: Vec<(Point, f64)> = boundary_points(instance)
        .into_iter()
        .flat_map(|x| [(x.clone(), 0.0), (x, instance.epsilon)])
        .take(n / 2)
        .collect();
    let mut rng = seeded_rng(seed);
    while out.len() < n {
        let x = uniform_in_ball(&mut rng, instance.dim(), instance.radius);
        out.push((x, rng.gen_range(0.0..=instance.epsilon)));
    }
    out
}

fn fact1_suite(s: &Subject, opts: &VerifyOptions) -> Result<SuiteReport> {
    let inst = &s.instance;
    let mut rng = seeded_rng(suite_seed(opts, 1));
    let n = opts.level.samples();
    for k in 0..n {
        let x = uniform_in_ball(&mut rng, inst.dim(), inst.radius);
        let grad = uniform_in_ball(&mut rng, inst.dim(), 2.0 * inst.cost_grad_bound);
        let eta = 10f64.powf(rng.gen_range(-4.0..0.0));
        let rho = rng.gen_range(0.0..=inst.epsilon);
        let (g, sub) = inst.constraint.eval(&x)?;
        let hinge = pfs_step(&x, &grad, g, &sub, eta, rho, inst.radius)?;
        let h = Halfspace::from_linearization(&x, g, &sub, rho)?;
        let composed = project_ball(&project_halfspace(&x.add_scaled(-eta, &grad), &h)?, inst.radius)?;
        let gap = hinge.max_abs_diff(&composed);
        if gap > 1e-12 {
            return Ok(SuiteReport {
                suite: "fact1-equivalence",
                instance: s.label.clone(),
                checked: k + 1,
                counterexample: Some(json!({
                    "x": x, "grad_f": grad, "g": g, "s": sub, "eta": eta, "rho": rho,
                    "hinge": hinge, "composed": composed, "gap": gap,
                })),
            });
        }
    }
    Ok(SuiteReport {
        suite: "fact1-equivalence",
        instance: s.label.clone(),
        checked: n,
        counterexample: None,
    })
}

fn lemma1_suite(s: &Subject, opts: &VerifyOptions) -> Result<SuiteReport> {
    let samples = lemma_samples(&s.instance, opts.level.samples(), suite_seed(opts, 2));
    for (k, (x, rho)) in samples.iter().enumerate() {
        let c = check_lemma1(x, &s.instance, *rho)?;
        if !c.holds() {
            return Ok(SuiteReport {
                suite: "lemma1-error-bound",
                instance: s.label.clone(),
                checked: k + 1,
                counterexample: Some(json!({ "x": x, "rho": rho, "dist": c.lhs, "bound": c.rhs })),
            });
        }
    }
    Ok(SuiteReport {
        suite: "lemma1-error-bound",
        instance: s.label.clone(),
        checked: samples.len(),
        counterexample: None,
    })
}

fn lemma2_suite(s: &Subject, opts: &VerifyOptions) -> Result<SuiteReport> {
    let samples = lemma_samples(&s.instance, opts.level.samples(), suite_seed(opts, 3));
    let gamma = opts.gamma_scale * s.instance.gamma();
    let mut checked = 0;
    for (x, rho) in &samples {
        let Some(c) = check_lemma2_with_gamma(x, &s.instance, *rho, gamma)? else {
            continue;
        };
        checked += 1;
        if !c.holds() {
            return Ok(SuiteReport {
                suite: "lemma2-contraction",
                instance: s.label.clone(),
                checked,
                counterexample: Some(json!({
                    "x": x, "rho": rho, "gamma": gamma,
                    "dist_sq_after": c.lhs, "gamma_dist_sq_before": c.rhs,
                })),
            });
        }
    }
    Ok(SuiteReport {
        suite: "lemma2-contraction",
        instance: s.label.clone(),
        checked,
        counterexample: None,
    })
}

/// Random `(η, ρ)` with `η` log-uniform in `[1e-4, 2R/(G_f√T)]` and `ρ ~ U[0, ε]`.
pub fn envelope_pairs(instance: &ProblemInstance, horizon: usize, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = seeded_rng(seed);
    let hi = (2.0 * instance.radius / (instance.cost_grad_bound * (horizon as f64).sqrt())).ln();
    let lo = 1e-4f64.ln().min(hi);
    (0..n)
        .map(|_| {
            let eta = rng.gen_range(lo..=hi).exp();
            (eta, rng.gen_range(0.0..=instance.epsilon))
        })
        .collect()
}

/// First round where a PFS run breaks the regret or per-round violation envelope.
pub fn theorem1_violation(instance: &ProblemInstance, config: &PfsConfig, horizon: usize) -> Result<Option<Value>> {
    let report = theorem1_bounds(instance, config, horizon)?;
    let logs = run_pfs(instance, config, horizon)?;
    let x_star = hindsight_optimum(instance, horizon)?;
    let metrics = compute_metrics(&logs, instance, &x_star)?;
    if metrics.regret > report.thm1_regret_bound + 1e-6 {
        return Ok(Some(json!({
            "eta": config.eta, "rho": config.rho, "regret": metrics.regret,
            "bound": report.thm1_regret_bound,
        })));
    }
    for log in &logs {
        let exact = report.thm1_violation_bound(log.t);
        let coarse = report.thm1_violation_bound_coarse(log.t);
        if log.g_value > exact + 1e-9 || log.g_value > coarse + 1e-9 {
            return Ok(Some(json!({
                "eta": config.eta, "rho": config.rho, "t": log.t, "g": log.g_value,
                "bound": exact, "coarse_bound": coarse,
            })));
        }
    }
    Ok(None)
}

fn theorem1_suite(s: &Subject, opts: &VerifyOptions) -> Result<SuiteReport> {
    let inst = s.instance.with_costs(suite_seed(opts, 4), ENVELOPE_HORIZON)?;
    let pairs = envelope_pairs(
        &inst,
        ENVELOPE_HORIZON,
        opts.level.envelope_pairs(),
        suite_seed(opts, 5),
    );
    for (k, (eta, rho)) in pairs.iter().enumerate() {
        let config = PfsConfig {
            eta: *eta,
            rho: *rho,
            x1: Point::zeros(inst.dim()),
        };
        if let Some(cx) = theorem1_violation(&inst, &config, ENVELOPE_HORIZON)? {
            return Ok(SuiteReport {
                suite: "theorem1-envelope",
                instance: s.label.clone(),
                checked: k + 1,
                counterexample: Some(cx),
            });
        }
    }
    Ok(SuiteReport {
        suite: "theorem1-envelope",
        instance: s.label.clone(),
        checked: pairs.len(),
        counterexample: None,
    })
}

/// A start on the far side of the first constraint row, inside `R·Ball`.
fn infeasible_start(instance: &ProblemInstance) -> Point {
    let a = &instance.constraint.rows()[0].0;
    a.scale(0.99 * instance.radius / a.norm())
}

fn cor1_suite(s: &Subject, opts: &VerifyOptions) -> Result<SuiteReport> {
    let horizon = opts.level.corollary_horizon();
    let inst = s.instance.with_costs(suite_seed(opts, 6), horizon)?;
    let Some(x1) = s.interior.clone() else {
        return Ok(SuiteReport {
            suite: "cor1-anytime-feasibility",
            instance: s.label.clone(),
            checked: 0,
            counterexample: None,
        });
    };
    let alpha = inst.epsilon.min(-inst.constraint.value(&x1));
    let config = preset_cor1(&inst, alpha, horizon, x1)?;
    let logs = run_pfs(&inst, &config, horizon)?;
    let counterexample = logs
        .iter()
        .find(|l| l.g_value > 1e-12)
        .map(|l| json!({ "t": l.t, "x": l.x, "g": l.g_value, "alpha": alpha }));
    Ok(SuiteReport {
        suite: "cor1-anytime-feasibility",
        instance: s.label.clone(),
        checked: logs.len(),
        counterexample,
    })
}

fn cor2_suite(s: &Subject, opts: &VerifyOptions) -> Result<SuiteReport> {
    let horizon = opts.level.corollary_horizon();
    let inst = s.instance.with_costs(suite_seed(opts, 7), horizon)?;
    let (after, cumulative_ok) = cor2_report(&inst, horizon)?;
    let mut checked = 0;
    for x1 in [Point::zeros(inst.dim()), infeasible_start(&inst)] {
        let logs = run_pfs(&inst, &preset_cor2(&inst, horizon, x1.clone())?, horizon)?;
        if let Some(l) = logs.iter().find(|l| l.t >= after && l.g_value > 1e-12) {
            return Ok(SuiteReport {
                suite: "cor2-late-feasibility",
                instance: s.label.clone(),
                checked: checked + 1,
                counterexample: Some(json!({ "x1": x1, "t": l.t, "g": l.g_value, "feasible_after": after })),
            });
        }
        let total: f64 = logs.iter().map(|l| l.g_value).sum();
        if cumulative_ok && total > 1e-9 {
            return Ok(SuiteReport {
                suite: "cor2-late-feasibility",
                instance: s.label.clone(),
                checked: checked + 1,
                counterexample: Some(json!({ "x1": x1, "cumulative_g": total })),
            });
        }
        checked += 1;
    }
    Ok(SuiteReport {
        suite: "cor2-late-feasibility",
        instance: s.label.clone(),
        checked,
        counterexample: None,
    })
}

fn cor3_suite(s: &Subject, opts: &VerifyOptions) -> Result<SuiteReport> {
    let horizon = opts.level.corollary_horizon();
    let inst = s.instance.with_costs(suite_seed(opts, 8), horizon)?;
    let x_star = hindsight_optimum(&inst, horizon)?;
    let regret_bound = cor3_regret_bound(&inst, horizon);
    let mut checked = 0;
    for x1 in [Point::zeros(inst.dim()), infeasible_start(&inst)] {
        let logs = run_pfs(&inst, &preset_cor3(&inst, horizon, x1.clone())?, horizon)?;
        let metrics = compute_metrics(&logs, &inst, &x_star)?;
        let mut counterexample = None;
        if metrics.regret > regret_bound + 1e-6 {
            counterexample = Some(json!({ "x1": x1, "regret": metrics.regret, "bound": regret_bound }));
        }
        for l in &logs {
            let bound = cor3_violation_bound(&inst, horizon, l.t)?;
            if counterexample.is_none() && l.g_value > bound + 1e-9 {
                counterexample = Some(json!({ "x1": x1, "t": l.t, "g": l.g_value, "bound": bound }));
            }
        }
        checked += 1;
        if counterexample.is_some() {
            return Ok(SuiteReport {
                suite: "cor3-envelope",
                instance: s.label.clone(),
                checked,
                counterexample,
            });
        }
    }
    Ok(SuiteReport {
        suite: "cor3-envelope",
        instance: s.label.clone(),
        checked,
        counterexample: None,
    })
}

fn hindsight_suite(s: &Subject, opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut checked = 0;
    if s.instance.constraint.as_box().is_some() {
        for k in 0..HINDSIGHT_SEEDS {
            let inst = s.instance.with_costs(suite_seed(opts, 100 + k), ENVELOPE_HORIZON)?;
            let closed = hindsight_closed_form(&inst, ENVELOPE_HORIZON)?.expect("box constraint");
            let iterative = hindsight_iterative(&inst, ENVELOPE_HORIZON)?;
            checked += 1;
            if closed.distance(&iterative) > 1e-6 {
                return Ok(SuiteReport {
                    suite: "hindsight-equivalence",
                    instance: s.label.clone(),
                    checked,
                    counterexample: Some(json!({ "closed_form": closed, "iterative": iterative })),
                });
            }
        }
    }
    Ok(SuiteReport {
        suite: "hindsight-equivalence",
        instance: s.label.clone(),
        checked,
        counterexample: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass_on_box() {
        let subjects = default_subjects(Level::Quick).unwrap();
        let reports = run_all(&subjects, &VerifyOptions::new(Level::Quick)).unwrap();
        for r in &reports {
            assert!(r.passed(), "{} failed: {:?}", r.suite, r.counterexample);
        }
        assert_eq!(reports.len(), 8);
    }

    #[test]
    fn weakened_gamma_is_caught() {
        let subjects = default_subjects(Level::Quick).unwrap();
        let opts = VerifyOptions {
            gamma_scale: 0.9,
            ..VerifyOptions::new(Level::Quick)
        };
        let r = lemma2_suite(&subjects[0], &opts).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn envelope_pairs_stay_in_range() {
        let inst = make_paper_instance(0, 10).unwrap();
        for (eta, rho) in envelope_pairs(&inst, 2000, 200, 3) {
            assert!((1e-4 * (1.0 - 1e-12)..=2.0 / (2f64.sqrt() * 2000f64.sqrt()) * (1.0 + 1e-12)).contains(&eta));
            assert!((0.0..=0.25).contains(&rho));
        }
    }
}
