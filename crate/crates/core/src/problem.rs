// SPDX-License-Identifier: Apache-2.0

//! First-order oracles for the quadratic cost stream and the max-affine
//! constraint, plus the problem instances the experiments run on.

use std::cell::RefCell;
use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Identity of the pseudo-random generator behind every seeded stream.
pub const GENERATOR: &str = "rand_chacha::ChaCha8Rng/seed_from_u64";

/// Rows whose affine value is within this of the maximum count as active.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Scale of the quadratic costs `f_t(x) = κ‖x − v_t‖²`.
pub const COST_SCALE: f64 = 3.0;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Anything that answers a constraint query with `(g(x), s ∈ ∂g(x))`.
pub trait ConstraintOracle {
    fn query(&self, x: &Point) -> Result<(f64, Point)>;
}

/// `g(x) = max_i (a_iᵀx − b_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintModel {
    rows: Vec<(Point, f64)>,
}

impl ConstraintModel {
    pub fn new(rows: Vec<(Point, f64)>) -> Result<Self> {
        let Some(d) = rows.first().map(|(a, _)| a.dim()) else {
            return Err(Error::InvalidInput("constraint model needs at least one row".into()));
        };
        if d == 0 {
            return Err(Error::InvalidInput("constraint rows must have dimension >= 1".into()));
        }
        for (i, (a, b)) in rows.iter().enumerate() {
            a.ensure_dim(d, &format!("row {i}"))?;
            a.ensure_finite(&format!("row {i}"))?;
            if !b.is_finite() {
                return Err(Error::InvalidInput(format!("offset of row {i} is not finite")));
            }
        }
        Ok(ConstraintModel { rows })
    }

    /// The box `{x : -half_width ≤ x_j ≤ half_width}` written as `[I; −I]x ≤ half_width·1`.
    pub fn symmetric_box(d: usize, half_width: f64) -> Result<Self> {
        let mut rows: Vec<(Point, f64)> = (0..d).map(|j| (Point::basis(d, j), half_width)).collect();
        rows.extend((0..d).map(|j| (Point::basis(d, j).scale(-1.0), half_width)));
        ConstraintModel::new(rows)
    }

    pub fn rows(&self) -> &[(Point, f64)] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.rows[0].0.dim()
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.rows
            .iter()
            .map(|(a, b)| a.dot(x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value and the subgradient of the lowest-index active row.
    pub fn eval(&self, x: &Point) -> Result<(f64, Point)> {
        x.ensure_dim(self.dim(), "query point")?;
        x.ensure_finite("query point")?;
        let g = self.value(x);
        let active = self
            .rows
            .iter()
            .position(|(a, b)| a.dot(x) - b >= g - TIE_TOLERANCE)
            .expect("maximum is attained by some row");
        Ok((g, self.rows[active].0.clone()))
    }

    /// `max_i ‖a_i‖`, a valid subgradient bound everywhere.
    pub fn subgradient_bound(&self) -> f64 {
        self.rows.iter().map(|(a, _)| a.norm()).fold(0.0, f64::max)
    }

    /// Lower/upper bounds when every row is `±e_j` (infinite where a side is missing).
    pub fn as_box(&self) -> Option<(Point, Point)> {
        let d = self.dim();
        let mut lo = vec![f64::NEG_INFINITY; d];
        let mut hi = vec![f64::INFINITY; d];
        for (a, b) in &self.rows {
            let mut nonzero = a.coords().iter().enumerate().filter(|(_, c)| **c != 0.0);
            let (j, &c) = nonzero.next()?;
            if nonzero.next().is_some() {
                return None;
            }
            if c == 1.0 {
                hi[j] = hi[j].min(*b);
            } else if c == -1.0 {
                lo[j] = lo[j].max(-*b);
            } else {
                return None;
            }
        }
        Some((Point::new(lo), Point::new(hi)))
    }
}

impl ConstraintOracle for ConstraintModel {
    fn query(&self, x: &Point) -> Result<(f64, Point)> {
        self.eval(x)
    }
}

/// Wraps an oracle and records every point it is queried at.
#[derive(Debug)]
pub struct CountingOracle<'a, O: ?Sized> {
    inner: &'a O,
    queries: RefCell<Vec<Point>>,
}

impl<'a, O: ConstraintOracle + ?Sized> CountingOracle<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        CountingOracle {
            inner,
            queries: RefCell::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.queries.borrow().len()
    }

    pub fn into_queries(self) -> Vec<Point> {
        self.queries.into_inner()
    }
}

impl<O: ConstraintOracle + ?Sized> ConstraintOracle for CountingOracle<'_, O> {
    fn query(&self, x: &Point) -> Result<(f64, Point)> {
        self.queries.borrow_mut().push(x.clone());
        self.inner.query(x)
    }
}

/// The seeded stream of quadratic costs `f_t(x) = κ‖x − v_t‖²`, `v_t ~ U[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostStream {
    seed: u64,
    scale: f64,
    targets: Vec<Point>,
}

/// Draws `horizon` targets uniformly from `[0,1]^d`.
pub fn generate_cost_stream(seed: u64, horizon: usize, d: usize) -> Result<CostStream> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let targets = (0..horizon)
        .map(|_| Point::new((0..d).map(|_| rng.gen::<f64>()).collect()))
        .collect();
    Ok(CostStream {
        seed,
        scale: COST_SCALE,
        targets,
    })
}

impl CostStream {
    /// A stream with explicit targets; mostly useful in tests.
    pub fn from_targets(targets: Vec<Point>) -> Result<Self> {
        let Some(d) = targets.first().map(Point::dim) else {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        };
        for v in &targets {
            v.ensure_dim(d, "target")?;
            v.ensure_finite("target")?;
        }
        Ok(CostStream {
            seed: 0,
            scale: COST_SCALE,
            targets,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> usize {
        self.targets.len()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.targets[0].dim()
    }

    pub fn targets(&self) -> &[Point] {
        &self.targets
    }

    /// `v_t` for a 1-based round `t`.
    pub fn target(&self, t: usize) -> Result<&Point> {
        if t == 0 || t > self.horizon() {
            return Err(Error::InvalidRound {
                t,
                horizon: self.horizon(),
            });
        }
        Ok(&self.targets[t - 1])
    }

    /// `(f_t(x), ∇f_t(x))` for a 1-based round `t`.
    pub fn eval(&self, t: usize, x: &Point) -> Result<(f64, Point)> {
        let v = self.target(t)?;
        x.ensure_dim(v.dim(), "point")?;
        let diff = x - v;
        Ok((self.scale * diff.norm_sq(), diff.scale(2.0 * self.scale)))
    }

    pub fn value(&self, t: usize, x: &Point) -> Result<f64> {
        let v = self.target(t)?;
        Ok(self.scale * x.distance(v).powi(2))
    }

    /// Mean of the targets, the unconstrained minimizer of `Σ f_t`.
    pub fn mean_target(&self) -> Point {
        let d = self.dim();
        let n = self.horizon() as f64;
        let mut acc = vec![0.0; d];
        for v in &self.targets {
            for (a, c) in acc.iter_mut().zip(v.coords()) {
                *a += c;
            }
        }
        Point::new(acc.into_iter().map(|a| a / n).collect())
    }
}

/// Converts a Slater margin into the boundary pair `(epsilon, sigma)`:
/// any `y` with `g(y) ≤ −margin` inside `R·Ball` certifies
/// `epsilon = c·margin`, `sigma = (1 − c)·margin/(2R)`.
pub fn slater_to_assumption4(radius: f64, slater_margin: f64, c: f64) -> Result<(f64, f64)> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
    }
    if !(slater_margin > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Slater margin {slater_margin} must be positive"
        )));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!("c = {c} must lie in (0, 1)")));
    }
    Ok((c * slater_margin, (1.0 - c) * slater_margin / (2.0 * radius)))
}

/// A constrained online problem together with the constants its guarantees use.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub radius: f64,
    /// Stated bound on `‖∇f_t‖`.
    pub cost_grad_bound: f64,
    /// Stated bound on `‖∂g‖`.
    pub constraint_grad_bound: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub constraint: ConstraintModel,
    pub costs: CostStream,
}

impl ProblemInstance {
    pub fn new(
        radius: f64,
        cost_grad_bound: f64,
        constraint_grad_bound: f64,
        sigma: f64,
        epsilon: f64,
        constraint: ConstraintModel,
        costs: CostStream,
    ) -> Result<Self> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {v} must be positive")))
            }
        };
        positive(radius, "R")?;
        positive(cost_grad_bound, "G_f")?;
        positive(constraint_grad_bound, "G_g")?;
        positive(sigma, "sigma")?;
        positive(epsilon, "epsilon")?;
        if sigma > constraint_grad_bound {
            return Err(Error::InvalidParameter(format!(
                "sigma = {sigma} exceeds G_g = {constraint_grad_bound}"
            )));
        }
        let actual = constraint.subgradient_bound();
        if actual > constraint_grad_bound * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "G_g = {constraint_grad_bound} is below the largest row norm {actual}"
            )));
        }
        if costs.dim() != constraint.dim() {
            return Err(Error::InvalidInput(format!(
                "cost dimension {} differs from constraint dimension {}",
                costs.dim(),
                constraint.dim()
            )));
        }
        Ok(ProblemInstance {
            radius,
            cost_grad_bound,
            constraint_grad_bound,
            sigma,
            epsilon,
            constraint,
            costs,
        })
    }

    pub fn dim(&self) -> usize {
        self.constraint.dim()
    }

    pub fn horizon(&self) -> usize {
        self.costs.horizon()
    }

    /// Contraction factor `1 − σ²/G_g²` of one exact Polyak step.
    pub fn gamma(&self) -> f64 {
        1.0 - (self.sigma / self.constraint_grad_bound).powi(2)
    }

    /// `1 − √γ`.
    pub fn xi(&self) -> f64 {
        1.0 - self.gamma().sqrt()
    }

    /// Same constants and constraint, fresh cost stream.
    pub fn with_costs(&self, seed: u64, horizon: usize) -> Result<Self> {
        Ok(ProblemInstance {
            costs: generate_cost_stream(seed, horizon, self.dim())?,
            ..self.clone()
        })
    }
}

/// The two-dimensional box experiment: `f_t(x) = 3‖x − v_t‖²`, `g(x) = ‖x‖_∞ − 0.5`
/// as four affine rows, with `G_f = √2`, `R = 1`, `G_g = 1`, `ε = 0.25`, `σ = 1/√2`.
pub fn make_paper_instance(seed: u64, horizon: usize) -> Result<ProblemInstance> {
    ProblemInstance::new(
        1.0,
        SQRT_2,
        1.0,
        1.0 / SQRT_2,
        0.25,
        ConstraintModel::symmetric_box(2, 0.5)?,
        generate_cost_stream(seed, horizon, 2)?,
    )
}

/// A random bounded polytope in `R^d` (`d` = 2 or 3) whose `(ε, σ)` are certified
/// from a known strictly feasible point, together with that point.
///
/// The polytope lies inside the box of half-width `0.45R` around an interior point
/// of norm at most `0.2R`, so it is contained in `R·Ball` for `d ≤ 3`. `G_f` is the
/// honest bound `2κ(R + √d)` on the cost gradients over `R·Ball`.
pub fn random_certified_polytope(
    seed: u64,
    d: usize,
    extra_rows: usize,
    horizon: usize,
) -> Result<(ProblemInstance, Point)> {
    if !(2..=3).contains(&d) {
        return Err(Error::InvalidParameter(format!("dimension {d} must be 2 or 3")));
    }
    let radius = 1.0;
    let mut rng = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let interior = loop {
        let y = Point::new((0..d).map(|_| rng.gen_range(-0.2..0.2)).collect());
        if y.norm() <= 0.2 * radius {
            break y;
        }
    };
    let mut rows = Vec::with_capacity(2 * d + extra_rows);
    for j in 0..d {
        for sign in [1.0, -1.0] {
            let a = Point::basis(d, j).scale(sign);
            let h = rng.gen_range(0.15..0.45) * radius;
            rows.push((a.clone(), a.dot(&interior) + h));
        }
    }
    for _ in 0..extra_rows {
        let dir = loop {
            let u = Point::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let n = u.norm();
            if n > 0.1 && n <= 1.0 {
                break u.scale(1.0 / n);
            }
        };
        let a = dir.scale(rng.gen_range(0.5..2.0));
        let h = rng.gen_range(0.15..0.45) * radius;
        rows.push((a.clone(), a.dot(&interior) + a.norm() * h));
    }
    let constraint = ConstraintModel::new(rows)?;
    let margin = -constraint.value(&interior);
    let (epsilon, sigma) = slater_to_assumption4(radius, margin, 0.5)?;
    let g_bound = constraint.subgradient_bound();
    let f_bound = 2.0 * COST_SCALE * (radius + (d as f64).sqrt());
    let instance = ProblemInstance::new(
        radius,
        f_bound,
        g_bound,
        sigma,
        epsilon,
        constraint,
        generate_cost_stream(seed, horizon, d)?,
    )?;
    Ok((instance, interior))
}

/// JSON description of an instance:
/// `{"d", "R", "G_f", "G_g", "sigma", "epsilon", "rows": [[a, b], ...], "seed", "T"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescription {
    pub d: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "G_f")]
    pub cost_grad_bound: f64,
    #[serde(rename = "G_g")]
    pub constraint_grad_bound: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: usize,
}

impl InstanceDescription {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("instance JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance description serializes")
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        let rows = self.rows.iter().map(|(a, b)| (Point::new(a.clone()), *b)).collect();
        let constraint = ConstraintModel::new(rows)?;
        if constraint.dim() != self.d {
            return Err(Error::InvalidInput(format!(
                "rows have dimension {}, but d = {}",
                constraint.dim(),
                self.d
            )));
        }
        ProblemInstance::new(
            self.radius,
            self.cost_grad_bound,
            self.constraint_grad_bound,
            self.sigma,
            self.epsilon,
            constraint,
            generate_cost_stream(self.seed, self.horizon, self.d)?,
        )
    }

    pub fn describe(instance: &ProblemInstance) -> Self {
        InstanceDescription {
            d: instance.dim(),
            radius: instance.radius,
            cost_grad_bound: instance.cost_grad_bound,
            constraint_grad_bound: instance.constraint_grad_bound,
            sigma: instance.sigma,
            epsilon: instance.epsilon,
            rows: instance
                .constraint
                .rows()
                .iter()
                .map(|(a, b)| (a.coords().to_vec(), *b))
                .collect(),
            seed: instance.costs.seed(),
            horizon: instance.horizon(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec())
    }

    fn unit_box() -> ConstraintModel {
        ConstraintModel::symmetric_box(2, 0.5).unwrap()
    }

    fn central_difference(stream: &CostStream, t: usize, x: &Point) -> Point {
        let h = 1e-6;
        Point::new(
            (0..x.dim())
                .map(|i| {
                    let e = Point::basis(x.dim(), i);
                    let up = stream.value(t, &x.add_scaled(h, &e)).unwrap();
                    let down = stream.value(t, &x.add_scaled(-h, &e)).unwrap();
                    (up - down) / (2.0 * h)
                })
                .collect(),
        )
    }

    #[test]
    fn cost_examples() {
        let stream = CostStream::from_targets(vec![p(&[1.0, 0.0]), p(&[0.5, 0.5]), p(&[0.0, 0.0])]).unwrap();
        let (v, g) = stream.eval(1, &p(&[0.0, 0.0])).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
        assert_eq!(g, p(&[-6.0, 0.0]));
        assert!(central_difference(&stream, 1, &p(&[0.0, 0.0])).max_abs_diff(&g) < 1e-6);

        let (v, g) = stream.eval(2, &p(&[0.5, 0.5])).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g, p(&[0.0, 0.0]));

        let (v, g) = stream.eval(3, &p(&[0.1, 0.0])).unwrap();
        assert!((v - 0.03).abs() < 1e-15);
        assert!(g.max_abs_diff(&p(&[0.6, 0.0])) < 1e-15);
    }

    #[test]
    fn cost_rejects_out_of_range_rounds() {
        let stream = generate_cost_stream(1, 3, 2).unwrap();
        assert_eq!(
            stream.eval(0, &p(&[0.0, 0.0])),
            Err(Error::InvalidRound { t: 0, horizon: 3 })
        );
        assert!(matches!(
            stream.eval(4, &p(&[0.0, 0.0])),
            Err(Error::InvalidRound { .. })
        ));
    }

    #[test]
    fn constraint_examples_with_ties() {
        let m = unit_box();
        let (g, s) = m.eval(&p(&[0.7, 0.0])).unwrap();
        assert!((g - 0.2).abs() < 1e-15);
        assert_eq!(s, p(&[1.0, 0.0]));

        let (g, s) = m.eval(&p(&[0.0, 0.0])).unwrap();
        assert_eq!(g, -0.5);
        assert_eq!(s, p(&[1.0, 0.0]));

        let (g, s) = m.eval(&p(&[0.5, 0.5])).unwrap();
        assert_eq!(g, 0.0);
        assert_eq!(s, p(&[1.0, 0.0]));
    }

    #[test]
    fn constraint_rejects_bad_input() {
        assert!(ConstraintModel::new(vec![]).is_err());
        assert!(unit_box().eval(&p(&[f64::NAN, 0.0])).is_err());
        assert!(unit_box().eval(&p(&[0.0])).is_err());
    }

    #[test]
    fn box_detection() {
        let (lo, hi) = unit_box().as_box().unwrap();
        assert_eq!(lo, p(&[-0.5, -0.5]));
        assert_eq!(hi, p(&[0.5, 0.5]));
        let skew = ConstraintModel::new(vec![(p(&[1.0, 1.0]), 1.0)]).unwrap();
        assert!(skew.as_box().is_none());
    }

    #[test]
    fn cost_stream_is_deterministic_and_in_range() {
        let a = generate_cost_stream(7, 5, 2).unwrap();
        let b = generate_cost_stream(7, 5, 2).unwrap();
        assert_eq!(a, b);
        assert!(a
            .targets()
            .iter()
            .all(|v| v.coords().iter().all(|c| (0.0..=1.0).contains(c))));
        let c = generate_cost_stream(8, 5, 2).unwrap();
        assert_ne!(a.targets(), c.targets());
        assert!(generate_cost_stream(7, 0, 2).is_err());
    }

    #[test]
    fn slater_examples() {
        let close = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15;
        assert!(close(slater_to_assumption4(1.0, 0.5, 0.5).unwrap(), (0.25, 0.125)));
        assert!(close(slater_to_assumption4(1.0, 0.5, 0.99).unwrap(), (0.495, 0.0025)));
        assert!(close(slater_to_assumption4(2.0, 1.0, 0.5).unwrap(), (0.5, 0.125)));
        assert!(slater_to_assumption4(1.0, 0.5, 1.0).is_err());
        assert!(slater_to_assumption4(1.0, 0.5, 0.0).is_err());
        assert!(slater_to_assumption4(1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn box_instance_constants() {
        let inst = make_paper_instance(1, 10).unwrap();
        assert_eq!(inst.dim(), 2);
        assert!((inst.gamma() - 0.5).abs() < 1e-15);
        assert!((inst.xi() - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!((inst.xi() - 0.2928932).abs() < 1e-7);
        assert_eq!(inst.constraint.value(&p(&[0.0, 0.0])), -0.5);
        assert_eq!(inst.constraint.subgradient_bound(), inst.constraint_grad_bound);
    }

    #[test]
    fn instance_validation() {
        let m = unit_box();
        let c = generate_cost_stream(1, 4, 2).unwrap();
        assert!(ProblemInstance::new(1.0, 1.0, 1.0, 2.0, 0.1, m.clone(), c.clone()).is_err());
        assert!(ProblemInstance::new(1.0, 1.0, 0.5, 0.1, 0.1, m.clone(), c.clone()).is_err());
        assert!(ProblemInstance::new(0.0, 1.0, 1.0, 0.5, 0.1, m, c).is_err());
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = make_paper_instance(3, 50).unwrap();
        let text = InstanceDescription::describe(&inst).to_json();
        let back = InstanceDescription::from_json(&text).unwrap().build().unwrap();
        assert_eq!(back, inst);
        assert!(text.contains("\"G_f\"") && text.contains("\"rows\""));
    }

    #[test]
    fn counting_oracle_records_queries() {
        let m = unit_box();
        let counter = CountingOracle::new(&m);
        counter.query(&p(&[0.1, 0.2])).unwrap();
        counter.query(&p(&[0.3, 0.4])).unwrap();
        assert_eq!(counter.calls(), 2);
        assert_eq!(counter.into_queries()[1], p(&[0.3, 0.4]));
    }

    #[test]
    fn random_polytopes_are_certified() {
        for seed in 0..5 {
            let (inst, y) = random_certified_polytope(seed, 2, 3, 10).unwrap();
            assert!(inst.constraint.value(&y) <= -2.0 * inst.epsilon + 1e-15);
            assert!(inst.sigma <= inst.constraint_grad_bound);
            let (lo, hi) = (y.coords().iter().map(|c| c - 0.45), y.coords().iter().map(|c| c + 0.45));
            let corner: f64 = lo.zip(hi).map(|(l, h): (f64, f64)| l.abs().max(h.abs()).powi(2)).sum();
            assert!(corner.sqrt() <= inst.radius);
        }
    }

    /// Samples points with `g(x) = −ε` by bisecting along rays from the origin
    /// (`g(0) = −0.5 < −ε`, and `g` grows to `+∞` along any ray).
    #[test]
    fn box_instance_boundary_subgradients_bounded_below() {
        let inst = make_paper_instance(1, 1).unwrap();
        let m = &inst.constraint;
        for k in 0..360 {
            let theta = (k as f64).to_radians();
            let dir = p(&[theta.cos(), theta.sin()]);
            let (mut lo, mut hi) = (0.0, 10.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if m.value(&dir.scale(mid)) < -inst.epsilon {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (_, s) = m.eval(&dir.scale(0.5 * (lo + hi))).unwrap();
            assert!(s.norm() >= inst.sigma);
        }
    }

    fn point2() -> impl Strategy<Value = Point> {
        prop::collection::vec(-1.5..1.5f64, 2).prop_map(Point::new)
    }

    proptest! {
        #[test]
        fn subgradient_inequality_holds(x in point2(), y in point2(), seed in 0u64..20) {
            let (inst, _) = random_certified_polytope(seed, 2, 3, 1).unwrap();
            for m in [&inst.constraint, &unit_box()] {
                let (gx, s) = m.eval(&x).unwrap();
                prop_assert!(m.value(&y) >= gx + s.dot(&(&y - &x)) - 1e-10);
                prop_assert!(s.norm() <= m.subgradient_bound() + 1e-15);
            }
        }

        #[test]
        fn cost_gradient_matches_finite_differences(x in point2(), seed in 0u64..100) {
            let stream = generate_cost_stream(seed, 3, 2).unwrap();
            for t in 1..=3 {
                let (_, g) = stream.eval(t, &x).unwrap();
                let fd = central_difference(&stream, t, &x);
                prop_assert!(fd.distance(&g) <= 1e-6 * g.norm().max(1.0));
            }
        }
    }
}
