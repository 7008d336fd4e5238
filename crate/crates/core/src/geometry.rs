// SPDX-License-Identifier: Apache-2.0

//! Euclidean vector primitives and closed-form projections onto a ball,
//! a halfspace and an axis-aligned box.

use std::ops::{Add, Index, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms below this are treated as zero (degenerate normals/subgradients).
pub const ZERO_NORM: f64 = 1e-15;

/// A point (or direction) in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(d: usize) -> Self {
        Point(vec![0.0; d])
    }

    /// Unit basis vector `e_i` in `R^d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut p = Point::zeros(d);
        p.0[i] = 1.0;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, k: f64) -> Point {
        Point(self.0.iter().map(|c| k * c).collect())
    }

    /// `self + k * dir`
    pub fn add_scaled(&self, k: f64, dir: &Point) -> Point {
        debug_assert_eq!(self.dim(), dir.dim());
        Point(self.0.iter().zip(&dir.0).map(|(a, b)| a + k * b).collect())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest coordinatewise absolute difference.
    pub fn max_abs_diff(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{what} has non-finite coordinates")))
        }
    }

    pub(crate) fn ensure_dim(&self, d: usize, what: &str) -> Result<()> {
        if self.dim() == d {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{what} has dimension {}, expected {d}",
                self.dim()
            )))
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Point {
    type Output = Point;

    fn add(self, rhs: &Point) -> Point {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &Point {
    type Output = Point;

    fn sub(self, rhs: &Point) -> Point {
        self.add_scaled(-1.0, rhs)
    }
}

/// The closed halfspace `{x : normalᵀx ≤ offset}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: Point,
    offset: f64,
}

impl Halfspace {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        normal.ensure_finite("halfspace normal")?;
        if !offset.is_finite() {
            return Err(Error::InvalidInput("halfspace offset is not finite".into()));
        }
        if normal.norm() < ZERO_NORM {
            return Err(Error::InvalidInput("halfspace normal is zero".into()));
        }
        Ok(Halfspace { normal, offset })
    }

    /// The linearized, tightened constraint halfspace
    /// `{x : g_t + s_tᵀ(x − x_t) + rho ≤ 0}` built from a constraint query at `x_t`.
    pub fn from_linearization(x_t: &Point, g_t: f64, s_t: &Point, rho: f64) -> Result<Self> {
        Halfspace::new(s_t.clone(), s_t.dot(x_t) - g_t - rho)
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.normal.dot(x) <= self.offset
    }
}

/// Projection onto the centered ball of radius `radius`.
pub fn project_ball(x: &Point, radius: f64) -> Result<Point> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("ball radius {radius} must be positive")));
    }
    x.ensure_finite("point")?;
    let n = x.norm();
    if n <= radius {
        Ok(x.clone())
    } else {
        Ok(x.scale(radius / n))
    }
}

/// Projection onto a halfspace.
pub fn project_halfspace(x: &Point, h: &Halfspace) -> Result<Point> {
    x.ensure_finite("point")?;
    x.ensure_dim(h.normal.dim(), "point")?;
    let excess = h.normal.dot(x) - h.offset;
    if excess <= 0.0 {
        Ok(x.clone())
    } else {
        Ok(x.add_scaled(-excess / h.normal.norm_sq(), &h.normal))
    }
}

/// Coordinatewise clamp onto the box `[lo, hi]`. Bounds may be infinite.
pub fn project_box(x: &Point, lo: &Point, hi: &Point) -> Result<Point> {
    x.ensure_finite("point")?;
    lo.ensure_dim(x.dim(), "lower bound")?;
    hi.ensure_dim(x.dim(), "upper bound")?;
    if let Some(i) = (0..x.dim()).find(|&i| !(lo[i] <= hi[i])) {
        return Err(Error::InvalidInput(format!(
            "box bound lo[{i}] = {} exceeds hi[{i}] = {}",
            lo[i], hi[i]
        )));
    }
    Ok(Point((0..x.dim()).map(|i| x[i].clamp(lo[i], hi[i])).collect()))
}
