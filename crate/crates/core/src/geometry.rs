//! Axis-aligned primitives and shifted dyadic lattices.
//!
//! Lattice cubes use the half-open convention `[lo, hi)`: a point on a lattice
//! hyperplane belongs to the cube on its upper side. Cube bounds are always
//! computed as `shift + index * side`, so neighboring cubes share bit-identical
//! walls.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(d: usize) -> Self {
        Point(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn translated(&self, t: &[f64]) -> Point {
        Point(self.0.iter().zip(t).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// Axis-aligned box. Degenerate (zero-width) sides are allowed: cells whose
/// half of a pairing cuboid held no points collapse onto a wall.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Cuboid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument("cuboid dimension must be >= 1".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "invalid extent on axis {i}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Cuboid { lower, upper })
    }

    /// `[0, side]^d`
    pub fn cube(d: usize, side: f64) -> Self {
        Cuboid {
            lower: vec![0.0; d],
            upper: vec![side; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn sides(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.side(i)).collect()
    }

    pub fn volume(&self) -> f64 {
        volume(self)
    }

    pub fn diagonal(&self) -> f64 {
        self.sides().iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn center(&self) -> Point {
        Point(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        )
    }

    /// Closed containment.
    pub fn contains(&self, p: &Point) -> bool {
        self.contains_within(p, 0.0)
    }

    pub fn contains_within(&self, p: &Point, tol: f64) -> bool {
        p.0.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| *x >= lo - tol && *x <= hi + tol)
    }

    /// Half-open containment `[lo, hi)`.
    pub fn contains_half_open(&self, p: &Point) -> bool {
        p.0.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| *x >= *lo && *x < *hi)
    }

    pub fn contains_cuboid(&self, other: &Cuboid) -> bool {
        (0..self.dim())
            .all(|i| other.lower[i] >= self.lower[i] && other.upper[i] <= self.upper[i])
    }

    /// Volume of the intersection with `other`.
    pub fn overlap_volume(&self, other: &Cuboid) -> f64 {
        (0..self.dim())
            .map(|i| {
                (self.upper[i].min(other.upper[i]) - self.lower[i].max(other.lower[i])).max(0.0)
            })
            .product()
    }

    pub fn translated(&self, t: &[f64]) -> Cuboid {
        Cuboid {
            lower: self.lower.iter().zip(t).map(|(a, b)| a + b).collect(),
            upper: self.upper.iter().zip(t).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Cuboid) -> f64 {
        self.lower
            .iter()
            .zip(&other.lower)
            .chain(self.upper.iter().zip(&other.upper))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for Cuboid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{}, {}]", self.lower[i], self.upper[i])?;
        }
        Ok(())
    }
}

pub fn volume(c: &Cuboid) -> f64 {
    c.lower
        .iter()
        .zip(&c.upper)
        .map(|(lo, hi)| hi - lo)
        .product()
}

/// Diameter of `c ∪ {anchor}`. Boxes are convex, so the farthest pair is
/// either two opposite corners or a corner and the anchor.
pub fn diameter_with_anchor(c: &Cuboid, anchor: &Point) -> f64 {
    let to_anchor = c
        .lower
        .iter()
        .zip(&c.upper)
        .zip(&anchor.0)
        .map(|((lo, hi), a)| {
            let far = (a - lo).abs().max((hi - a).abs());
            far * far
        })
        .sum::<f64>()
        .sqrt();
    to_anchor.max(c.diagonal())
}

/// Cubes of `shift + 2^level Z^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedLattice {
    pub shift: Point,
    pub level: i32,
}

impl ShiftedLattice {
    pub fn new(shift: Point, level: i32) -> Self {
        ShiftedLattice { shift, level }
    }

    pub fn side(&self) -> f64 {
        2f64.powi(self.level)
    }

    pub fn dim(&self) -> usize {
        self.shift.dim()
    }

    /// Cube with integer index `index`; bounds are `shift + index * side`.
    pub fn cube_at(&self, index: &[i64]) -> Cuboid {
        let s = self.side();
        Cuboid {
            lower: index
                .iter()
                .zip(&self.shift.0)
                .map(|(&k, v)| v + k as f64 * s)
                .collect(),
            upper: index
                .iter()
                .zip(&self.shift.0)
                .map(|(&k, v)| v + (k + 1) as f64 * s)
                .collect(),
        }
    }

    /// Index of the half-open cube containing `p`. The floor estimate is
    /// corrected against the computed bounds so membership agrees exactly
    /// with `cube_at`.
    pub fn index_of(&self, p: &Point) -> Vec<i64> {
        let s = self.side();
        p.0.iter()
            .zip(&self.shift.0)
            .map(|(&x, &v)| {
                let mut k = ((x - v) / s).floor() as i64;
                loop {
                    let lo = v + k as f64 * s;
                    let hi = v + (k + 1) as f64 * s;
                    if x < lo {
                        k -= 1;
                    } else if x >= hi {
                        k += 1;
                    } else {
                        break k;
                    }
                }
            })
            .collect()
    }
}

pub fn lattice_cube_containing(l: &ShiftedLattice, p: &Point) -> Cuboid {
    l.cube_at(&l.index_of(p))
}
