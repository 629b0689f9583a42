//! Monte Carlo estimate of the shift-averaged fractional allocation.
//!
//! For each sampled shift `v`, every top-level box of `v + 2^n Z^d` meeting the
//! grid is run independently, which yields a partition of the grid among the
//! configuration points. Averaging the indicator of each point's cell over the
//! shifts gives the per-center weight maps; because each shift contributes a
//! partition, the weights at every grid point sum to one.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{Cuboid, Point, ShiftedLattice};
use crate::pointprocess::Configuration;
use crate::rng::rng_for;
use crate::transport::{origin_cell, run_in_box, RunOptions, RunReport, TopBox};

pub const DEFAULT_SHIFTS: usize = 64;
pub const DEFAULT_SPACING: f64 = 0.125;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub window: Cuboid,
    pub spacing: f64,
}

impl GridSpec {
    pub fn new(window: Cuboid, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {spacing}")));
        }
        for s in window.sides() {
            let k = s / spacing;
            if !(k >= 1.0) || (k - k.round()).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "window side {s} is not a positive multiple of spacing {spacing}"
                )));
            }
        }
        Ok(GridSpec { window, spacing })
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.window
            .sides()
            .iter()
            .map(|s| (s / self.spacing).round() as usize)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Measure of one grid cell, `h^d`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    fn center_coord(&self, axis: usize, i: usize) -> f64 {
        self.window.lower[axis] + (i as f64 + 0.5) * self.spacing
    }

    pub fn center(&self, index: &[usize]) -> Point {
        Point(
            index
                .iter()
                .enumerate()
                .map(|(a, &i)| self.center_coord(a, i))
                .collect(),
        )
    }

    /// Row-major linear index (axis 1 slowest).
    pub fn linear(&self, index: &[usize]) -> usize {
        let shape = self.shape();
        index
            .iter()
            .zip(&shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn unravel(&self, mut lin: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            out[a] = lin % shape[a];
            lin /= shape[a];
        }
        out
    }

    /// Index range `[first, last)` of grid centers with `lo <= c < hi` along
    /// `axis`.
    fn center_range(&self, axis: usize, lo: f64, hi: f64) -> (usize, usize) {
        let n = self.shape()[axis];
        let first_at_or_above = |x: f64| -> usize {
            let guess = ((x - self.window.lower[axis]) / self.spacing - 0.5).ceil();
            let mut i = guess.clamp(0.0, n as f64) as usize;
            while i > 0 && self.center_coord(axis, i - 1) >= x {
                i -= 1;
            }
            while i < n && self.center_coord(axis, i) < x {
                i += 1;
            }
            i
        };
        (first_at_or_above(lo), first_at_or_above(hi))
    }

    /// Linear indices of all grid centers inside the half-open box.
    pub fn centers_in(&self, b: &Cuboid) -> Vec<usize> {
        let d = self.dim();
        let ranges: Vec<(usize, usize)> = (0..d)
            .map(|a| self.center_range(a, b.lower[a], b.upper[a]))
            .collect();
        if ranges.iter().any(|(s, e)| s >= e) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(self.linear(&idx));
            let mut a = d;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < ranges[a].1 {
                    break;
                }
                idx[a] = ranges[a].0;
            }
        }
    }

    fn same_as(&self, other: &GridSpec) -> bool {
        self.window == other.window && self.spacing == other.spacing
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterWeights {
    pub center: usize,
    pub position: Point,
    /// `(linear grid index, weight)` sorted by grid index; zero weights are
    /// omitted.
    pub entries: Vec<(usize, f64)>,
}

impl CenterWeights {
    pub fn mass(&self, cell_measure: f64) -> f64 {
        self.entries.iter().map(|e| e.1).sum::<f64>() * cell_measure
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalField {
    pub grid: GridSpec,
    pub stage: u32,
    pub samples: usize,
    pub centers: Vec<CenterWeights>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumAudit {
    pub grid_points: usize,
    pub max_abs_error: f64,
    pub min_weight: f64,
    pub max_weight: f64,
}

impl SumAudit {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_abs_error <= tol && self.min_weight >= 0.0 && self.max_weight <= 1.0
    }
}

impl FractionalField {
    pub fn center(&self, id: usize) -> Option<&CenterWeights> {
        self.centers.iter().find(|c| c.center == id)
    }

    /// Center whose position is the origin.
    pub fn origin(&self) -> Option<&CenterWeights> {
        self.centers.iter().find(|c| c.position.is_origin())
    }

    /// Total weight at every grid point.
    pub fn totals(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.grid.len()];
        for c in &self.centers {
            for &(g, w) in &c.entries {
                t[g] += w;
            }
        }
        t
    }

    pub fn audit(&self) -> SumAudit {
        let totals = self.totals();
        let mut min_w = f64::INFINITY;
        let mut max_w = f64::NEG_INFINITY;
        for c in &self.centers {
            for &(_, w) in &c.entries {
                min_w = min_w.min(w);
                max_w = max_w.max(w);
            }
        }
        SumAudit {
            grid_points: totals.len(),
            max_abs_error: totals.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max),
            min_weight: if min_w.is_finite() { min_w } else { 0.0 },
            max_weight: if max_w.is_finite() { max_w } else { 0.0 },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Per center: total mass, support bounding box (grid-cell extents) and
    /// support diameter including the center.
    pub fn summary_csv(&self) -> String {
        let d = self.grid.dim();
        let h = self.grid.spacing;
        let mut out = String::from("center,mass,support_cells,support_diameter");
        for a in 1..=d {
            out.push_str(&format!(",lower_{a},upper_{a}"));
        }
        out.push('\n');
        for c in &self.centers {
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for &(g, _) in &c.entries {
                let p = self.grid.center(&self.grid.unravel(g));
                for a in 0..d {
                    lo[a] = lo[a].min(p.0[a] - 0.5 * h);
                    hi[a] = hi[a].max(p.0[a] + 0.5 * h);
                }
            }
            let diam = if c.entries.is_empty() {
                0.0
            } else {
                let b = Cuboid {
                    lower: lo.clone(),
                    upper: hi.clone(),
                };
                crate::geometry::diameter_with_anchor(&b, &c.position)
            };
            out.push_str(&format!(
                "{},{},{},{}",
                c.center,
                c.mass(self.grid.cell_measure()),
                c.entries.len(),
                diam
            ));
            for a in 0..d {
                out.push_str(&format!(",{},{}", lo[a], hi[a]));
            }
            out.push('\n');
        }
        out
    }
}

/// `M` i.i.d. uniform shifts in `[0, 2^n)^d`.
pub fn sample_shifts(d: usize, stage: u32, count: usize, seed: u64) -> Vec<Point> {
    let side = 2f64.powi(stage as i32);
    let mut rng = rng_for(seed, "shifts", u64::from(stage));
    (0..count)
        .map(|_| Point((0..d).map(|_| rng.gen::<f64>() * side).collect()))
        .collect()
}

/// Points of `config` inside the half-open `bounds`, with their ids.
pub fn restrict(config: &Configuration, bounds: &Cuboid) -> (Configuration, Vec<usize>) {
    let (ids, points): (Vec<usize>, Vec<Point>) = config
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| bounds.contains_half_open(p))
        .map(|(i, p)| (i, p.clone()))
        .unzip();
    let sub = Configuration {
        d: config.d,
        domain: bounds.clone(),
        seed: config.seed,
        is_palm: points.iter().any(Point::is_origin),
        points,
    };
    (sub, ids)
}

/// Runs the scheme in the box of `v + 2^n Z^d` containing the origin, using the
/// points of `config` that fall in it. The box must lie inside the domain.
pub fn run_origin_box(config: &Configuration, v: &Point, stage: u32) -> Result<RunReport> {
    let top = TopBox::containing(v, stage, &Point::origin(config.d))?;
    if !config.domain.contains_cuboid(&top.bounds) {
        return Err(Error::InvalidArgument(format!(
            "window {} is not inside the configuration domain {}",
            top.bounds, config.domain
        )));
    }
    let (sub, _) = restrict(config, &top.bounds);
    run_in_box(&sub, &top, &RunOptions::default())
}

/// Owner (configuration point id) of every grid point under shift `v`.
fn owners_for_shift(
    config: &Configuration,
    stage: u32,
    v: &Point,
    grid: &GridSpec,
) -> Result<Vec<u32>> {
    let d = config.d;
    let lattice = ShiftedLattice::new(v.clone(), stage as i32);
    let shape = grid.shape();
    let first = grid.center(&vec![0; d]);
    let last = grid.center(&shape.iter().map(|n| n - 1).collect::<Vec<_>>());
    let lo_idx = lattice.index_of(&first);
    let hi_idx = lattice.index_of(&last);

    let mut owners = vec![u32::MAX; grid.len()];
    let mut box_idx = lo_idx.clone();
    loop {
        let bounds = lattice.cube_at(&box_idx);
        if !config.domain.contains_cuboid(&bounds) {
            let uncovered = grid
                .centers_in(&bounds)
                .first()
                .map(|&g| grid.unravel(g))
                .unwrap_or_default();
            return Err(Error::GridNotCovered {
                index: uncovered,
                shift: v.0.clone(),
            });
        }
        let top = TopBox {
            shift: v.clone(),
            level: stage,
            bounds: bounds.clone(),
        };
        let (sub, ids) = restrict(config, &bounds);
        let report = run_in_box(&sub, &top, &RunOptions::lean())?;
        for cell in report.owned_cells() {
            if cell.volume() <= 0.0 {
                continue;
            }
            let owner = ids[cell.owner_id.expect("owned")] as u32;
            for g in grid.centers_in(&cell.bounds) {
                if owners[g] != u32::MAX {
                    return Err(Error::Invariant(format!(
                        "grid point {:?} claimed twice under shift {:?}",
                        grid.unravel(g),
                        v.0
                    )));
                }
                owners[g] = owner;
            }
        }

        let mut a = d;
        loop {
            if a == 0 {
                if let Some(g) = owners.iter().position(|&o| o == u32::MAX) {
                    return Err(Error::Invariant(format!(
                        "grid point {:?} unclaimed under shift {:?}",
                        grid.unravel(g),
                        v.0
                    )));
                }
                return Ok(owners);
            }
            a -= 1;
            box_idx[a] += 1;
            if box_idx[a] <= hi_idx[a] {
                break;
            }
            box_idx[a] = lo_idx[a];
        }
    }
}

/// Averages the per-shift partitions of the grid.
pub fn average_field(
    config: &Configuration,
    stage: u32,
    shifts: &[Point],
    grid: &GridSpec,
) -> Result<FractionalField> {
    if shifts.is_empty() {
        return Err(Error::InvalidArgument("at least one shift is required".into()));
    }
    if grid.dim() != config.d {
        return Err(Error::DimensionMismatch {
            expected: config.d,
            got: grid.dim(),
        });
    }
    let per_shift: Vec<Vec<u32>> = shifts
        .par_iter()
        .map(|v| owners_for_shift(config, stage, v, grid))
        .collect::<Result<_>>()?;

    let mut counts: BTreeMap<u32, BTreeMap<usize, u32>> = BTreeMap::new();
    for owners in &per_shift {
        for (g, &o) in owners.iter().enumerate() {
            *counts.entry(o).or_default().entry(g).or_default() += 1;
        }
    }
    let m = shifts.len() as f64;
    let centers = counts
        .into_iter()
        .map(|(id, per_grid)| CenterWeights {
            center: id as usize,
            position: config.points[id as usize].clone(),
            entries: per_grid
                .into_iter()
                .map(|(g, c)| (g, f64::from(c) / m))
                .collect(),
        })
        .collect();
    Ok(FractionalField {
        grid: grid.clone(),
        stage,
        samples: shifts.len(),
        centers,
    })
}

/// `h^d * sum_grid sum_centers |a - b|`, centers matched by id.
pub fn l1_distance(a: &FractionalField, b: &FractionalField) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch);
    }
    let mut diff: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for c in &a.centers {
        for &(g, w) in &c.entries {
            *diff.entry((c.center, g)).or_default() += w;
        }
    }
    for c in &b.centers {
        for &(g, w) in &c.entries {
            *diff.entry((c.center, g)).or_default() -= w;
        }
    }
    Ok(diff.values().map(|x| x.abs()).sum::<f64>() * a.grid.cell_measure())
}

pub const PERIODICITY_ATOL: f64 = 1e-12;

/// Largest coordinate difference between the origin cells for `v` and
/// `v + 2^n e_axis`.
pub fn periodicity_gap(config: &Configuration, v: &Point, stage: u32, axis: usize) -> Result<f64> {
    if axis >= config.d {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range for d = {}", config.d)));
    }
    let base = run_origin_box(config, v, stage)?;
    let mut u = v.clone();
    u.0[axis] += 2f64.powi(stage as i32);
    let moved = run_origin_box(config, &u, stage)?;
    Ok(origin_cell(&base)?.bounds.max_abs_diff(&origin_cell(&moved)?.bounds))
}

/// Whether the origin's cell is unchanged when `v` moves by `2^n e_j`, for
/// every axis `j`.
pub fn periodicity_check(config: &Configuration, v: &Point, stage: u32) -> Result<bool> {
    for j in 0..config.d {
        if periodicity_gap(config, v, stage, j)? > PERIODICITY_ATOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `||f_n - f_{n+1}||_1` for consecutive stages in `stages`.
///
/// All stages use the same shifts, drawn from `[0, 2^n_max)^d`. The level-`n`
/// rule only depends on `v` modulo `2^n`, so each field is still an unbiased
/// estimate, and sharing the shifts makes the difference of consecutive
/// fields track the per-shift change of the cells instead of sampling noise.
pub fn cauchy_sequence(
    config: &Configuration,
    stages: std::ops::RangeInclusive<u32>,
    samples: usize,
    seed: u64,
    grid: &GridSpec,
) -> Result<Vec<f64>> {
    let top = *stages.end();
    let shifts = sample_shifts(config.d, top, samples, seed);
    let fields: Vec<FractionalField> = stages
        .map(|n| average_field(config, n, &shifts, grid))
        .collect::<Result<_>>()?;
    fields.windows(2).map(|w| l1_distance(&w[0], &w[1])).collect()
}
