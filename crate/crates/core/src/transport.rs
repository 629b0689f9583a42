//! The generalized AKT transport scheme.
//!
//! A run works inside one top-level box of `v + 2^N Z^d`. Unit cubes of
//! `v + Z^d` holding two or more points ("bad" cubes) are refined dyadically
//! until every subcube holds at most one point; the refinement is kept lazy, so
//! an empty subtree stays a single ownerless cell. Stage `n` then pairs
//! cuboids of the `2^n` lattice along axis `d`, `d-1`, ..., `1` and moves each
//! shared wall so that the volumes of the two halves are proportional to their
//! point counts, mapping both halves affinely. Stages `-k+1..=0` run inside bad
//! cubes only, stages `1..=N` over the whole box.
//!
//! Every cell keeps the integer index of the dyadic cube it started as. Which
//! half of a pairing cuboid a cell belongs to is read from that index, never
//! from floating-point comparisons.

use serde::{Deserialize, Serialize};
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::geometry::{diameter_with_anchor, Cuboid, Point, ShiftedLattice};
use crate::pointprocess::Configuration;

pub const K_MAX: u32 = 40;
pub const MAX_LEVEL: u32 = 20;

/// Relative tolerance for volume checks.
pub const VOLUME_RTOL: f64 = 1e-9;
/// Absolute tolerance for coordinate checks.
pub const COORD_ATOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Index of the configuration point owning this cell.
    pub owner_id: Option<usize>,
    /// Original (untransported) position of the owner.
    pub owner: Option<Point>,
    /// Current transported position of the owner.
    pub carried_point: Option<Point>,
    pub bounds: Cuboid,
    /// Index of the unit cube of `v + Z^d` the cell started in, relative to
    /// the window's lower corner.
    pub origin_cube_index: Vec<i64>,
    /// Initial sidelength is `2^-depth`.
    pub depth: u32,
    /// Index of the initial dyadic cube at `depth`, relative to the window.
    pub fine_index: Vec<i64>,
}

impl Cell {
    pub fn is_owned(&self) -> bool {
        self.owner_id.is_some()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.volume()
    }

    pub fn sidelengths(&self) -> Vec<f64> {
        self.bounds.sides()
    }

    pub fn displacement(&self) -> Option<Vec<f64>> {
        match (&self.owner, &self.carried_point) {
            (Some(o), Some(c)) => Some(c.0.iter().zip(&o.0).map(|(a, b)| a - b).collect()),
            _ => None,
        }
    }

    /// Diameter of the cell together with its owner; plain diagonal when
    /// ownerless.
    pub fn diameter(&self) -> f64 {
        match &self.owner {
            Some(o) => diameter_with_anchor(&self.bounds, o),
            None => self.bounds.diagonal(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub stage: i32,
    /// 1-based axis.
    pub axis: usize,
    pub parent: Cuboid,
    pub old_wall: f64,
    pub new_wall: f64,
    pub count_left: usize,
    pub count_right: usize,
    /// `(point id, signed shift along axis)` for every carried point in the
    /// parent.
    pub shifts: Vec<(usize, f64)>,
}

impl StepRecord {
    pub fn total(&self) -> usize {
        self.count_left + self.count_right
    }

    /// `(1 - C) 2^(n-1) (N_U - N_V) / (N_U + N_V)` for a carried point at
    /// `pre_step` along the step axis, `C` being its relative distance to the
    /// bisector.
    pub fn predicted_shift(&self, pre_step: f64) -> f64 {
        let a = self.axis - 1;
        let lo = self.parent.lower[a];
        let hi = self.parent.upper[a];
        let half = 0.5 * (hi - lo);
        if self.total() == 0 {
            return 0.0;
        }
        let c = (pre_step - self.old_wall).abs() / half;
        let nu = self.count_left as f64;
        let nv = self.count_right as f64;
        (1.0 - c) * half * (nu - nv) / (nu + nv)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSnapshot {
    pub stage: i32,
    pub bounds: Cuboid,
    pub carried: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageShift {
    pub stage: i32,
    pub max_abs_shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub d: usize,
    pub shift: Point,
    pub stages: u32,
    pub window: Cuboid,
    pub point_count: usize,
    /// Deepest bad-cube refinement used (0 when no cube was bad).
    pub max_depth: u32,
    pub cells: Vec<Cell>,
    pub steps: Vec<StepRecord>,
    /// Total displacement per configuration point, indexed by point id.
    pub displacements: Vec<Vec<f64>>,
    pub stage_max_shift: Vec<StageShift>,
    /// Cell of the origin after initialization and after every stage; empty
    /// for non-Palm configurations.
    pub origin_trace: Vec<StageSnapshot>,
    /// Cells found on the wrong side of a bisector (always 0 for a correct
    /// pairing).
    pub straddle_violations: usize,
    /// Positive-volume cells whose carried point left the box after a step.
    pub containment_violations: usize,
}

impl RunReport {
    pub fn owned_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.is_owned())
    }

    pub fn target_volume(&self) -> f64 {
        self.window.volume() / self.point_count as f64
    }

    pub fn sidelengths(&self) -> Vec<Vec<f64>> {
        self.cells.iter().map(Cell::sidelengths).collect()
    }

    /// Largest relative deviation of an owned cell's volume from `V/n`, and
    /// the relative deviation of the total volume from `V`.
    pub fn equipartition_error(&self) -> EquipartitionCheck {
        let target = self.target_volume();
        let mut worst = 0.0f64;
        let mut worst_cell = None;
        for (i, c) in self.cells.iter().enumerate() {
            if c.is_owned() {
                let e = (c.volume() - target).abs() / target;
                if e > worst || worst_cell.is_none() {
                    worst = e;
                    worst_cell = Some(i);
                }
            }
        }
        let total: f64 = self.cells.iter().map(Cell::volume).sum();
        let v = self.window.volume();
        EquipartitionCheck {
            target_volume: target,
            max_cell_rel_error: worst,
            worst_cell,
            total_rel_error: (total - v).abs() / v,
            owned: self.owned_cells().count(),
            points: self.point_count,
        }
    }

    pub fn check_equipartition(&self, rtol: f64) -> Result<EquipartitionCheck> {
        let chk = self.equipartition_error();
        if chk.passes(rtol) {
            Ok(chk)
        } else {
            Err(Error::Invariant(chk.describe(self)))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// One row per cell: id, owner, volume, diameter, sidelengths, total
    /// displacement components.
    pub fn to_csv(&self) -> String {
        let d = self.d;
        let mut out = String::from("cell,owner,volume,diameter");
        for i in 1..=d {
            out.push_str(&format!(",side_{i}"));
        }
        for i in 1..=d {
            out.push_str(&format!(",disp_{i}"));
        }
        out.push('\n');
        for (idx, c) in self.cells.iter().enumerate() {
            let owner = c.owner_id.map(|o| o.to_string()).unwrap_or_default();
            out.push_str(&format!("{idx},{owner},{},{}", c.volume(), c.diameter()));
            for s in c.sidelengths() {
                out.push_str(&format!(",{s}"));
            }
            match c.displacement() {
                Some(disp) => disp.iter().for_each(|x| out.push_str(&format!(",{x}"))),
                None => (0..d).for_each(|_| out.push(',')),
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquipartitionCheck {
    pub target_volume: f64,
    pub max_cell_rel_error: f64,
    pub worst_cell: Option<usize>,
    pub total_rel_error: f64,
    pub owned: usize,
    pub points: usize,
}

impl EquipartitionCheck {
    pub fn passes(&self, rtol: f64) -> bool {
        self.owned == self.points
            && self.max_cell_rel_error <= rtol
            && self.total_rel_error <= rtol
    }

    pub fn describe(&self, report: &RunReport) -> String {
        let worst = self
            .worst_cell
            .map(|i| {
                let c = &report.cells[i];
                format!(
                    "worst cell {i} (owner {:?}) volume {} bounds {}",
                    c.owner_id,
                    c.volume(),
                    c.bounds
                )
            })
            .unwrap_or_default();
        format!(
            "equipartition: target {} max rel error {:e}, total rel error {:e}, {} owned cells for {} points; {worst}",
            self.target_volume, self.max_cell_rel_error, self.total_rel_error, self.owned, self.points
        )
    }
}

/// Fraction of the pairing cuboid given to the left half for counts
/// `(left, right)` with `left + right > 0`.
pub type WallRule = fn(usize, usize) -> f64;

pub fn proportional_wall(left: usize, right: usize) -> f64 {
    left as f64 / (left + right) as f64
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Keep every [`StepRecord`] (with per-point shifts).
    pub record_steps: bool,
    pub k_max: u32,
    pub wall_rule: WallRule,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            record_steps: true,
            k_max: K_MAX,
            wall_rule: proportional_wall,
        }
    }
}

impl RunOptions {
    pub fn lean() -> Self {
        RunOptions {
            record_steps: false,
            ..Default::default()
        }
    }
}

/// The top-level box of `v + 2^N Z^d` a run acts on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopBox {
    pub shift: Point,
    pub level: u32,
    pub bounds: Cuboid,
}

impl TopBox {
    /// Box of `v + 2^level Z^d` containing `p` (half-open).
    pub fn containing(v: &Point, level: u32, p: &Point) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!(
                "window level {level} exceeds {MAX_LEVEL}"
            )));
        }
        if v.dim() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: v.dim(),
                got: p.dim(),
            });
        }
        if !v.is_finite() || !p.is_finite() {
            return Err(Error::InvalidArgument("non-finite shift or anchor".into()));
        }
        let lattice = ShiftedLattice::new(v.clone(), level as i32);
        let bounds = lattice.cube_at(&lattice.index_of(p));
        Ok(TopBox {
            shift: v.clone(),
            level,
            bounds,
        })
    }

    /// Box containing the center of the configuration's domain.
    pub fn for_config(config: &Configuration, v: &Point, level: u32) -> Result<Self> {
        TopBox::containing(v, level, &config.domain.center())
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    fn side(&self) -> f64 {
        2f64.powi(self.level as i32)
    }

    /// Coordinate of lattice line `index * 2^level` (relative to the lower
    /// corner). The far face is the box's own upper bound so that adjacent
    /// windows share walls exactly.
    fn coord(&self, axis: usize, index: i64, level: i32) -> f64 {
        let x = index as f64 * 2f64.powi(level);
        if x == self.side() {
            self.bounds.upper[axis]
        } else {
            self.bounds.lower[axis] + x
        }
    }

    /// Index of the dyadic cube at `depth` containing coordinate `x`.
    fn locate(&self, axis: usize, x: f64, depth: u32) -> i64 {
        let level = -(depth as i32);
        let max = (1i64 << (self.level + depth)) - 1;
        let mut k = ((x - self.bounds.lower[axis]) * 2f64.powi(depth as i32)).floor() as i64;
        k = k.clamp(0, max);
        while k > 0 && x < self.coord(axis, k, level) {
            k -= 1;
        }
        while k < max && x >= self.coord(axis, k + 1, level) {
            k += 1;
        }
        k
    }

    fn fine_cube(&self, index: &[i64], depth: u32) -> Cuboid {
        let level = -(depth as i32);
        Cuboid {
            lower: (0..self.dim())
                .map(|a| self.coord(a, index[a], level))
                .collect(),
            upper: (0..self.dim())
                .map(|a| self.coord(a, index[a] + 1, level))
                .collect(),
        }
    }
}

fn check_points_inside(config: &Configuration, top: &TopBox) -> Result<()> {
    if config.d != top.dim() {
        return Err(Error::DimensionMismatch {
            expected: top.dim(),
            got: config.d,
        });
    }
    for (i, p) in config.points.iter().enumerate() {
        if !top.bounds.contains_half_open(p) {
            return Err(Error::PointOutsideWindow {
                index: i,
                point: p.0.clone(),
                window: top.bounds.to_string(),
            });
        }
    }
    Ok(())
}

/// Builds the initial cells: one per unit cube, with bad cubes refined into a
/// lazy dyadic tree whose leaves hold at most one point.
fn build_cells(config: &Configuration, top: &TopBox, k_max: u32) -> Result<(Vec<Cell>, u32)> {
    check_points_inside(config, top)?;
    let d = top.dim();
    let per_axis = 1i64 << top.level;
    let total_units = (per_axis as u128).pow(d as u32);
    if total_units > 1 << 26 {
        return Err(Error::InvalidArgument(format!(
            "window with {total_units} unit cubes is too large"
        )));
    }
    // Every point's index at the deepest admissible level; coarser indices
    // are right shifts of it.
    let deepest = k_max.min(62 - top.level);
    let fine: Vec<Vec<i64>> = config
        .points
        .iter()
        .map(|p| (0..d).map(|a| top.locate(a, p.0[a], deepest)).collect())
        .collect();
    let unit_lin = |f: &[i64]| -> usize {
        f.iter()
            .fold(0usize, |acc, &x| acc * per_axis as usize + (x >> deepest) as usize)
    };
    let mut order: Vec<usize> = (0..config.len()).collect();
    order.sort_by_key(|&i| unit_lin(&fine[i]));

    let mut cells = Vec::with_capacity(total_units as usize);
    let mut max_depth = 0;
    let mut unit = vec![0i64; d];
    let mut next = 0;
    for lin in 0..total_units as usize {
        let start = next;
        while next < order.len() && unit_lin(&fine[order[next]]) == lin {
            next += 1;
        }
        let ids = &order[start..next];
        match ids.len() {
            0 => cells.push(new_cell(config, top, 0, &unit, None)),
            1 => cells.push(new_cell(config, top, 0, &unit, Some(ids[0]))),
            _ => {
                let k = refinement_depth(config, &fine, deepest, ids)?;
                max_depth = max_depth.max(k);
                let tree = Refinement {
                    config,
                    top,
                    fine: &fine,
                    deepest,
                    k,
                };
                tree.refine(&unit, 0, ids, &mut cells);
            }
        }
        for a in (0..d).rev() {
            unit[a] += 1;
            if unit[a] < per_axis {
                break;
            }
            unit[a] = 0;
        }
    }
    Ok((cells, max_depth))
}

fn new_cell(
    config: &Configuration,
    top: &TopBox,
    depth: u32,
    fine: &[i64],
    owner: Option<usize>,
) -> Cell {
    let p = owner.map(|i| config.points[i].clone());
    Cell {
        owner_id: owner,
        owner: p.clone(),
        carried_point: p,
        bounds: top.fine_cube(fine, depth),
        origin_cube_index: fine.iter().map(|&x| x >> depth).collect(),
        depth,
        fine_index: fine.to_vec(),
    }
}

/// Smallest `k >= 1` at which the points of a bad cube fall into distinct
/// `2^-k` subcubes. `fine` holds indices at depth `deepest`.
fn refinement_depth(
    config: &Configuration,
    fine: &[Vec<i64>],
    deepest: u32,
    ids: &[usize],
) -> Result<u32> {
    let mut k = 1;
    for (x, &i) in ids.iter().enumerate() {
        for &j in &ids[x + 1..] {
            // depth at which the pair separates: the first axis whose
            // indices differ above the common prefix
            let common = fine[i]
                .iter()
                .zip(&fine[j])
                .map(|(a, b)| (a ^ b).leading_zeros())
                .min()
                .unwrap_or(64);
            if fine[i] == fine[j] {
                return Err(Error::RefinementTooDeep {
                    k_max: deepest,
                    first: i.min(j),
                    second: i.max(j),
                    a: config.points[i.min(j)].0.clone(),
                    b: config.points[i.max(j)].0.clone(),
                });
            }
            // highest differing bit position, counted from the deepest level
            let bit = 63 - common;
            k = k.max(deepest - bit);
        }
    }
    Ok(k)
}

struct Refinement<'a> {
    config: &'a Configuration,
    top: &'a TopBox,
    fine: &'a [Vec<i64>],
    deepest: u32,
    k: u32,
}

impl Refinement<'_> {
    fn refine(&self, node: &[i64], depth: u32, ids: &[usize], cells: &mut Vec<Cell>) {
        if ids.is_empty() {
            cells.push(new_cell(self.config, self.top, depth, node, None));
            return;
        }
        if depth == self.k {
            debug_assert_eq!(ids.len(), 1);
            cells.push(new_cell(self.config, self.top, depth, node, Some(ids[0])));
            return;
        }
        let d = node.len();
        let shift = self.deepest - depth - 1;
        let mut child = vec![0i64; d];
        for mask in 0..(1usize << d) {
            for a in 0..d {
                child[a] = 2 * node[a] + ((mask >> (d - 1 - a)) & 1) as i64;
            }
            let inside: Vec<usize> = ids
                .iter()
                .copied()
                .filter(|&i| (0..d).all(|a| self.fine[i][a] >> shift == child[a]))
                .collect();
            self.refine(&child, depth + 1, &inside, cells);
        }
    }
}

/// Geometry and counts of one pairing cuboid along the step axis.
struct Pairing {
    key: Vec<i64>,
    left: usize,
    right: usize,
    lo: f64,
    mid: f64,
    hi: f64,
    wall: f64,
}

impl Pairing {
    fn place_wall(&mut self, rule: WallRule) {
        self.wall = if self.left + self.right == 0 {
            self.mid
        } else if self.left == 0 {
            self.lo
        } else if self.right == 0 {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * rule(self.left, self.right)
        };
    }

    /// Affine map of the left or right half; the bisector goes exactly to the
    /// new wall and the outer faces stay fixed.
    fn map(&self, x: f64, left: bool) -> f64 {
        if x == self.mid {
            self.wall
        } else if left {
            self.lo + (x - self.lo) * ((self.wall - self.lo) / (self.mid - self.lo))
        } else {
            self.hi - (self.hi - x) * ((self.hi - self.wall) / (self.hi - self.mid))
        }
    }
}

/// Maps one cell of a pairing; returns `(owner id, shift)` when it carries a
/// point.
fn apply_cell(
    p: &Pairing,
    cell: &mut Cell,
    left: bool,
    axis: usize,
    violations: &mut (usize, usize),
) -> Option<(usize, f64)> {
    let (clo, chi) = (cell.bounds.lower[axis], cell.bounds.upper[axis]);
    if (left && chi > p.mid) || (!left && clo < p.mid) {
        violations.0 += 1;
    }
    let (nlo, nhi) = (p.map(clo, left), p.map(chi, left));
    cell.bounds.lower[axis] = nlo;
    cell.bounds.upper[axis] = nhi;
    let id = cell.owner_id?;
    let cp = cell.carried_point.as_mut()?;
    let before = cp.0[axis];
    let after = p.map(before, left);
    cp.0[axis] = after;
    let tol = COORD_ATOL * (1.0 + after.abs());
    if nhi > nlo && (after < nlo - tol || after > nhi + tol) {
        violations.1 += 1;
    }
    Some((id, after - before))
}

struct Engine<'a> {
    top: &'a TopBox,
    opts: &'a RunOptions,
    cells: Vec<Cell>,
    /// Cells still being transported. Ownerless cells drop out once they have
    /// collapsed to zero volume.
    active: Vec<usize>,
    /// Active cells with depth >= 1, by decreasing depth.
    refined: Vec<usize>,
    records: Vec<StepRecord>,
    violations: (usize, usize),
}

impl<'a> Engine<'a> {
    fn new(top: &'a TopBox, opts: &'a RunOptions, cells: Vec<Cell>) -> Self {
        let mut refined: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].depth > 0).collect();
        refined.sort_by_key(|&i| std::cmp::Reverse(cells[i].depth));
        Engine {
            top,
            opts,
            active: (0..cells.len()).collect(),
            cells,
            refined,
            records: Vec::new(),
            violations: (0, 0),
        }
    }

    /// One wall-moving step of stage `n` along 0-based `axis`.
    fn step(&mut self, n: i32, axis: usize) -> f64 {
        let d = self.top.dim();
        let levels: Vec<i32> = (0..d).map(|b| if b >= axis { n } else { n - 1 }).collect();
        let dense = n >= 1;
        let mut strides = vec![1i64; d];
        for b in (0..d.saturating_sub(1)).rev() {
            strides[b] = strides[b + 1] * (1i64 << (self.top.level as i32 - levels[b + 1]));
        }
        let n_dense = if dense {
            (0..d)
                .map(|b| 1usize << (self.top.level as i32 - levels[b]))
                .product()
        } else {
            0
        };
        let mut dense_slot = vec![u32::MAX; n_dense];
        let mut sparse_slot: FxHashMap<Vec<i64>, u32> = FxHashMap::default();
        let mut packed_slot: FxHashMap<u128, u32> = FxHashMap::default();
        // keys at level n - 1 are below 2^(N - n + 1)
        let bits_per_axis = (self.top.level as i32 - n + 1).max(1) as u32;
        let packable = bits_per_axis as usize * d <= 128;
        let mut pairings: Vec<Pairing> = Vec::new();
        let mut slot_of = vec![u32::MAX; self.cells.len()];
        let mut left_of = vec![false; self.cells.len()];
        let mut key = vec![0i64; d];

        // stages n <= 0 only touch refined cells, deepest first
        let candidates: &[usize] = if dense {
            &[]
        } else {
            let end = self
                .refined
                .partition_point(|&ci| self.cells[ci].depth as i32 >= 1 - n);
            &self.refined[..end]
        };
        let visit: &[usize] = if dense { &self.active } else { candidates };
        for &ci in visit {
            let cell = &self.cells[ci];
            let depth = cell.depth as i32;
            if depth < 1 - n {
                continue;
            }
            for b in 0..d {
                key[b] = cell.fine_index[b] >> (levels[b] + depth);
            }
            let left = (cell.fine_index[axis] >> (n - 1 + depth)) & 1 == 0;
            let slot = if dense {
                let lin: i64 = key.iter().zip(&strides).map(|(k, s)| k * s).sum();
                &mut dense_slot[lin as usize]
            } else if packable {
                let packed = key
                    .iter()
                    .fold(0u128, |acc, &k| (acc << bits_per_axis) | k as u128);
                packed_slot.entry(packed).or_insert(u32::MAX)
            } else {
                if !sparse_slot.contains_key(&key[..]) {
                    sparse_slot.insert(key.clone(), u32::MAX);
                }
                sparse_slot.get_mut(&key[..]).expect("inserted above")
            };
            if *slot == u32::MAX {
                *slot = pairings.len() as u32;
                let lo = self.top.coord(axis, key[axis], n);
                let hi = self.top.coord(axis, key[axis] + 1, n);
                let mid = self.top.coord(axis, 2 * key[axis] + 1, n - 1);
                pairings.push(Pairing {
                    key: key.clone(),
                    left: 0,
                    right: 0,
                    lo,
                    mid,
                    hi,
                    wall: mid,
                });
            }
            let s = *slot as usize;
            if cell.owner_id.is_some() {
                if left {
                    pairings[s].left += 1;
                } else {
                    pairings[s].right += 1;
                }
            }
            slot_of[ci] = s as u32;
            left_of[ci] = left;
        }

        for p in pairings.iter_mut() {
            p.place_wall(self.opts.wall_rule);
        }

        let recorded = self.opts.record_steps;
        let mut shifts: Vec<Vec<(usize, f64)>> = if recorded {
            vec![Vec::new(); pairings.len()]
        } else {
            Vec::new()
        };
        let mut max_shift = 0.0f64;
        for &ci in visit {
            let s = slot_of[ci];
            if s == u32::MAX {
                continue;
            }
            let p = &pairings[s as usize];
            let cell = &mut self.cells[ci];
            if let Some((id, shift)) = apply_cell(p, cell, left_of[ci], axis, &mut self.violations) {
                max_shift = max_shift.max(shift.abs());
                if recorded {
                    shifts[s as usize].push((id, shift));
                }
            }
        }

        if recorded {
            for (p, sh) in pairings.iter().zip(shifts) {
                let parent = Cuboid {
                    lower: (0..d)
                        .map(|b| self.top.coord(b, p.key[b], levels[b]))
                        .collect(),
                    upper: (0..d)
                        .map(|b| self.top.coord(b, p.key[b] + 1, levels[b]))
                        .collect(),
                };
                self.records.push(StepRecord {
                    stage: n,
                    axis: axis + 1,
                    parent,
                    old_wall: p.mid,
                    new_wall: p.wall,
                    count_left: p.left,
                    count_right: p.right,
                    shifts: sh,
                });
            }
        }
        max_shift
    }

    fn stage(&mut self, n: i32) -> f64 {
        let m = (0..self.top.dim())
            .rev()
            .map(|axis| self.step(n, axis))
            .fold(0.0, f64::max);
        let cells = &self.cells;
        let live = |&ci: &usize| cells[ci].is_owned() || cells[ci].volume() > 0.0;
        self.active.retain(live);
        self.refined.retain(live);
        m
    }
}

/// Initial cells for `config` in `top`, with every bad cube already
/// equipartitioned by the internal stages `-k+1..=0`. Returns the cells and the
/// records of those internal steps.
pub fn initialize_cells(
    config: &Configuration,
    top: &TopBox,
    opts: &RunOptions,
) -> Result<(Vec<Cell>, Vec<StepRecord>)> {
    let (cells, max_depth) = build_cells(config, top, opts.k_max)?;
    let mut engine = Engine::new(top, opts, cells);
    for n in (1 - max_depth as i32)..=0 {
        engine.stage(n);
    }
    Ok((engine.cells, engine.records))
}

/// Moves the wall of `parent` along 0-based `axis` for the given cells, which
/// must each lie in one half of `parent`. Halves are decided geometrically.
pub fn move_wall(
    cells: &mut [Cell],
    parent: &Cuboid,
    axis: usize,
    stage: i32,
    opts: &RunOptions,
) -> StepRecord {
    let lo = parent.lower[axis];
    let hi = parent.upper[axis];
    let mid = 0.5 * (lo + hi);
    let members: Vec<(usize, bool)> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.bounds.upper[axis] <= mid))
        .collect();
    let mut p = Pairing {
        key: Vec::new(),
        left: 0,
        right: 0,
        lo,
        mid,
        hi,
        wall: mid,
    };
    for &(i, left) in &members {
        if cells[i].is_owned() {
            if left {
                p.left += 1;
            } else {
                p.right += 1;
            }
        }
    }
    p.place_wall(opts.wall_rule);
    let mut violations = (0, 0);
    let shifts = members
        .iter()
        .filter_map(|&(i, left)| apply_cell(&p, &mut cells[i], left, axis, &mut violations))
        .collect();
    StepRecord {
        stage,
        axis: axis + 1,
        parent: parent.clone(),
        old_wall: mid,
        new_wall: p.wall,
        count_left: p.left,
        count_right: p.right,
        shifts,
    }
}

/// Runs the `d` steps of stage `n >= 1` over all cells of `top`.
pub fn run_stage(
    cells: Vec<Cell>,
    top: &TopBox,
    stage: i32,
    opts: &RunOptions,
) -> (Vec<Cell>, Vec<StepRecord>) {
    let mut engine = Engine::new(top, opts, cells);
    engine.stage(stage);
    (engine.cells, engine.records)
}

pub fn run_akt(config: &Configuration, v: &Point, stages: u32) -> Result<RunReport> {
    run_akt_with(config, v, stages, &RunOptions::default())
}

pub fn run_akt_with(
    config: &Configuration,
    v: &Point,
    stages: u32,
    opts: &RunOptions,
) -> Result<RunReport> {
    let top = TopBox::for_config(config, v, stages)?;
    run_in_box(config, &top, opts)
}

/// Runs the scheme in an explicit top-level box. Points outside the box are
/// rejected.
pub fn run_in_box(config: &Configuration, top: &TopBox, opts: &RunOptions) -> Result<RunReport> {
    if config.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let (cells, max_depth) = build_cells(config, top, opts.k_max)?;
    let origin = config.origin_index();
    let mut engine = Engine::new(top, opts, cells);
    let origin_cell = origin.and_then(|o| engine.cells.iter().position(|c| c.owner_id == Some(o)));
    let snapshot = |engine: &Engine, stage: i32, trace: &mut Vec<StageSnapshot>| {
        if let Some(ci) = origin_cell {
            let c = &engine.cells[ci];
            trace.push(StageSnapshot {
                stage,
                bounds: c.bounds.clone(),
                carried: c.carried_point.clone().expect("origin cell is owned"),
            });
        }
    };

    let first = 1 - max_depth as i32;
    let mut trace = Vec::new();
    snapshot(&engine, first - 1, &mut trace);
    let mut stage_max_shift = Vec::new();
    for n in first..=top.level as i32 {
        let m = engine.stage(n);
        stage_max_shift.push(StageShift {
            stage: n,
            max_abs_shift: m,
        });
        snapshot(&engine, n, &mut trace);
    }

    let mut displacements = vec![Vec::new(); config.len()];
    for c in &engine.cells {
        if let (Some(id), Some(disp)) = (c.owner_id, c.displacement()) {
            displacements[id] = disp;
        }
    }
    Ok(RunReport {
        d: config.d,
        shift: v_of(top),
        stages: top.level,
        window: top.bounds.clone(),
        point_count: config.len(),
        max_depth,
        cells: engine.cells,
        steps: engine.records,
        displacements,
        stage_max_shift,
        origin_trace: trace,
        straddle_violations: engine.violations.0,
        containment_violations: engine.violations.1,
    })
}

fn v_of(top: &TopBox) -> Point {
    top.shift.clone()
}

/// The cell owned by the origin.
pub fn origin_cell(report: &RunReport) -> Result<&Cell> {
    report
        .cells
        .iter()
        .find(|c| c.owner.as_ref().is_some_and(Point::is_origin))
        .ok_or(Error::MissingOrigin)
}
