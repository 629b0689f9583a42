//! Turns a discretized fractional allocation into a pure one.
//!
//! Grid cells are grouped into regions with a common set of supporting
//! centers. Inside a region every participating center grows a ball around
//! itself; grid cells are handed out in increasing distance order, and a center
//! stops claiming once its quota is used up.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::fractional::{FractionalField, GridSpec};
use crate::geometry::Point;

pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// Linear grid indices, ascending.
    pub cells: Vec<usize>,
    /// Participating center ids, ascending.
    pub centers: Vec<usize>,
    pub positions: Vec<Point>,
    /// Fractional mass of each participating center on the region.
    pub quotas: Vec<f64>,
    pub cell_measure: f64,
}

impl Region {
    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 * self.cell_measure
    }

    /// Quotas in whole grid cells: floors of `c_i / h^d`, with the leftover
    /// cells going to the largest remainders (ties to the lower center id).
    pub fn cell_quotas(&self) -> Vec<usize> {
        let raw: Vec<f64> = self.quotas.iter().map(|c| c / self.cell_measure).collect();
        let mut q: Vec<usize> = raw.iter().map(|r| r.floor().max(0.0) as usize).collect();
        let assigned: usize = q.iter().sum();
        let mut left = self.cells.len().saturating_sub(assigned);
        let mut order: Vec<usize> = (0..q.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = raw[a] - raw[a].floor();
            let rb = raw[b] - raw[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            q[i] += 1;
            left -= 1;
        }
        q
    }
}

fn neighbors(grid: &GridSpec, lin: usize) -> Vec<usize> {
    let shape = grid.shape();
    let idx = grid.unravel(lin);
    let mut out = Vec::with_capacity(2 * shape.len());
    for a in 0..shape.len() {
        if idx[a] > 0 {
            let mut j = idx.clone();
            j[a] -= 1;
            out.push(grid.linear(&j));
        }
        if idx[a] + 1 < shape[a] {
            let mut j = idx.clone();
            j[a] += 1;
            out.push(grid.linear(&j));
        }
    }
    out
}

/// Connected components of grid cells sharing the same support label.
pub fn compute_regions(field: &FractionalField, weight_floor: f64) -> Result<Vec<Region>> {
    let grid = &field.grid;
    let n = grid.len();
    let mut support: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut positions = BTreeMap::new();
    for c in &field.centers {
        positions.insert(c.center, c.position.clone());
        for &(g, w) in &c.entries {
            if g >= n {
                return Err(Error::InvalidArgument(format!(
                    "grid index {g} out of range for {n} grid points"
                )));
            }
            if w > weight_floor {
                support[g].push((c.center, w));
            }
        }
    }
    for s in support.iter_mut() {
        s.sort_by_key(|e| e.0);
    }
    if let Some(g) = support.iter().position(Vec::is_empty) {
        return Err(Error::UnsupportedCell(grid.unravel(g)));
    }

    let label = |g: usize| support[g].iter().map(|e| e.0);
    let mut seen = vec![false; n];
    let mut regions = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut cells = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(g) = queue.pop_front() {
            for nb in neighbors(grid, g) {
                if !seen[nb] && label(nb).eq(label(start)) {
                    seen[nb] = true;
                    cells.push(nb);
                    queue.push_back(nb);
                }
            }
        }
        cells.sort_unstable();
        let centers: Vec<usize> = label(start).collect();
        let mut quotas = vec![0.0; centers.len()];
        for &g in &cells {
            for (k, &(_, w)) in support[g].iter().enumerate() {
                quotas[k] += w;
            }
        }
        let h = grid.cell_measure();
        regions.push(Region {
            positions: centers.iter().map(|c| positions[c].clone()).collect(),
            cells,
            centers,
            quotas: quotas.into_iter().map(|q| q * h).collect(),
            cell_measure: h,
        });
    }
    Ok(regions)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub cell: usize,
    pub center: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionAllocation {
    pub region: usize,
    /// Claims in capture order.
    pub claims: Vec<Claim>,
}

/// Distance-ordered capture inside one region.
pub fn grow_balls(grid: &GridSpec, region: &Region) -> Result<Vec<Claim>> {
    let total: f64 = region.quotas.iter().sum();
    if region.cells.is_empty() || (total - region.measure()).abs() > 1e-6 * region.measure() {
        return Err(Error::InvalidArgument(format!(
            "quotas sum to {total}, region measure is {}",
            region.measure()
        )));
    }
    let mut remaining = region.cell_quotas();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(region.cells.len() * region.centers.len());
    for (k, pos) in region.positions.iter().enumerate() {
        for &g in &region.cells {
            pairs.push((grid.center(&grid.unravel(g)).distance(pos), k, g));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    let mut claims = Vec::with_capacity(region.cells.len());
    for (dist, k, g) in pairs {
        if remaining[k] == 0 || owner.contains_key(&g) {
            continue;
        }
        owner.insert(g, k);
        remaining[k] -= 1;
        claims.push(Claim {
            cell: g,
            center: region.centers[k],
            distance: dist,
        });
        if claims.len() == region.cells.len() {
            break;
        }
    }
    if claims.len() != region.cells.len() {
        let missing: Vec<usize> = region
            .cells
            .iter()
            .filter(|g| !owner.contains_key(g))
            .take(5)
            .copied()
            .collect();
        return Err(Error::Unreachable {
            region: region.cells[0],
            detail: format!(
                "{} of {} cells unclaimed (first {:?}), unused quota {:?}",
                region.cells.len() - claims.len(),
                region.cells.len(),
                missing,
                remaining
            ),
        });
    }
    Ok(claims)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureAllocation {
    pub grid: GridSpec,
    /// Owner center id per linear grid index.
    pub owner: Vec<Option<usize>>,
    pub achieved: BTreeMap<usize, f64>,
    pub positions: BTreeMap<usize, Point>,
    pub regions: Vec<RegionAllocation>,
}

impl PureAllocation {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// 2-D only: one rectangle per grid cell colored by owner, centers on top.
    pub fn to_svg(&self) -> Result<String> {
        if self.grid.dim() != 2 {
            return Err(Error::InvalidArgument("SVG output needs d = 2".into()));
        }
        let w = &self.grid.window;
        let h = self.grid.spacing;
        let (x0, y1) = (w.lower[0], w.upper[1]);
        let scale = 480.0 / w.sides().iter().cloned().fold(0.0, f64::max);
        let px = |x: f64| (x - x0) * scale;
        let py = |y: f64| (y1 - y) * scale;
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.3}\" height=\"{:.3}\">\n",
            w.sides()[0] * scale,
            w.sides()[1] * scale
        );
        for (g, o) in self.owner.iter().enumerate() {
            let c = self.grid.center(&self.grid.unravel(g));
            let fill = o.map(color).unwrap_or_else(|| "#ffffff".into());
            s.push_str(&format!(
                "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{fill}\"/>\n",
                px(c.0[0] - h / 2.0),
                py(c.0[1] + h / 2.0),
                h * scale,
                h * scale
            ));
        }
        for (id, p) in &self.positions {
            if w.contains(p) {
                s.push_str(&format!(
                    "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"black\" data-center=\"{id}\"/>\n",
                    px(p.0[0]),
                    py(p.0[1])
                ));
            }
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

pub(crate) fn color(id: usize) -> String {
    let hue = (id as f64 * 137.508) % 360.0;
    format!("hsl({hue:.1},65%,70%)")
}

/// Runs every region and assembles the pure allocation.
pub fn purify(field: &FractionalField, regions: &[Region]) -> Result<PureAllocation> {
    let grid = &field.grid;
    let per_region: Vec<Vec<Claim>> = regions
        .par_iter()
        .map(|r| grow_balls(grid, r))
        .collect::<Result<_>>()?;
    let mut owner = vec![None; grid.len()];
    let mut achieved = BTreeMap::new();
    for claims in &per_region {
        for c in claims {
            if owner[c.cell].replace(c.center).is_some() {
                return Err(Error::Invariant(format!("grid cell {} claimed twice", c.cell)));
            }
            *achieved.entry(c.center).or_insert(0.0) += grid.cell_measure();
        }
    }
    Ok(PureAllocation {
        grid: grid.clone(),
        owner,
        achieved,
        positions: field
            .centers
            .iter()
            .map(|c| (c.center, c.position.clone()))
            .collect(),
        regions: per_region
            .into_iter()
            .enumerate()
            .map(|(region, claims)| RegionAllocation { region, claims })
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotaEntry {
    pub center: usize,
    pub achieved: f64,
    pub quota: f64,
    pub regions: usize,
    pub tolerance: f64,
}

impl QuotaEntry {
    pub fn ok(&self) -> bool {
        (self.achieved - self.quota).abs() <= self.tolerance * (1.0 + 1e-9)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuotaReport {
    pub entries: Vec<QuotaEntry>,
    pub unowned_cells: usize,
    pub support_violations: usize,
    pub order_violations: usize,
}

impl QuotaReport {
    pub fn passes(&self) -> bool {
        self.entries.iter().all(QuotaEntry::ok)
            && self.unowned_cells == 0
            && self.support_violations == 0
            && self.order_violations == 0
    }

    pub fn worst(&self) -> Option<&QuotaEntry> {
        self.entries.iter().max_by(|a, b| {
            ((a.achieved - a.quota).abs() / a.tolerance)
                .total_cmp(&((b.achieved - b.quota).abs() / b.tolerance))
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("center,achieved,quota,regions,tolerance,ok\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.center,
                e.achieved,
                e.quota,
                e.regions,
                e.tolerance,
                e.ok()
            ));
        }
        s
    }
}

/// Achieved measure against quotas, support containment, coverage, and
/// per-region capture order.
pub fn verify_quotas(alloc: &PureAllocation, regions: &[Region]) -> QuotaReport {
    let h = alloc.grid.cell_measure();
    let mut quota: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    let mut support_violations = 0;
    let mut unowned = 0;
    for r in regions {
        for (k, &c) in r.centers.iter().enumerate() {
            let e = quota.entry(c).or_insert((0.0, 0));
            e.0 += r.quotas[k];
            e.1 += 1;
        }
        for &g in &r.cells {
            match alloc.owner.get(g).copied().flatten() {
                None => unowned += 1,
                Some(o) if !r.centers.contains(&o) => support_violations += 1,
                Some(_) => {}
            }
        }
    }
    let order_violations = alloc
        .regions
        .iter()
        .map(|r| r.claims.windows(2).filter(|w| w[1].distance < w[0].distance).count())
        .sum();
    let entries = quota
        .into_iter()
        .map(|(center, (q, n))| QuotaEntry {
            center,
            achieved: alloc.achieved.get(&center).copied().unwrap_or(0.0),
            quota: q,
            regions: n,
            tolerance: h * n as f64,
        })
        .collect();
    QuotaReport {
        entries,
        unowned_cells: unowned,
        support_violations,
        order_violations,
    }
}
