//! Invariant suites shared by `akt verify` and the test targets.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fractional::{average_field, periodicity_gap, restrict, sample_shifts, GridSpec, PERIODICITY_ATOL};
use crate::geometry::{Cuboid, Point};
use crate::pointprocess::{palm, sample_binomial, sample_poisson, sample_poisson_with};
use crate::rng::rng_for;
use crate::stats::{chernoff_bound, exact_poisson_two_sided_tail};
use crate::transport::{run_akt_with, run_in_box, RunOptions, RunReport, TopBox, WallRule, VOLUME_RTOL};

pub const SHIFT_ATOL: f64 = 1e-12;
pub const SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Equipartition,
    Periodicity,
    Chernoff,
    SumToOne,
    ShiftFormula,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Equipartition,
        Suite::Periodicity,
        Suite::Chernoff,
        Suite::SumToOne,
        Suite::ShiftFormula,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Equipartition => "equipartition",
            Suite::Periodicity => "periodicity",
            Suite::Chernoff => "chernoff",
            Suite::SumToOne => "sum-to-one",
            Suite::ShiftFormula => "shift-formula",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub checks: usize,
    pub failures: usize,
    /// Largest observed error in the suite's own units.
    pub worst: f64,
    pub detail: String,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0
    }
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} checks, {} failures, worst {:e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.checks,
            self.failures,
            self.worst
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub wall_rule: WallRule,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 20240601,
            wall_rule: crate::transport::proportional_wall,
        }
    }
}

impl VerifyOptions {
    fn run_options(&self) -> RunOptions {
        RunOptions {
            wall_rule: self.wall_rule,
            ..RunOptions::default()
        }
    }
}

fn uniform_shift(d: usize, side: f64, rng: &mut impl Rng) -> Point {
    Point((0..d).map(|_| rng.gen::<f64>() * side).collect())
}

/// Binomial configurations of `n` points in `[0, side)^2`, each translated
/// onto the window `[v, v + side)^2` for several random shifts `v`; every
/// owned cell must have volume `side^2 / n`.
pub fn equipartition_suite(
    seeds: usize,
    shifts: usize,
    n: usize,
    side: f64,
    opts: &VerifyOptions,
) -> Result<SuiteOutcome> {
    let level = side.log2().round() as u32;
    let run_opts = RunOptions {
        record_steps: false,
        ..opts.run_options()
    };
    let mut out = SuiteOutcome {
        suite: Suite::Equipartition,
        checks: 0,
        failures: 0,
        worst: 0.0,
        detail: String::new(),
    };
    for s in 0..seeds {
        let config = sample_binomial(&Cuboid::cube(2, side), n, crate::rng::derive_seed(opts.seed, "equipartition", s as u64))?;
        let mut rng = rng_for(opts.seed, "equipartition-shift", s as u64);
        for _ in 0..shifts {
            let v = uniform_shift(2, 1.0, &mut rng);
            let report = run_akt_with(&config.translated(&v.0), &v, level, &run_opts)?;
            let check = report.equipartition_error();
            out.checks += 1;
            let err = check.max_cell_rel_error.max(check.total_rel_error);
            out.worst = out.worst.max(err);
            if !check.passes(VOLUME_RTOL) {
                if out.failures == 0 {
                    out.detail = check.describe(&report);
                }
                out.failures += 1;
            }
        }
    }
    Ok(out)
}

/// Random Palm configurations, shifts and axes at the given level; the
/// origin's cell must not move when the shift moves by a lattice period.
pub fn periodicity_suite(triples: usize, level: u32, opts: &VerifyOptions) -> Result<SuiteOutcome> {
    let side = 2f64.powi(level as i32);
    let mut out = SuiteOutcome {
        suite: Suite::Periodicity,
        checks: 0,
        failures: 0,
        worst: 0.0,
        detail: String::new(),
    };
    for t in 0..triples {
        let mut rng = rng_for(opts.seed, "periodicity", t as u64);
        let d = 2 + t % 2;
        let domain = Cuboid::new(vec![-side; d], vec![side; d])?;
        let config = palm(&sample_poisson_with(&domain, 1.0, opts.seed, &mut rng)?)?;
        let v = uniform_shift(d, side, &mut rng);
        let axis = rng.gen_range(0..d);
        let gap = periodicity_gap(&config, &v, level, axis)?;
        out.checks += 1;
        out.worst = out.worst.max(gap);
        if gap > PERIODICITY_ATOL {
            if out.failures == 0 {
                out.detail = format!("trial {t}: d={d} v={:?} axis {} gap {gap:e}", v.0, axis + 1);
            }
            out.failures += 1;
        }
    }
    Ok(out)
}

/// `P(|X - lambda| > lambda rho) <= 2 exp(-lambda rho^2 / 4)` on a grid of
/// `rho` values in `(0, 2]`.
pub fn chernoff_suite(lambdas: &[f64], grid_points: usize) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome {
        suite: Suite::Chernoff,
        checks: 0,
        failures: 0,
        worst: f64::NEG_INFINITY,
        detail: String::new(),
    };
    for &lambda in lambdas {
        for i in 1..=grid_points {
            let rho = 2.0 * i as f64 / grid_points as f64;
            let exact = exact_poisson_two_sided_tail(lambda, rho)?;
            let bound = chernoff_bound(lambda, rho)?;
            out.checks += 1;
            // ratio exact / bound; must stay at or below 1
            let ratio = if bound > 0.0 { exact / bound } else if exact > 0.0 { f64::INFINITY } else { 0.0 };
            out.worst = out.worst.max(ratio);
            if exact > bound {
                if out.failures == 0 {
                    out.detail = format!("lambda {lambda} rho {rho}: exact {exact:e} > bound {bound:e}");
                }
                out.failures += 1;
            }
        }
    }
    out.detail = if out.failures == 0 {
        format!("max exact/bound ratio {:.4}", out.worst)
    } else {
        out.detail
    };
    Ok(out)
}

/// Fractional field of a Palm configuration; weights at every grid point must
/// sum to one and lie in `[0, 1]`.
pub fn sum_to_one_suite(
    level: u32,
    samples: usize,
    spacing: f64,
    half_width: f64,
    opts: &VerifyOptions,
) -> Result<SuiteOutcome> {
    let side = 2f64.powi(level as i32);
    let reach = half_width + side;
    let domain = Cuboid::new(vec![-reach; 2], vec![reach; 2])?;
    let config = palm(&sample_poisson(&domain, 1.0, crate::rng::derive_seed(opts.seed, "sum-to-one", 0))?)?;
    let grid = GridSpec::new(Cuboid::new(vec![-half_width; 2], vec![half_width; 2])?, spacing)?;
    let field = average_field(&config, level, &sample_shifts(2, level, samples, opts.seed), &grid)?;
    let audit = field.audit();
    let out_of_range = field
        .centers
        .iter()
        .flat_map(|c| c.entries.iter())
        .filter(|e| !(0.0..=1.0).contains(&e.1))
        .count();
    let bad_sums = field.totals().iter().filter(|t| (*t - 1.0).abs() > SUM_TOL).count();
    Ok(SuiteOutcome {
        suite: Suite::SumToOne,
        checks: audit.grid_points,
        failures: bad_sums + out_of_range,
        worst: audit.max_abs_error,
        detail: format!("{} centers, weights in [{}, {}]", field.centers.len(), audit.min_weight, audit.max_weight),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShiftFormulaCheck {
    pub steps: usize,
    pub stages: usize,
    pub max_step_error: f64,
    pub max_stage_error: f64,
}

/// Replays the origin's recorded steps: every recorded shift is compared with
/// the closed form evaluated from the step's counts and the pre-step position,
/// and the per-stage displacement of the traced origin is compared with the sum
/// of the closed forms.
pub fn shift_formula_check(report: &RunReport) -> Result<ShiftFormulaCheck> {
    let origin_id = report
        .cells
        .iter()
        .find(|c| c.owner.as_ref().is_some_and(Point::is_origin))
        .and_then(|c| c.owner_id)
        .ok_or(Error::MissingOrigin)?;
    let trace = &report.origin_trace;
    if trace.is_empty() {
        return Err(Error::MissingOrigin);
    }
    let mut out = ShiftFormulaCheck::default();
    let mut x = trace[0].carried.0.clone();
    let mut records = report.steps.iter().peekable();
    for snap in &trace[1..] {
        let start = x.clone();
        let mut predicted = start.clone();
        while let Some(rec) = records.peek() {
            if rec.stage > snap.stage {
                break;
            }
            let rec = records.next().expect("peeked");
            if let Some(&(_, shift)) = rec.shifts.iter().find(|s| s.0 == origin_id) {
                let a = rec.axis - 1;
                let formula = rec.predicted_shift(x[a]);
                out.steps += 1;
                out.max_step_error = out.max_step_error.max((formula - shift).abs());
                predicted[a] += formula;
                x[a] += shift;
            }
        }
        // snapshot displacement vs. summed closed forms
        for a in 0..x.len() {
            let recorded = snap.carried.0[a] - start[a];
            out.max_stage_error = out.max_stage_error.max((recorded - (predicted[a] - start[a])).abs());
        }
        x = snap.carried.0.clone();
        out.stages += 1;
    }
    Ok(out)
}

/// Seeded Palm runs with step recording; every origin displacement must match
/// the closed form.
pub fn shift_formula_suite(runs: usize, level: u32, opts: &VerifyOptions) -> Result<SuiteOutcome> {
    let side = 2f64.powi(level as i32);
    let mut out = SuiteOutcome {
        suite: Suite::ShiftFormula,
        checks: 0,
        failures: 0,
        worst: 0.0,
        detail: String::new(),
    };
    let run_opts = opts.run_options();
    for r in 0..runs {
        let mut rng = rng_for(opts.seed, "shift-formula", r as u64);
        let d = 2 + r % 2;
        let domain = Cuboid::new(vec![-side; d], vec![side; d])?;
        let config = palm(&sample_poisson_with(&domain, 1.0, opts.seed, &mut rng)?)?;
        let v = uniform_shift(d, side, &mut rng);
        let top = TopBox::containing(&v, level, &Point::origin(d))?;
        let (sub, _) = restrict(&config, &top.bounds);
        let report = run_in_box(&sub, &top, &run_opts)?;
        let check = shift_formula_check(&report)?;
        let err = check.max_step_error.max(check.max_stage_error);
        out.checks += check.stages;
        out.worst = out.worst.max(err);
        if err > SHIFT_ATOL {
            if out.failures == 0 {
                out.detail = format!("run {r}: d={d} v={:?} error {err:e}", v.0);
            }
            out.failures += 1;
        }
    }
    Ok(out)
}

/// A deliberately wrong wall rule (one phantom point on the left), used to
/// check that the suites notice a broken scheme.
pub fn off_by_one_wall(left: usize, right: usize) -> f64 {
    (left as f64 + 1.0) / (left + right + 1) as f64
}

/// Runs the selected suites at their default sizes.
pub fn run_suites(which: &[Suite], opts: &VerifyOptions) -> Result<Vec<SuiteOutcome>> {
    which
        .iter()
        .map(|s| match s {
            Suite::Equipartition => equipartition_suite(10, 5, 200, 16.0, opts),
            Suite::Periodicity => periodicity_suite(40, 4, opts),
            Suite::Chernoff => chernoff_suite(&[1.0, 10.0, 100.0, 1000.0], 40),
            Suite::SumToOne => sum_to_one_suite(3, 16, 0.125, 2.0, opts),
            Suite::ShiftFormula => shift_formula_suite(40, 4, opts),
        })
        .collect()
}
