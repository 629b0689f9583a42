//! Poisson concentration checks, diameter-tail sweeps, decay fits and
//! sidelength diagnostics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::geometry::{diameter_with_anchor, Point};
use crate::pointprocess::{palm, sample_poisson_with};
use crate::rng::rng_for;
use crate::transport::{origin_cell, run_in_box, RunOptions, RunReport, TopBox};

/// `2 exp(-lambda rho^2 / 4)`, the two-sided concentration bound for a
/// Poisson variable of mean `lambda`, valid for `0 <= rho <= 2`.
pub fn chernoff_bound(lambda: f64, rho: f64) -> Result<f64> {
    Ok(log_chernoff_bound(lambda, rho)?.exp())
}

pub fn log_chernoff_bound(lambda: f64, rho: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if !(0.0..=2.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("rho must lie in [0, 2], got {rho}")));
    }
    Ok(std::f64::consts::LN_2 - lambda * rho * rho / 4.0)
}

fn log_pmf(lambda: f64, k: u64) -> f64 {
    -lambda + k as f64 * lambda.ln() - ln_gamma(k as f64 + 1.0)
}

/// `log sum` of pmf terms starting at `start` and walking away from the mode
/// (`down` towards 0, otherwise upwards) until the terms are negligible.
fn log_tail_from(lambda: f64, start: u64, down: bool) -> f64 {
    let head = log_pmf(lambda, start);
    let mut sum = 1.0f64;
    let mut term = 1.0f64;
    let mut k = start;
    loop {
        if down {
            if k == 0 {
                break;
            }
            term *= k as f64 / lambda;
            k -= 1;
        } else {
            k += 1;
            term *= lambda / k as f64;
        }
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    head + sum.ln()
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `log P(|X - lambda| > lambda rho)` for `X ~ Poisson(lambda)`, summed from
/// the band edges outward in log space.
pub fn log_exact_poisson_two_sided_tail(lambda: f64, rho: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be non-negative, got {rho}")));
    }
    let t = lambda * rho;
    let excluded = |k: u64| (k as f64 - lambda).abs() > t;

    let mut lower = f64::NEG_INFINITY;
    if lambda - t > 0.0 {
        // largest k below the band
        let mut k = (lambda - t).floor().max(0.0) as u64;
        while k > 0 && !excluded(k) {
            k -= 1;
        }
        if excluded(k) && (k as f64) < lambda {
            lower = log_tail_from(lambda, k, true);
        }
    }

    let mut k = (lambda + t).floor() as u64;
    while !excluded(k) {
        k += 1;
    }
    let upper = log_tail_from(lambda, k, false);
    Ok(log_add(lower, upper))
}

pub fn exact_poisson_two_sided_tail(lambda: f64, rho: f64) -> Result<f64> {
    Ok(log_exact_poisson_two_sided_tail(lambda, rho)?.exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSweepParams {
    pub d: usize,
    pub levels: u32,
    pub intensity: f64,
    pub trials: usize,
    /// Minimum distance between the measured cell (with its center) and the
    /// window boundary.
    pub margin: f64,
    pub seed: u64,
    pub bin_width: f64,
}

impl TailSweepParams {
    pub fn new(d: usize, levels: u32, intensity: f64, trials: usize, seed: u64) -> Self {
        TailSweepParams {
            d,
            levels,
            intensity,
            trials,
            margin: default_margin(levels),
            seed,
            bin_width: 0.125,
        }
    }
}

/// A quarter of the window side.
pub fn default_margin(levels: u32) -> f64 {
    2f64.powi(levels as i32) / 4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub d: usize,
    pub intensity: f64,
    pub levels: u32,
    pub trials: usize,
    pub kept: usize,
    pub discarded: usize,
    pub margin: f64,
    pub seed: u64,
    pub edges: Vec<f64>,
    /// Number of kept trials with diameter strictly above each edge.
    pub exceed_counts: Vec<usize>,
    pub survival: Vec<f64>,
    /// Kept diameters, sorted.
    pub diameters: Vec<f64>,
}

impl TailStats {
    /// Bins sorted samples on `edges`.
    pub fn from_samples(
        params: &TailSweepParams,
        mut diameters: Vec<f64>,
        discarded: usize,
        edges: Vec<f64>,
    ) -> Self {
        diameters.sort_by(f64::total_cmp);
        let kept = diameters.len();
        let exceed_counts: Vec<usize> = edges
            .iter()
            .map(|&r| kept - diameters.partition_point(|&x| x <= r))
            .collect();
        let survival = exceed_counts
            .iter()
            .map(|&c| if kept == 0 { 0.0 } else { c as f64 / kept as f64 })
            .collect();
        TailStats {
            d: params.d,
            intensity: params.intensity,
            levels: params.levels,
            trials: params.trials,
            kept,
            discarded,
            margin: params.margin,
            seed: params.seed,
            edges,
            exceed_counts,
            survival,
            diameters,
        }
    }

    pub fn discard_rate(&self) -> f64 {
        self.discarded as f64 / self.trials as f64
    }

    pub fn median(&self) -> Option<f64> {
        if self.diameters.is_empty() {
            return None;
        }
        let n = self.diameters.len();
        Some(if n % 2 == 1 {
            self.diameters[n / 2]
        } else {
            0.5 * (self.diameters[n / 2 - 1] + self.diameters[n / 2])
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,exceed_count,kept,survival\n");
        for ((r, c), p) in self.edges.iter().zip(&self.exceed_counts).zip(&self.survival) {
            out.push_str(&format!("{r},{c},{},{p}\n", self.kept));
        }
        out
    }
}

/// One Palm run for stream `label`, trial `trial`: a uniform shift in
/// `[0, 2^N)^d`, the box containing the origin, a Poisson sample in it and the
/// origin added.
pub fn palm_trial(
    d: usize,
    levels: u32,
    intensity: f64,
    seed: u64,
    label: &str,
    trial: usize,
    opts: &RunOptions,
) -> Result<RunReport> {
    let mut rng = rng_for(seed, label, trial as u64);
    let side = 2f64.powi(levels as i32);
    let v = Point((0..d).map(|_| rng.gen::<f64>() * side).collect());
    let top = TopBox::containing(&v, levels, &Point::origin(d))?;
    let base = sample_poisson_with(&top.bounds, intensity, seed, &mut rng)?;
    run_in_box(&palm(&base)?, &top, opts)
}

/// Outcome of one tail trial: the diameter, or `None` when the origin's cell
/// came within the margin of the window boundary.
pub fn tail_trial(params: &TailSweepParams, trial: usize) -> Result<Option<f64>> {
    let report = palm_trial(
        params.d,
        params.levels,
        params.intensity,
        params.seed,
        "tail",
        trial,
        &RunOptions::lean(),
    )?;
    let origin = Point::origin(params.d);
    let cell = origin_cell(&report)?;
    let w = &report.window;
    let clear = (0..params.d).all(|a| {
        let lo = cell.bounds.lower[a].min(0.0);
        let hi = cell.bounds.upper[a].max(0.0);
        lo - w.lower[a] >= params.margin && w.upper[a] - hi >= params.margin
    });
    Ok(clear.then(|| diameter_with_anchor(&cell.bounds, &origin)))
}

pub fn tail_sweep(params: &TailSweepParams) -> Result<TailStats> {
    if params.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if params.d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if !(params.bin_width > 0.0) || !(params.margin >= 0.0) {
        return Err(Error::InvalidArgument("bin width must be positive and margin non-negative".into()));
    }
    let outcomes: Vec<Option<f64>> = (0..params.trials)
        .into_par_iter()
        .map(|t| tail_trial(params, t))
        .collect::<Result<_>>()?;
    let kept: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let discarded = params.trials - kept.len();
    if kept.is_empty() {
        return Err(Error::AllTrialsDiscarded {
            trials: params.trials,
        });
    }
    let max = kept.iter().copied().fold(0.0, f64::max);
    let bins = (max / params.bin_width).ceil() as usize + 1;
    let edges = (0..=bins).map(|i| i as f64 * params.bin_width).collect();
    Ok(TailStats::from_samples(params, kept, discarded, edges))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `log(-log P)` against `log R`.
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub bins_used: usize,
    pub p_min: f64,
    pub p_max: f64,
}

/// Default survival range used by the decay fit.
pub const DEFAULT_P_MIN: f64 = 0.01;
pub const DEFAULT_P_MAX: f64 = 0.9;

/// Least-squares fit of `log(-log P)` on `log R` over the bins with
/// `p_min <= P <= p_max` and `0 < P < 1`, `R > 0`.
pub fn fit_decay_curve(edges: &[f64], survival: &[f64], p_min: f64, p_max: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64, f64)> = edges
        .iter()
        .zip(survival)
        .filter(|(&r, &p)| r > 0.0 && p > 0.0 && p < 1.0 && p >= p_min && p <= p_max)
        .map(|(&r, &p)| (r, r.ln(), (-p.ln()).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientBins { usable: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.2).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.1 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.1 - mx) * (p.2 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientBins { usable: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.2 - intercept - slope * p.1).powi(2))
        .sum();
    let slope_std_error = if pts.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(DecayFit {
        slope,
        intercept,
        slope_std_error,
        r_min: pts.first().map(|p| p.0).unwrap_or_default(),
        r_max: pts.last().map(|p| p.0).unwrap_or_default(),
        bins_used: pts.len(),
        p_min,
        p_max,
    })
}

pub fn fit_decay(stats: &TailStats, p_min: f64, p_max: f64) -> Result<DecayFit> {
    fit_decay_curve(&stats.edges, &stats.survival, p_min, p_max)
}

/// Lower and upper bounds of the sidelength-product band.
pub const PRODUCT_BAND: (f64, f64) = (0.5, 2.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSidelengths {
    /// `prod l_i` of the origin's final cell.
    pub product: f64,
    /// Largest max-norm sidelength over all recorded stages.
    pub max_side: f64,
    /// `|l(C_{n+1}) - l(C_n)|` (max norm) for consecutive recorded stages.
    pub increments: Vec<f64>,
    pub outside_band: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidelengthSummary {
    pub runs: Vec<RunSidelengths>,
    pub violation_fraction: f64,
}

impl SidelengthSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,product,max_side,outside_band,increments\n");
        for (i, r) in self.runs.iter().enumerate() {
            let inc: Vec<String> = r.increments.iter().map(|x| x.to_string()).collect();
            out.push_str(&format!(
                "{i},{},{},{},{}\n",
                r.product,
                r.max_side,
                r.outside_band,
                inc.join(";")
            ));
        }
        out
    }
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Sidelength diagnostics of the origin's cell in one run, or `None` when
/// the run has no origin.
pub fn run_sidelengths(report: &RunReport) -> Option<RunSidelengths> {
    let sides: Vec<Vec<f64>> = report.origin_trace.iter().map(|s| s.bounds.sides()).collect();
    let last = sides.last()?;
    let product: f64 = last.iter().product();
    let increments = sides
        .windows(2)
        .map(|w| {
            let diff: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
            max_norm(&diff)
        })
        .collect();
    Some(RunSidelengths {
        product,
        max_side: sides.iter().map(|s| max_norm(s)).fold(0.0, f64::max),
        increments,
        outside_band: !(product > PRODUCT_BAND.0 && product < PRODUCT_BAND.1),
    })
}

fn summarize(runs: Vec<RunSidelengths>) -> SidelengthSummary {
    let violation_fraction = if runs.is_empty() {
        0.0
    } else {
        runs.iter().filter(|r| r.outside_band).count() as f64 / runs.len() as f64
    };
    SidelengthSummary {
        runs,
        violation_fraction,
    }
}

/// Diagnostics over the origin traces of completed runs. Runs without an
/// origin are skipped.
pub fn sidelength_diagnostics(reports: &[RunReport]) -> SidelengthSummary {
    summarize(reports.iter().filter_map(run_sidelengths).collect())
}

/// `runs` independent Palm runs, as in the tail sweep but on their own
/// random stream.
pub fn sidelength_sweep(
    d: usize,
    levels: u32,
    intensity: f64,
    runs: usize,
    seed: u64,
) -> Result<SidelengthSummary> {
    let per_run: Vec<Option<RunSidelengths>> = (0..runs)
        .into_par_iter()
        .map(|t| {
            palm_trial(d, levels, intensity, seed, "sidelength", t, &RunOptions::lean())
                .map(|r| run_sidelengths(&r))
        })
        .collect::<Result<_>>()?;
    Ok(summarize(per_run.into_iter().flatten().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chernoff_values() {
        assert_eq!(chernoff_bound(5.0, 0.0).unwrap(), 2.0);
        let b = chernoff_bound(100.0, 0.5).unwrap();
        assert!((b - 2.0 * (-6.25f64).exp()).abs() < 1e-15);
        assert!(chernoff_bound(1.0, 2.5).is_err());
        assert!(chernoff_bound(1.0, -0.1).is_err());
        assert!(chernoff_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn exact_tail_small_lambda() {
        // |X - 1| > 1  <=>  X >= 3
        let e1 = (-1.0f64).exp();
        let want = 1.0 - e1 * (1.0 + 1.0 + 0.5);
        let got = exact_poisson_two_sided_tail(1.0, 1.0).unwrap();
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        // |X - 1| > 0.5  <=>  X = 0 or X >= 2
        let want = 1.0 - e1;
        let got = exact_poisson_two_sided_tail(1.0, 0.5).unwrap();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn exact_tail_vanishes_for_wide_band() {
        assert_eq!(exact_poisson_two_sided_tail(1.0, 1000.0).unwrap(), 0.0);
    }

    #[test]
    fn exact_tail_monotone_in_rho() {
        for &lambda in &[1.0, 10.0, 100.0, 1000.0] {
            let mut prev = f64::INFINITY;
            for i in 0..=80 {
                let t = log_exact_poisson_two_sided_tail(lambda, i as f64 * 0.025).unwrap();
                assert!(t <= prev, "lambda {lambda} i {i}");
                prev = t;
            }
        }
    }

    #[test]
    fn exact_tail_matches_direct_sum() {
        // direct summation over all k with plain pmf recursion
        for &(lambda, rho) in &[(10.0, 0.3), (100.0, 0.15), (4.5, 0.8)] {
            let t: f64 = lambda * rho;
            let mut p = (-lambda as f64).exp();
            let mut s = 0.0;
            for k in 0..2000u64 {
                if k > 0 {
                    p *= lambda / k as f64;
                }
                if (k as f64 - lambda).abs() > t {
                    s += p;
                }
            }
            let got = exact_poisson_two_sided_tail(lambda, rho).unwrap();
            assert!((got - s).abs() < 1e-13 * s.max(1e-300), "{lambda} {rho}: {got} vs {s}");
        }
    }

    #[test]
    fn fit_recovers_synthetic_slopes() {
        let edges: Vec<f64> = (1..40).map(|i| i as f64 * 0.05).collect();
        for &k in &[1.0, 3.0] {
            let surv: Vec<f64> = edges.iter().map(|r: &f64| (-r.powf(k)).exp()).collect();
            let fit = fit_decay_curve(&edges, &surv, 1e-3, 0.999).unwrap();
            assert!((fit.slope - k).abs() < 1e-6, "k {k} slope {}", fit.slope);
        }
    }

    #[test]
    fn fit_needs_three_bins() {
        let err = fit_decay_curve(&[1.0, 2.0], &[0.5, 0.1], 1e-3, 0.99).unwrap_err();
        assert!(matches!(err, Error::InsufficientBins { usable: 2 }));
    }

    #[test]
    fn tail_sweep_single_point_trials() {
        let mut p = TailSweepParams::new(2, 2, 0.0, 5, 1);
        p.margin = 0.0;
        let s = tail_sweep(&p).unwrap();
        assert_eq!(s.kept, 5);
        for &x in &s.diameters {
            assert!((x - 32f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_sweep_rejects_zero_trials() {
        assert!(tail_sweep(&TailSweepParams::new(2, 2, 1.0, 0, 1)).is_err());
    }

    #[test]
    fn tail_sweep_all_discarded() {
        let mut p = TailSweepParams::new(2, 1, 0.0, 3, 1);
        p.margin = 0.5;
        assert!(matches!(tail_sweep(&p), Err(Error::AllTrialsDiscarded { trials: 3 })));
    }

    #[test]
    fn survival_non_increasing_and_deterministic() {
        let p = TailSweepParams::new(2, 3, 1.0, 40, 9);
        let a = tail_sweep(&p).unwrap();
        assert!(a.survival.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(a, tail_sweep(&p).unwrap());
        assert_eq!(a.kept + a.discarded, 40);
    }
}
