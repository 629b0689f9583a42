//! Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use akt_core::fractional::{average_field, cauchy_sequence, sample_shifts, GridSpec};
use akt_core::pointprocess::{palm, sample_binomial, sample_poisson};
use akt_core::purify::{compute_regions, purify, verify_quotas, DEFAULT_WEIGHT_FLOOR};
use akt_core::stats::{fit_decay, fit_decay_curve, sidelength_sweep, tail_sweep, TailSweepParams};
use akt_core::verify::{
    chernoff_suite, equipartition_suite, periodicity_suite, shift_formula_suite, SuiteOutcome,
    VerifyOptions, SUM_TOL,
};
use akt_core::Cuboid;
use serde_json::Value;

struct Outcome {
    passed: bool,
    summary: String,
}

fn from_suite(o: SuiteOutcome) -> Outcome {
    Outcome {
        passed: o.passed(),
        summary: o.to_string(),
    }
}

fn reference() -> Value {
    let text = include_str!("data/reference.json");
    serde_json::from_str(text).expect("reference.json parses")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn u(v: &Value) -> u64 {
    v.as_u64().expect("integer")
}

fn equipartition() -> Outcome {
    from_suite(equipartition_suite(50, 10, 200, 16.0, &VerifyOptions::default()).unwrap())
}

fn periodicity() -> Outcome {
    from_suite(periodicity_suite(100, 4, &VerifyOptions::default()).unwrap())
}

fn shift_formula() -> Outcome {
    from_suite(shift_formula_suite(100, 4, &VerifyOptions::default()).unwrap())
}

fn chernoff() -> Outcome {
    from_suite(chernoff_suite(&[1.0, 10.0, 100.0, 1000.0], 40).unwrap())
}

/// The criterion-5 field, reused by criterion 7.
fn sum_to_one_field() -> akt_core::fractional::FractionalField {
    let level = 3;
    let half = 4.0;
    let reach = half + 8.0;
    let domain = Cuboid::new(vec![-reach; 2], vec![reach; 2]).unwrap();
    let config = palm(&sample_poisson(&domain, 1.0, 505).unwrap()).unwrap();
    let grid = GridSpec::new(Cuboid::new(vec![-half; 2], vec![half; 2]).unwrap(), 0.125).unwrap();
    average_field(&config, level, &sample_shifts(2, level, 64, 505), &grid).unwrap()
}

fn sum_to_one(field: &akt_core::fractional::FractionalField) -> Outcome {
    let audit = field.audit();
    Outcome {
        passed: audit.passes(SUM_TOL),
        summary: format!(
            "{} grid points, {} centers, max |sum - 1| = {:e}, weights in [{}, {}]",
            audit.grid_points,
            field.centers.len(),
            audit.max_abs_error,
            audit.min_weight,
            audit.max_weight
        ),
    }
}

fn cauchy() -> Outcome {
    let r = &reference()["cauchy"];
    let d = u(&r["d"]) as usize;
    let half = f(&r["half_width"]);
    let first = u(&r["first_stage"]) as u32;
    let last = u(&r["last_stage"]) as u32;
    let samples = u(&r["samples"]) as usize;
    let offset = u(&r["shift_seed_offset"]);
    let reach = half + 2f64.powi(last as i32);
    let grid = GridSpec::new(Cuboid::new(vec![-half; d], vec![half; d]).unwrap(), f(&r["spacing"])).unwrap();
    let domain = Cuboid::new(vec![-reach; d], vec![reach; d]).unwrap();
    let seqs: Vec<Vec<f64>> = r["config_seeds"]
        .as_array()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let config = palm(&sample_poisson(&domain, f(&r["intensity"]), u(s)).unwrap()).unwrap();
            cauchy_sequence(&config, first..=last, samples, offset + i as u64, &grid).unwrap()
        })
        .collect();
    let k = seqs[0].len();
    let n = seqs.len() as f64;
    let stats: Vec<(f64, f64)> = (0..k)
        .map(|j| {
            let xs: Vec<f64> = seqs.iter().map(|s| s[j]).collect();
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, (var / n).sqrt())
        })
        .collect();
    let passed = stats
        .windows(2)
        .all(|w| w[1].0 <= w[0].0 + 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
    let parts: Vec<String> = stats
        .iter()
        .enumerate()
        .map(|(j, (m, se))| format!("n={}: {m:.4} (se {se:.4})", first + j as u32))
        .collect();
    Outcome {
        passed,
        summary: format!("mean ||f_n - f_n+1||_1 over {} configs: {}", seqs.len(), parts.join(", ")),
    }
}

fn purification(field: &akt_core::fractional::FractionalField) -> Outcome {
    let regions = compute_regions(field, DEFAULT_WEIGHT_FLOOR).unwrap();
    let alloc = purify(field, &regions).unwrap();
    let report = verify_quotas(&alloc, &regions);
    let worst = report
        .worst()
        .map(|w| format!("worst center {} off by {:e} (tolerance {:e})", w.center, (w.achieved - w.quota).abs(), w.tolerance))
        .unwrap_or_default();
    Outcome {
        passed: report.passes(),
        summary: format!(
            "{} regions, {} centers, support violations {}, unowned {}; {worst}",
            regions.len(),
            report.entries.len(),
            report.support_violations,
            report.unowned_cells
        ),
    }
}

fn tail_contrast() -> Outcome {
    let r = &reference()["tail"];
    let fit = |d: usize| {
        let mut p = TailSweepParams::new(d, u(&r["levels"]) as u32, f(&r["intensity"]), u(&r["trials"]) as usize, u(&r["seed"]));
        p.margin = f(&r["margin"]);
        let stats = tail_sweep(&p).unwrap();
        (fit_decay(&stats, f(&r["p_min"]), f(&r["p_max"])).unwrap(), stats.kept)
    };
    let (f2, k2) = fit(2);
    let (f3, k3) = fit(3);
    let contrast = f3.slope - f2.slope;
    Outcome {
        passed: contrast >= f(&r["min_contrast"]),
        summary: format!(
            "slope d=2 {:.3} ({} kept), d=3 {:.3} ({} kept), contrast {:.3}",
            f2.slope, k2, f3.slope, k3, contrast
        ),
    }
}

fn fit_recovery() -> Outcome {
    let edges: Vec<f64> = (1..=200).map(|i| i as f64 * 0.01).collect();
    let cubic: Vec<f64> = edges.iter().map(|r| (-r.powi(3)).exp()).collect();
    let linear: Vec<f64> = edges.iter().map(|r| (-r).exp()).collect();
    let s3 = fit_decay_curve(&edges, &cubic, 1e-12, 1.0).unwrap().slope;
    let s1 = fit_decay_curve(&edges, &linear, 1e-12, 1.0).unwrap().slope;
    Outcome {
        passed: (s3 - 3.0).abs() <= 1e-6 && (s1 - 1.0).abs() <= 1e-6,
        summary: format!("slopes {s3:.9} (want 3) and {s1:.9} (want 1)"),
    }
}

fn sidelength() -> Outcome {
    let r = &reference()["sidelength"];
    let s = sidelength_sweep(
        u(&r["d"]) as usize,
        u(&r["levels"]) as u32,
        f(&r["intensity"]),
        u(&r["runs"]) as usize,
        u(&r["seed"]),
    )
    .unwrap();
    let limit = f(&r["max_violation_fraction"]);
    Outcome {
        passed: s.runs.len() == u(&r["runs"]) as usize && s.violation_fraction < limit,
        summary: format!(
            "{} runs, fraction outside (1/2, 2) = {} (reference < {limit})",
            s.runs.len(),
            s.violation_fraction
        ),
    }
}

fn figure() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let c = sample_binomial(&Cuboid::cube(2, 4.0), 8, 11).unwrap();
    std::fs::write(&cfg, c.to_json().unwrap()).unwrap();
    let prefix = dir.path().join("fig");
    let status = Command::new(env!("CARGO_BIN_EXE_akt"))
        .args(["allocate", "--svg", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&prefix)
        .output()
        .unwrap();
    if !status.status.success() {
        return Outcome {
            passed: false,
            summary: format!("allocate failed: {}", String::from_utf8_lossy(&status.stderr)),
        };
    }
    let text = std::fs::read_to_string(prefix.with_extension("svg")).unwrap();
    let doc = match roxmltree::Document::parse(&text) {
        Ok(d) => d,
        Err(e) => {
            return Outcome {
                passed: false,
                summary: format!("invalid SVG: {e}"),
            }
        }
    };
    let of_class = |tag: &str, class: &str| -> Vec<roxmltree::Node> {
        doc.descendants()
            .filter(|n| n.has_tag_name(tag) && n.attribute("class") == Some(class))
            .collect()
    };
    let polygons = of_class("polygon", "cell");
    let centers = of_class("circle", "center");
    let moved = of_class("circle", "transported");
    let inside = moved.iter().all(|m| {
        let owner = m.attribute("data-owner");
        let (x, y): (f64, f64) = (
            m.attribute("cx").unwrap().parse().unwrap(),
            m.attribute("cy").unwrap().parse().unwrap(),
        );
        polygons.iter().filter(|p| p.attribute("data-owner") == owner).any(|p| {
            let pts: Vec<(f64, f64)> = p
                .attribute("points")
                .unwrap()
                .split_whitespace()
                .map(|xy| {
                    let (a, b) = xy.split_once(',').unwrap();
                    (a.parse().unwrap(), b.parse().unwrap())
                })
                .collect();
            let (xmin, xmax) = pts.iter().fold((f64::MAX, f64::MIN), |m, p| (m.0.min(p.0), m.1.max(p.0)));
            let (ymin, ymax) = pts.iter().fold((f64::MAX, f64::MIN), |m, p| (m.0.min(p.1), m.1.max(p.1)));
            x >= xmin && x <= xmax && y >= ymin && y <= ymax
        })
    });
    Outcome {
        passed: doc.root_element().has_tag_name("svg")
            && polygons.len() == 8
            && centers.len() == 8
            && moved.len() == 8
            && inside,
        summary: format!(
            "{} polygons, {} centers, {} transported centers, all inside their polygon: {inside}",
            polygons.len(),
            centers.len(),
            moved.len()
        ),
    }
}

fn main() {
    let mut failed = Vec::new();
    let mut report = |id: usize, name: &str, budget: Duration, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        println!(
            "criterion {id:>2} {name:<22} {} [{:.2}s, budget {}s] {}",
            if o.passed { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            o.summary
        );
        if !o.passed {
            failed.push(id);
        }
    };
    let secs = Duration::from_secs;
    report(1, "equipartition", secs(5), &mut equipartition);
    report(2, "periodicity", secs(5), &mut periodicity);
    report(3, "shift-formula", secs(5), &mut shift_formula);
    report(4, "chernoff", secs(1), &mut chernoff);
    let mut field = None;
    report(5, "fractional-sum-to-one", secs(30), &mut || {
        let fld = sum_to_one_field();
        let o = sum_to_one(&fld);
        field = Some(fld);
        o
    });
    report(6, "cauchy-diagnostic", secs(120), &mut cauchy);
    report(7, "purification-quotas", secs(30), &mut || purification(field.as_ref().unwrap()));
    report(8, "tail-contrast", secs(600), &mut tail_contrast);
    report(9, "fit-recovery", secs(1), &mut fit_recovery);
    report(10, "sidelength-product", secs(120), &mut sidelength);
    report(11, "figure", secs(1), &mut figure);
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
