//! The `akt` command line.
//!
//! Every command writes its artifacts under an output prefix together with a
//! `<prefix>.manifest.json` describing the invocation. Options may also come
//! from a `--settings FILE` of `key = value` lines; flags given on the command
//! line take precedence over the file.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::fractional::{
    average_field, cauchy_sequence, sample_shifts, GridSpec, DEFAULT_SHIFTS, DEFAULT_SPACING,
};
use crate::geometry::{Cuboid, Point};
use crate::pointprocess::{palm, sample_binomial, sample_poisson, Configuration};
use crate::purify::{compute_regions, purify, verify_quotas, DEFAULT_WEIGHT_FLOOR};
use crate::stats::{fit_decay, tail_sweep, TailSweepParams, DEFAULT_P_MAX, DEFAULT_P_MIN};
use crate::svg::allocation_svg;
use crate::transport::{run_akt, VOLUME_RTOL};
use crate::verify::{off_by_one_wall, run_suites, Suite, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "akt", version, about = "Equal-volume transport allocations for point processes")]
#[command(args_override_self = true)]
pub struct Cli {
    /// File of `key = value` lines used as defaults for the command's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub settings: Option<PathBuf>,

    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a Poisson or binomial configuration.
    Generate(GenerateArgs),
    /// Run the transport scheme on a configuration.
    Allocate(AllocateArgs),
    /// Same as `allocate --svg`.
    Figure(AllocateArgs),
    /// Monte Carlo sweep of the origin cell's diameter tail.
    Tail(TailArgs),
    /// Shift-averaged fractional allocation on a grid.
    Fractional(FractionalArgs),
    /// Growing-ball purification of a fractional field.
    Purify(PurifyArgs),
    /// Run the invariant suites.
    Verify(VerifyArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    /// Dimension.
    #[arg(long)]
    pub d: usize,
    /// Side length of the cubic domain.
    #[arg(long, default_value_t = 16.0)]
    pub side: f64,
    /// Center the domain on the origin instead of `[0, side)^d`.
    #[arg(long)]
    pub centered: bool,
    /// Poisson intensity (ignored with --n).
    #[arg(long, default_value_t = 1.0)]
    pub intensity: f64,
    /// Exact number of i.i.d. uniform points instead of a Poisson count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Add the origin (requires --centered or a domain around it).
    #[arg(long)]
    pub palm: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "config.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AllocateArgs {
    /// Configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Lattice shift `v`, comma separated (default: the domain's lower corner).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub shift: Option<Vec<f64>>,
    /// Number of stages `N` (default: smallest with `2^N` >= the largest domain side).
    #[arg(long)]
    pub levels: Option<u32>,
    /// Also render the cells (2-D only).
    #[arg(long)]
    pub svg: bool,
    /// Output prefix: writes `<out>.json`, `<out>.csv` and optionally `<out>.svg`.
    #[arg(long, default_value = "allocation")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TailArgs {
    /// Dimension.
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 5)]
    pub levels: u32,
    /// Number of independent Palm trials.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 1.0)]
    pub intensity: f64,
    /// Boundary margin (default: a quarter of the window side).
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long, default_value_t = 0.125)]
    pub bin_width: f64,
    #[arg(long, default_value_t = DEFAULT_P_MIN)]
    pub p_min: f64,
    #[arg(long, default_value_t = DEFAULT_P_MAX)]
    pub p_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix: writes `<out>.csv` and `<out>.fit.json`.
    #[arg(long, default_value = "tail")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FractionalArgs {
    /// Palm configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Stage `n`; shifts are drawn from `[0, 2^n)^d`.
    #[arg(long, default_value_t = 3)]
    pub levels: u32,
    /// Number of Monte Carlo shifts `M`.
    #[arg(long, default_value_t = DEFAULT_SHIFTS)]
    pub samples: usize,
    /// Grid spacing `h`.
    #[arg(long, default_value_t = DEFAULT_SPACING)]
    pub spacing: f64,
    /// The grid covers `[-half_width, half_width]^d`.
    #[arg(long, default_value_t = 2.0)]
    pub half_width: f64,
    /// Also report `||f_n - f_(n+1)||_1` for stages from this one up to --levels.
    #[arg(long)]
    pub cauchy_from: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix: writes `<out>.json` and `<out>.csv`.
    #[arg(long, default_value = "field")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PurifyArgs {
    /// Fractional field JSON.
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WEIGHT_FLOOR)]
    pub weight_floor: f64,
    /// Output prefix: writes `<out>.json`, `<out>.quota.csv` and, in 2-D, `<out>.svg`.
    #[arg(long, default_value = "pure")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Run only these suites (repeatable): equipartition, periodicity,
    /// chernoff, sum-to-one, shift-formula.
    #[arg(long = "suite")]
    pub suites: Vec<String>,
    #[arg(long, default_value_t = VerifyOptions::default().seed)]
    pub seed: u64,
    /// Swap in a deliberately wrong wall rule (test fixture).
    #[arg(long, hide = true)]
    pub inject_wall_bug: bool,
    /// Optional prefix for a JSON summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    /// Effective arguments (after settings expansion), enough to replay.
    pub argv: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub duration_seconds: f64,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// `<prefix><suffix>`, e.g. `out/run` + `.csv`.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, contents: &str, outputs: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    outputs.push(path.to_path_buf());
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Reads `key = value` lines into `--key value` arguments. Blank lines and
/// lines starting with `#` are skipped; `true`/`false` toggle bare flags.
pub fn settings_args(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("settings line {}: expected key = value", i + 1))
        })?;
        let key = format!("--{}", k.trim().replace('_', "-"));
        match v.trim() {
            "true" => out.push(key),
            "false" => {}
            v => {
                out.push(key);
                out.push(v.trim_matches('"').to_string());
            }
        }
    }
    Ok(out)
}

/// Splices settings-file arguments in right after the subcommand so that
/// later command-line flags override them.
fn expand_settings(argv: Vec<String>) -> Result<Vec<String>> {
    let pos = argv.iter().position(|a| a == "--settings" || a.starts_with("--settings="));
    let Some(pos) = pos else {
        return Ok(argv);
    };
    let (path, consumed) = match argv[pos].split_once('=') {
        Some((_, p)) => (p.to_string(), 1),
        None => match argv.get(pos + 1) {
            Some(p) => (p.clone(), 2),
            None => return Ok(argv),
        },
    };
    let extra = settings_args(&read(Path::new(&path))?)?;
    let mut rest: Vec<String> = argv[..pos].to_vec();
    rest.extend_from_slice(&argv[pos + consumed..]);
    let sub = rest
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| !a.starts_with('-'))
        .map(|(i, _)| i + 1)
        .unwrap_or(rest.len());
    let mut out = rest[..sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&rest[sub..]);
    Ok(out)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => EXIT_USAGE,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_INVARIANT,
    }
}

/// Parses and runs one invocation; returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let argv = match expand_settings(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli.command, &argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Outcome {
    code: i32,
    outputs: Vec<PathBuf>,
    prefix: Option<PathBuf>,
    seed: Option<u64>,
}

fn dispatch(command: Command, argv: &[String]) -> Result<i32> {
    let start = Instant::now();
    let (name, params, outcome) = match command {
        Command::Generate(a) => ("generate", to_value(&a)?, cmd_generate(&a)?),
        Command::Allocate(a) => ("allocate", to_value(&a)?, cmd_allocate(&a)?),
        Command::Figure(mut a) => {
            a.svg = true;
            ("figure", to_value(&a)?, cmd_allocate(&a)?)
        }
        Command::Tail(a) => ("tail", to_value(&a)?, cmd_tail(&a)?),
        Command::Fractional(a) => ("fractional", to_value(&a)?, cmd_fractional(&a)?),
        Command::Purify(a) => ("purify", to_value(&a)?, cmd_purify(&a)?),
        Command::Verify(a) => ("verify", to_value(&a)?, cmd_verify(&a)?),
        Command::Replay(a) => {
            let m = RunManifest::read(&a.manifest)?;
            if m.command == "replay" {
                return Err(Error::InvalidArgument("refusing to replay a replay".into()));
            }
            return Ok(run(m.argv));
        }
    };
    if let Some(prefix) = outcome.prefix {
        let manifest = RunManifest {
            command: name.to_string(),
            parameters: params,
            seed: outcome.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            argv: argv.to_vec(),
            outputs: outcome.outputs,
            duration_seconds: start.elapsed().as_secs_f64(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let path = with_suffix(&prefix, ".manifest.json");
        write(&path, &serde_json::to_string_pretty(&manifest)?, &mut Vec::new())?;
    }
    Ok(outcome.code)
}

fn to_value<T: Serialize>(t: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(t)?)
}

fn cmd_generate(a: &GenerateArgs) -> Result<Outcome> {
    if a.d == 0 {
        return Err(Error::InvalidArgument("--d must be at least 1".into()));
    }
    if !(a.side > 0.0) {
        return Err(Error::InvalidArgument("--side must be positive".into()));
    }
    let domain = if a.centered {
        Cuboid::new(vec![-a.side / 2.0; a.d], vec![a.side / 2.0; a.d])?
    } else {
        Cuboid::cube(a.d, a.side)
    };
    let mut config = match a.n {
        Some(n) => sample_binomial(&domain, n, a.seed)?,
        None => sample_poisson(&domain, a.intensity, a.seed)?,
    };
    if a.palm {
        config = palm(&config)?;
    }
    let mut outputs = Vec::new();
    write(&a.out, &config.to_json()?, &mut outputs)?;
    println!("wrote {} points to {}", config.len(), a.out.display());
    Ok(Outcome {
        code: EXIT_OK,
        outputs,
        prefix: Some(a.out.clone()),
        seed: Some(a.seed),
    })
}

fn default_levels(config: &Configuration) -> u32 {
    let side = config.domain.sides().into_iter().fold(0.0, f64::max);
    side.log2().ceil().max(0.0) as u32
}

fn cmd_allocate(a: &AllocateArgs) -> Result<Outcome> {
    let config = Configuration::from_json(&read(&a.config)?)?;
    let v = Point(a.shift.clone().unwrap_or_else(|| config.domain.lower.clone()));
    if v.dim() != config.d {
        return Err(Error::DimensionMismatch {
            expected: config.d,
            got: v.dim(),
        });
    }
    let levels = a.levels.unwrap_or_else(|| default_levels(&config));
    let report = run_akt(&config, &v, levels)?;
    let check = report.equipartition_error();
    if !check.passes(VOLUME_RTOL) {
        eprintln!("equipartition failed: {}", check.describe(&report));
        return Ok(Outcome {
            code: EXIT_INVARIANT,
            outputs: Vec::new(),
            prefix: None,
            seed: Some(config.seed),
        });
    }
    let mut outputs = Vec::new();
    write(&with_suffix(&a.out, ".json"), &report.to_json()?, &mut outputs)?;
    write(&with_suffix(&a.out, ".csv"), &report.to_csv(), &mut outputs)?;
    if a.svg {
        write(&with_suffix(&a.out, ".svg"), &allocation_svg(&report)?, &mut outputs)?;
    }
    println!(
        "{} cells of volume {} (max relative error {:e}) in window {}",
        check.owned, check.target_volume, check.max_cell_rel_error, report.window
    );
    Ok(Outcome {
        code: EXIT_OK,
        outputs,
        prefix: Some(a.out.clone()),
        seed: Some(config.seed),
    })
}

fn cmd_tail(a: &TailArgs) -> Result<Outcome> {
    let mut params = TailSweepParams::new(a.d, a.levels, a.intensity, a.trials as usize, a.seed);
    if let Some(m) = a.margin {
        params.margin = m;
    }
    params.bin_width = a.bin_width;
    let stats = tail_sweep(&params)?;
    let mut outputs = Vec::new();
    write(&with_suffix(&a.out, ".csv"), &stats.to_csv(), &mut outputs)?;
    let fit = fit_decay(&stats, a.p_min, a.p_max);
    let fit_json = match &fit {
        Ok(f) => serde_json::to_value(f)?,
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    };
    let summary = serde_json::json!({
        "fit": fit_json,
        "kept": stats.kept,
        "discarded": stats.discarded,
        "discard_rate": stats.discard_rate(),
        "median_diameter": stats.median(),
    });
    write(
        &with_suffix(&a.out, ".fit.json"),
        &serde_json::to_string_pretty(&summary)?,
        &mut outputs,
    )?;
    let code = match fit {
        Ok(f) => {
            println!(
                "slope {:.4} (se {:.4}) over R in [{}, {}], discard rate {:.4} ({} of {})",
                f.slope,
                f.slope_std_error,
                f.r_min,
                f.r_max,
                stats.discard_rate(),
                stats.discarded,
                stats.trials
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("fit failed: {e}; discard rate {:.4}", stats.discard_rate());
            exit_code(&e)
        }
    };
    Ok(Outcome {
        code,
        outputs,
        prefix: Some(a.out.clone()),
        seed: Some(a.seed),
    })
}

fn cmd_fractional(a: &FractionalArgs) -> Result<Outcome> {
    let config = Configuration::from_json(&read(&a.config)?)?;
    if config.origin_index().is_none() {
        return Err(Error::MissingOrigin);
    }
    let h = a.half_width;
    let grid = GridSpec::new(Cuboid::new(vec![-h; config.d], vec![h; config.d])?, a.spacing)?;
    let shifts = sample_shifts(config.d, a.levels, a.samples, a.seed);
    let field = average_field(&config, a.levels, &shifts, &grid)?;
    let audit = field.audit();
    let mut outputs = Vec::new();
    write(&with_suffix(&a.out, ".json"), &field.to_json()?, &mut outputs)?;
    write(&with_suffix(&a.out, ".csv"), &field.summary_csv(), &mut outputs)?;
    let origin_mass = field.origin().map(|c| c.mass(grid.cell_measure()));
    println!(
        "{} grid points, {} centers, max |sum - 1| = {:e}, origin mass on grid {:?}",
        audit.grid_points,
        field.centers.len(),
        audit.max_abs_error,
        origin_mass
    );
    if let Some(from) = a.cauchy_from {
        if from >= a.levels {
            return Err(Error::InvalidArgument("--cauchy-from must be below --levels".into()));
        }
        let seq = cauchy_sequence(&config, from..=a.levels, a.samples, a.seed, &grid)?;
        let mut csv = String::from("n,l1_distance\n");
        for (i, x) in seq.iter().enumerate() {
            csv.push_str(&format!("{},{}\n", from + i as u32, x));
            println!("||f_{} - f_{}||_1 = {x}", from + i as u32, from + i as u32 + 1);
        }
        write(&with_suffix(&a.out, ".cauchy.csv"), &csv, &mut outputs)?;
    }
    let code = if audit.passes(crate::verify::SUM_TOL) {
        EXIT_OK
    } else {
        eprintln!("sum-to-one audit failed: {audit:?}");
        EXIT_INVARIANT
    };
    Ok(Outcome {
        code,
        outputs,
        prefix: Some(a.out.clone()),
        seed: Some(a.seed),
    })
}

fn cmd_purify(a: &PurifyArgs) -> Result<Outcome> {
    let field = crate::fractional::FractionalField::from_json(&read(&a.field)?)?;
    let regions = compute_regions(&field, a.weight_floor)?;
    let alloc = purify(&field, &regions)?;
    let report = verify_quotas(&alloc, &regions);
    let mut outputs = Vec::new();
    write(&with_suffix(&a.out, ".json"), &alloc.to_json()?, &mut outputs)?;
    write(&with_suffix(&a.out, ".quota.csv"), &report.to_csv(), &mut outputs)?;
    if field.grid.dim() == 2 {
        write(&with_suffix(&a.out, ".svg"), &alloc.to_svg()?, &mut outputs)?;
    }
    let within = report.entries.iter().filter(|e| e.ok()).count();
    println!(
        "{} regions, {} centers, {} within quota tolerance; unowned {}, support violations {}, order violations {}",
        regions.len(),
        report.entries.len(),
        within,
        report.unowned_cells,
        report.support_violations,
        report.order_violations
    );
    if let Some(w) = report.worst() {
        println!(
            "worst center {}: achieved {} vs quota {} (tolerance {})",
            w.center, w.achieved, w.quota, w.tolerance
        );
    }
    Ok(Outcome {
        code: if report.passes() { EXIT_OK } else { EXIT_INVARIANT },
        outputs,
        prefix: Some(a.out.clone()),
        seed: None,
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let which: Vec<Suite> = if a.suites.is_empty() {
        Suite::ALL.to_vec()
    } else {
        a.suites.iter().map(|s| s.parse()).collect::<Result<_>>()?
    };
    let mut opts = VerifyOptions {
        seed: a.seed,
        ..Default::default()
    };
    if a.inject_wall_bug {
        opts.wall_rule = off_by_one_wall;
    }
    let outcomes = run_suites(&which, &opts)?;
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed())
        .map(|o| o.suite.name())
        .collect();
    let mut outputs = Vec::new();
    if let Some(out) = &a.out {
        write(
            &with_suffix(out, ".json"),
            &serde_json::to_string_pretty(&outcomes)?,
            &mut outputs,
        )?;
    }
    let code = if failed.is_empty() {
        println!("all {} suites passed", outcomes.len());
        EXIT_OK
    } else {
        eprintln!("failed suites: {}", failed.join(", "));
        EXIT_INVARIANT
    };
    Ok(Outcome {
        code,
        outputs,
        prefix: a.out.clone(),
        seed: Some(a.seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_lines() {
        let a = settings_args("# comment\nd = 2\n\nseed=7\npalm = true\ncentered = false\n").unwrap();
        assert_eq!(a, vec!["--d", "2", "--seed", "7", "--palm"]);
        assert!(settings_args("oops").is_err());
    }

    #[test]
    fn settings_are_spliced_after_subcommand() {
        let dir = std::env::temp_dir().join(format!("akt-settings-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let f = dir.join("s.txt");
        fs::write(&f, "seed = 3\nd = 2\n").unwrap();
        let argv: Vec<String> = ["akt", "--settings", f.to_str().unwrap(), "generate", "--seed", "9"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let out = expand_settings(argv).unwrap();
        assert_eq!(out, vec!["akt", "generate", "--seed", "3", "--d", "2", "--seed", "9"]);
        let cli = Cli::try_parse_from(&out).unwrap();
        match cli.command {
            Command::Generate(g) => assert_eq!((g.seed, g.d), (9, 2)),
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["akt", "generate"]), EXIT_USAGE);
        assert_eq!(run(["akt", "tail", "--d", "2", "--trials", "0"]), EXIT_USAGE);
        assert_eq!(run(["akt", "verify", "--suite", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["akt", "--help"]), EXIT_OK);
    }
}
