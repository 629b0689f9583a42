//! C ABI over `akt-core`.
//!
//! Configurations and run reports are opaque heap handles created by the
//! `akt_*_new`/`akt_*_sample`/`akt_run` functions and released with the
//! matching `*_free`. Every fallible function returns an [`AktStatus`]; on
//! failure the message is available from [`akt_last_error_message`] on the
//! same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use akt_core::pointprocess::{palm, sample_binomial, sample_poisson};
use akt_core::stats::{chernoff_bound, exact_poisson_two_sided_tail};
use akt_core::transport::{run_akt, RunReport};
use akt_core::{Configuration, Cuboid, Error, Point};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AktStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    OutOfRange = 4,
    PointOutsideWindow = 5,
    EmptyWindow = 6,
    RefinementTooDeep = 7,
    MissingOrigin = 8,
    Invariant = 9,
    Io = 10,
    Panic = 11,
}

/// Opaque point configuration.
pub struct AktConfig(Configuration);

/// Opaque result of one transport run.
pub struct AktReport(RunReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AktStatus {
    match e {
        Error::InvalidArgument(_) => AktStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => AktStatus::DimensionMismatch,
        Error::PointOutsideWindow { .. } => AktStatus::PointOutsideWindow,
        Error::EmptyWindow => AktStatus::EmptyWindow,
        Error::RefinementTooDeep { .. } => AktStatus::RefinementTooDeep,
        Error::MissingOrigin => AktStatus::MissingOrigin,
        Error::Io(_) | Error::Json(_) => AktStatus::Io,
        _ => AktStatus::Invariant,
    }
}

struct Fail(AktStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(AktStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AktStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AktStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AktStatus::Panic
        }
    }
}

unsafe fn doubles<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn domain(d: usize, lower: *const f64, upper: *const f64) -> Result<Cuboid, Fail> {
    if d == 0 {
        return Err(Fail(AktStatus::InvalidArgument, "dimension must be at least 1".into()));
    }
    let lo = doubles(lower, d, "lower")?;
    let hi = doubles(upper, d, "upper")?;
    Ok(Cuboid::new(lo.to_vec(), hi.to_vec())?)
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failing call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn akt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn akt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Configuration from `n` points stored row-major in `points` (`n * d`
/// doubles) inside the box `[lower, upper]`.
///
/// # Safety
/// `lower` and `upper` must point to `d` doubles, `points` to `n * d` doubles
/// (may be null when `n == 0`), and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn akt_config_new(
    d: usize,
    lower: *const f64,
    upper: *const f64,
    points: *const f64,
    n: usize,
    seed: u64,
    out: *mut *mut AktConfig,
) -> AktStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let dom = domain(d, lower, upper)?;
        let flat = doubles(points, n.checked_mul(d).ok_or_else(|| Fail(AktStatus::InvalidArgument, "size overflow".into()))?, "points")?;
        let pts = flat.chunks(d).map(|c| Point(c.to_vec())).collect();
        *out = boxed(AktConfig(Configuration::new(dom, pts, seed)?));
        Ok(())
    })
}

/// Poisson process of the given intensity on `[lower, upper)`.
///
/// # Safety
/// `lower` and `upper` must point to `d` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn akt_config_sample_poisson(
    d: usize,
    lower: *const f64,
    upper: *const f64,
    intensity: f64,
    seed: u64,
    out: *mut *mut AktConfig,
) -> AktStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(AktConfig(sample_poisson(&domain(d, lower, upper)?, intensity, seed)?));
        Ok(())
    })
}

/// `n` i.i.d. uniform points on `[lower, upper)`.
///
/// # Safety
/// `lower` and `upper` must point to `d` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn akt_config_sample_binomial(
    d: usize,
    lower: *const f64,
    upper: *const f64,
    n: usize,
    seed: u64,
    out: *mut *mut AktConfig,
) -> AktStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(AktConfig(sample_binomial(&domain(d, lower, upper)?, n, seed)?));
        Ok(())
    })
}

/// New configuration with the origin appended as the last point.
///
/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn akt_config_palm(config: *const AktConfig, out: *mut *mut AktConfig) -> AktStatus {
    guard(|| {
        let c = handle(config, "config")?;
        let out = out_ptr(out, "out")?;
        *out = boxed(AktConfig(palm(&c.0)?));
        Ok(())
    })
}

/// Parses a configuration from NUL-terminated JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn akt_config_from_json(json: *const c_char, out: *mut *mut AktConfig) -> AktStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let out = out_ptr(out, "out")?;
        let s = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(AktStatus::InvalidArgument, e.to_string()))?;
        *out = boxed(AktConfig(Configuration::from_json(s)?));
        Ok(())
    })
}

/// JSON text of the configuration; release it with [`akt_string_free`].
///
/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn akt_config_to_json(config: *const AktConfig, out: *mut *mut c_char) -> AktStatus {
    guard(|| {
        let c = handle(config, "config")?;
        let out = out_ptr(out, "out")?;
        let s = c.0.to_json()?;
        *out = CString::new(s)
            .map_err(|e| Fail(AktStatus::Invariant, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `config` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn akt_config_len(config: *const AktConfig) -> usize {
    config.as_ref().map_or(0, |c| c.0.len())
}

/// Dimension, or 0 for a null handle.
///
/// # Safety
/// `config` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn akt_config_dim(config: *const AktConfig) -> usize {
    config.as_ref().map_or(0, |c| c.0.d)
}

/// Copies point `index` into `coords` (`d` doubles).
///
/// # Safety
/// `config` must be a live handle and `coords` must hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn akt_config_point(config: *const AktConfig, index: usize, coords: *mut f64) -> AktStatus {
    guard(|| {
        let c = handle(config, "config")?;
        let p = c.0.points.get(index).ok_or_else(|| {
            Fail(AktStatus::OutOfRange, format!("point {index} of {}", c.0.len()))
        })?;
        if coords.is_null() {
            return Err(null("coords"));
        }
        slice::from_raw_parts_mut(coords, p.0.len()).copy_from_slice(&p.0);
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akt_config_free(config: *mut AktConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs `levels` stages on the box of `shift + 2^levels Z^d` containing the
/// domain's center.
///
/// # Safety
/// `config` must be a live handle, `shift` must hold `d` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn akt_run(
    config: *const AktConfig,
    shift: *const f64,
    levels: u32,
    out: *mut *mut AktReport,
) -> AktStatus {
    guard(|| {
        let c = handle(config, "config")?;
        let v = Point(doubles(shift, c.0.d, "shift")?.to_vec());
        let out = out_ptr(out, "out")?;
        *out = boxed(AktReport(run_akt(&c.0, &v, levels)?));
        Ok(())
    })
}

/// Number of cells (owned and ownerless), or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn akt_report_cell_count(report: *const AktReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.cells.len())
}

/// Bounds of cell `index` and the id of the point owning it (-1 when the
/// cell has no owner).
///
/// # Safety
/// `report` must be a live handle; `lower` and `upper` must hold `d` doubles;
/// `owner` may be null.
#[no_mangle]
pub unsafe extern "C" fn akt_report_cell(
    report: *const AktReport,
    index: usize,
    lower: *mut f64,
    upper: *mut f64,
    owner: *mut i64,
) -> AktStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let c = r.0.cells.get(index).ok_or_else(|| {
            Fail(AktStatus::OutOfRange, format!("cell {index} of {}", r.0.cells.len()))
        })?;
        if lower.is_null() || upper.is_null() {
            return Err(null("lower/upper"));
        }
        let d = r.0.d;
        slice::from_raw_parts_mut(lower, d).copy_from_slice(&c.bounds.lower);
        slice::from_raw_parts_mut(upper, d).copy_from_slice(&c.bounds.upper);
        if let Some(o) = owner.as_mut() {
            *o = c.owner_id.map_or(-1, |id| id as i64);
        }
        Ok(())
    })
}

/// Where the transport carried the owner of cell `index`.
///
/// # Safety
/// `report` must be a live handle and `coords` must hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn akt_report_carried_point(
    report: *const AktReport,
    index: usize,
    coords: *mut f64,
) -> AktStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let c = r.0.cells.get(index).ok_or_else(|| {
            Fail(AktStatus::OutOfRange, format!("cell {index} of {}", r.0.cells.len()))
        })?;
        let p = c.carried_point.as_ref().ok_or_else(|| {
            Fail(AktStatus::InvalidArgument, format!("cell {index} has no owner"))
        })?;
        if coords.is_null() {
            return Err(null("coords"));
        }
        slice::from_raw_parts_mut(coords, r.0.d).copy_from_slice(&p.0);
        Ok(())
    })
}

/// Target cell volume and the largest relative deviation of an owned cell.
///
/// # Safety
/// `report` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn akt_report_equipartition(
    report: *const AktReport,
    target_volume: *mut f64,
    max_rel_error: *mut f64,
) -> AktStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let check = r.0.equipartition_error();
        *out_ptr(target_volume, "target_volume")? = check.target_volume;
        *out_ptr(max_rel_error, "max_rel_error")? = check.max_cell_rel_error;
        Ok(())
    })
}

/// Index of the cell owned by the origin.
///
/// # Safety
/// `report` must be a live handle and `index` writable.
#[no_mangle]
pub unsafe extern "C" fn akt_report_origin_cell(report: *const AktReport, index: *mut usize) -> AktStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let i = r
            .0
            .cells
            .iter()
            .position(|c| c.owner.as_ref().is_some_and(Point::is_origin))
            .ok_or(Error::MissingOrigin)?;
        *out_ptr(index, "index")? = i;
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akt_report_free(report: *mut AktReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// `2 exp(-lambda rho^2 / 4)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn akt_chernoff_bound(lambda: f64, rho: f64, out: *mut f64) -> AktStatus {
    guard(|| {
        *out_ptr(out, "out")? = chernoff_bound(lambda, rho)?;
        Ok(())
    })
}

/// Exact `P(|X - lambda| > lambda rho)` for `X ~ Poisson(lambda)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn akt_poisson_two_sided_tail(lambda: f64, rho: f64, out: *mut f64) -> AktStatus {
    guard(|| {
        *out_ptr(out, "out")? = exact_poisson_two_sided_tail(lambda, rho)?;
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
