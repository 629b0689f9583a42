use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use akt_ffi::*;

fn last_error() -> String {
    let p = akt_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn eight_points_in_side_four_get_volume_two() {
    unsafe {
        let (lo, hi) = ([0.0, 0.0], [4.0, 4.0]);
        let mut cfg = ptr::null_mut();
        assert_eq!(akt_config_sample_binomial(2, lo.as_ptr(), hi.as_ptr(), 8, 1, &mut cfg), AktStatus::Ok);
        assert_eq!(akt_config_len(cfg), 8);
        assert_eq!(akt_config_dim(cfg), 2);

        let mut rep = ptr::null_mut();
        assert_eq!(akt_run(cfg, [0.0, 0.0].as_ptr(), 2, &mut rep), AktStatus::Ok);
        let (mut target, mut err) = (0.0, 1.0);
        assert_eq!(akt_report_equipartition(rep, &mut target, &mut err), AktStatus::Ok);
        assert_eq!(target, 2.0);
        assert!(err < 1e-9);

        let mut owned = 0;
        for i in 0..akt_report_cell_count(rep) {
            let (mut a, mut b, mut owner) = ([0.0; 2], [0.0; 2], 0i64);
            assert_eq!(akt_report_cell(rep, i, a.as_mut_ptr(), b.as_mut_ptr(), &mut owner), AktStatus::Ok);
            if owner >= 0 {
                owned += 1;
                let mut p = [0.0; 2];
                assert_eq!(akt_report_carried_point(rep, i, p.as_mut_ptr()), AktStatus::Ok);
                assert!((0..2).all(|k| a[k] <= p[k] && p[k] <= b[k]));
            }
        }
        assert_eq!(owned, 8);
        let mut a = [0.0; 2];
        assert_eq!(
            akt_report_cell(rep, 10_000, a.as_mut_ptr(), a.as_mut_ptr(), ptr::null_mut()),
            AktStatus::OutOfRange
        );
        akt_report_free(rep);
        akt_config_free(cfg);
    }
}

#[test]
fn explicit_points_palm_and_origin_cell() {
    unsafe {
        let (lo, hi) = ([-2.0, -2.0], [2.0, 2.0]);
        let pts = [1.0, 1.0, -1.0, 0.5];
        let mut cfg = ptr::null_mut();
        assert_eq!(akt_config_new(2, lo.as_ptr(), hi.as_ptr(), pts.as_ptr(), 2, 0, &mut cfg), AktStatus::Ok);
        let mut with_origin = ptr::null_mut();
        assert_eq!(akt_config_palm(cfg, &mut with_origin), AktStatus::Ok);
        assert_eq!(akt_config_len(with_origin), 3);
        let mut p = [9.0; 2];
        assert_eq!(akt_config_point(with_origin, 2, p.as_mut_ptr()), AktStatus::Ok);
        assert_eq!(p, [0.0, 0.0]);

        let mut twice = ptr::null_mut();
        assert_eq!(akt_config_palm(with_origin, &mut twice), AktStatus::Invariant);
        assert!(last_error().contains("origin"));

        let mut rep = ptr::null_mut();
        assert_eq!(akt_run(with_origin, lo.as_ptr(), 2, &mut rep), AktStatus::Ok);
        let mut idx = usize::MAX;
        assert_eq!(akt_report_origin_cell(rep, &mut idx), AktStatus::Ok);
        let mut r2 = ptr::null_mut();
        assert_eq!(akt_run(cfg, lo.as_ptr(), 2, &mut r2), AktStatus::Ok);
        assert_eq!(akt_report_origin_cell(r2, &mut idx), AktStatus::MissingOrigin);

        akt_report_free(rep);
        akt_report_free(r2);
        akt_config_free(with_origin);
        akt_config_free(cfg);
    }
}

#[test]
fn json_round_trip() {
    unsafe {
        let (lo, hi) = ([0.0; 3], [2.0; 3]);
        let mut cfg = ptr::null_mut();
        assert_eq!(akt_config_sample_poisson(3, lo.as_ptr(), hi.as_ptr(), 1.0, 5, &mut cfg), AktStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(akt_config_to_json(cfg, &mut s), AktStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(akt_config_from_json(s, &mut back), AktStatus::Ok);
        assert_eq!(akt_config_len(back), akt_config_len(cfg));
        akt_string_free(s);

        let bad = CString::new("{not json").unwrap();
        assert_eq!(akt_config_from_json(bad.as_ptr(), &mut back), AktStatus::Io);
        akt_config_free(back);
        akt_config_free(cfg);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(akt_config_sample_poisson(2, ptr::null(), ptr::null(), 1.0, 0, &mut cfg), AktStatus::NullPointer);
        assert_eq!(akt_config_sample_poisson(0, ptr::null(), ptr::null(), 1.0, 0, &mut cfg), AktStatus::InvalidArgument);
        let (lo, hi) = ([0.0, 0.0], [4.0, 4.0]);
        let pts = [1.0, 1.0];
        let big = [8.0, 8.0];
        assert_eq!(akt_config_new(2, lo.as_ptr(), big.as_ptr(), pts.as_ptr(), 1, 0, &mut cfg), AktStatus::Ok);
        let mut rep = ptr::null_mut();
        assert_eq!(akt_run(cfg, [0.0, 0.0].as_ptr(), 2, &mut rep), AktStatus::PointOutsideWindow);
        akt_config_free(cfg);

        assert_eq!(akt_config_new(2, lo.as_ptr(), hi.as_ptr(), ptr::null(), 0, 0, &mut cfg), AktStatus::Ok);
        assert_eq!(akt_run(cfg, [0.0, 0.0].as_ptr(), 2, &mut rep), AktStatus::EmptyWindow);
        akt_config_free(cfg);

        let mut x = 0.0;
        assert_eq!(akt_chernoff_bound(100.0, 0.5, &mut x), AktStatus::Ok);
        assert!((x - 2.0 * (-6.25f64).exp()).abs() < 1e-15);
        assert_eq!(akt_poisson_two_sided_tail(100.0, 0.5, &mut x), AktStatus::Ok);
        assert!(x > 0.0 && x < 2.0 * (-6.25f64).exp());
        assert_eq!(akt_chernoff_bound(1.0, 3.0, &mut x), AktStatus::InvalidArgument);
        assert_eq!(akt_chernoff_bound(1.0, 1.0, ptr::null_mut()), AktStatus::NullPointer);

        akt_config_free(ptr::null_mut());
        akt_report_free(ptr::null_mut());
        akt_string_free(ptr::null_mut());
        assert_eq!(akt_config_len(ptr::null()), 0);
    }
}

#[test]
fn c_program_compiles_and_runs_against_the_header() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/abi-... -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libakt_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out_dir = tempfile_dir();
    let exe = out_dir.join("smoke");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("akt-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
