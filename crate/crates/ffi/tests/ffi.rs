use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use uavsec_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { uavsec_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn fekete_through_abi() {
    let mut beta = [0.0; 4];
    assert_eq!(unsafe { uavsec_fekete_points(4, beta.as_mut_ptr()) }, UavsecStatus::Ok);
    let s = 0.2f64.sqrt();
    for (x, e) in beta.iter().zip([-1.0, -s, s, 1.0]) {
        assert!((x - e).abs() < 1e-9);
    }
    assert_eq!(unsafe { uavsec_fekete_points(0, beta.as_mut_ptr()) }, UavsecStatus::InvalidInput);
    assert!(last_error().starts_with("invalid_input"));
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { uavsec_fekete_points(3, ptr::null_mut()) }, UavsecStatus::NullPointer);
    assert_eq!(unsafe { uavsec_config_reference(ptr::null_mut()) }, UavsecStatus::NullPointer);
    unsafe { uavsec_config_free(ptr::null_mut()) };
    unsafe { uavsec_optimization_free(ptr::null_mut()) };
}

#[test]
fn spectral_cap_single_uav() {
    let mut c = 0.0;
    assert_eq!(unsafe { uavsec_spectral_cap(1.0, 0.99, 3, 1.0, 1, &mut c) }, UavsecStatus::Ok);
    assert!((c - 0.17542).abs() < 1e-4);
}

#[test]
fn precoding_mrt_and_infeasibility() {
    let (re, im) = ([1.0, 0.0, 0.5], [0.0, 1.0, 0.0]);
    let (mut wr, mut wi, mut p) = ([0.0; 3], [0.0; 3], 0.0);
    let st = unsafe {
        uavsec_solve_precoding(re.as_ptr(), im.as_ptr(), 1, 3, 9.0, 1.0, f64::INFINITY, f64::INFINITY, wr.as_mut_ptr(), wi.as_mut_ptr(), &mut p)
    };
    assert_eq!(st, UavsecStatus::Ok);
    assert!((p - 9.0 / 2.25).abs() < 1e-6);
    let st = unsafe {
        uavsec_solve_precoding(re.as_ptr(), im.as_ptr(), 1, 3, 9.0, 1.0, f64::INFINITY, 1e-3, wr.as_mut_ptr(), wi.as_mut_ptr(), &mut p)
    };
    assert_eq!(st, UavsecStatus::Infeasible);
}

#[test]
fn config_lifecycle_and_optimization() {
    let text = CString::new("[trajectory]\nT = 20.0\nI = 20\nd_F = [100.0, 0.0]\n[bs]\nposition = [60.0, 30.0]\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { uavsec_config_from_toml(text.as_ptr(), &mut cfg) }, UavsecStatus::Ok);
    let bad = CString::new("qos.kappa=2").unwrap();
    assert_eq!(unsafe { uavsec_config_set(cfg, bad.as_ptr()) }, UavsecStatus::Config);
    let good = CString::new("run.rng_seed=4").unwrap();
    assert_eq!(unsafe { uavsec_config_set(cfg, good.as_ptr()) }, UavsecStatus::Ok);

    let mut res = ptr::null_mut();
    assert_eq!(unsafe { uavsec_optimize(cfg, &mut res) }, UavsecStatus::Ok);
    let slots = unsafe { uavsec_optimization_slots(res) };
    assert_eq!(slots, 20);
    let mut xy = vec![0.0; 2 * (slots + 1)];
    assert_eq!(unsafe { uavsec_optimization_centers(res, xy.as_mut_ptr(), 3) }, UavsecStatus::BufferTooSmall);
    assert_eq!(unsafe { uavsec_optimization_centers(res, xy.as_mut_ptr(), xy.len()) }, UavsecStatus::Ok);
    assert_eq!(&xy[..2], &[0.0, 0.0]);
    assert_eq!(&xy[xy.len() - 2..], &[100.0, 0.0]);
    let mut gamma = 0.0;
    assert_eq!(unsafe { uavsec_optimization_total_power(res, &mut gamma) }, UavsecStatus::Ok);
    assert!(gamma > 0.0);
    unsafe {
        uavsec_optimization_free(res);
        uavsec_config_free(cfg);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/uavsec.h")).unwrap();
    for name in [
        "uavsec_last_error_message",
        "uavsec_version",
        "uavsec_config_reference",
        "uavsec_config_from_toml",
        "uavsec_config_set",
        "uavsec_config_free",
        "uavsec_fekete_points",
        "uavsec_spectral_cap",
        "uavsec_topology_capacity",
        "uavsec_solve_precoding",
        "uavsec_optimize",
        "uavsec_optimization_slots",
        "uavsec_optimization_total_power",
        "uavsec_optimization_centers",
        "uavsec_optimization_free",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

#[test]
fn c_program_links_against_static_library() {
    // Test builds skip the staticlib artifact; build it in the dev profile.
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let target = exe.ancestors().nth(3).unwrap().to_path_buf();
    let built = Command::new(env!("CARGO"))
        .args(["build", "-p", "uavsec-ffi", "--lib", "--target-dir"])
        .arg(&target)
        .current_dir(&dir)
        .status()
        .unwrap();
    assert!(built.success());
    let lib = target.join("debug/libuavsec_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "smoke exited with {}", run.status);
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
