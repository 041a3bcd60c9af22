use std::ffi::CStr;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use zakbench_ffi::*;

struct Model(*mut ZbModel);

impl Model {
    fn new(w: f64, v: f64, j: f64) -> Self {
        let mut m = ptr::null_mut();
        assert_eq!(unsafe { zb_model_new(w, v, j, &mut m) }, ZbStatus::Ok);
        Model(m)
    }
}

impl Drop for Model {
    fn drop(&mut self) {
        unsafe { zb_model_free(self.0) }
    }
}

fn last_error() -> String {
    let p = zb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn invariants_through_handles() {
    for ((w, v, j), expect) in [((5.0, 1.0, 0.0), 0), ((1.0, 5.0, 0.0), 1), ((1.0, 1.0, 4.0), 2)] {
        let m = Model::new(w, v, j);
        let mut wn = -1;
        assert_eq!(unsafe { zb_winding_number(m.0, 4096, &mut wn) }, ZbStatus::Ok);
        assert_eq!(wn, expect);
        let mut theta = 0.0;
        assert_eq!(unsafe { zb_theta_unwrapped(m.0, PI, 4096, &mut theta) }, ZbStatus::Ok);
        assert!((theta - PI * expect as f64).abs() < 1e-6);
    }
    let m = Model::new(1.0, 5.0, 0.0);
    let mut zak = 0.0;
    assert_eq!(unsafe { zb_zak_wilson(m.0, 4096, &mut zak) }, ZbStatus::Ok);
    assert!((zak - PI).abs() < 1e-4);
    assert!(zb_last_error().is_null());
}

#[test]
fn phase_run_series() {
    let m = Model::new(1.0, 4.0, 1.0);
    for (schedule, target) in [(ZbSchedule::Half, PI), (ZbSchedule::Full, 2.0 * PI)] {
        let mut run = ptr::null_mut();
        assert_eq!(unsafe { zb_phase_run_new(m.0, 200.0, 40000, schedule, &mut run) }, ZbStatus::Ok);
        let n = unsafe { zb_phase_run_len(run) };
        assert_eq!(n, 40001);
        let mut phi = vec![0.0; n];
        let mut t = vec![0.0; n];
        assert_eq!(unsafe { zb_phase_run_delta_phi(run, phi.as_mut_ptr(), n) }, ZbStatus::Ok);
        assert_eq!(unsafe { zb_phase_run_times(run, t.as_mut_ptr(), n) }, ZbStatus::Ok);
        let mut last = 0.0;
        let mut fid = 0.0;
        unsafe {
            assert_eq!(zb_phase_run_final(run, &mut last), ZbStatus::Ok);
            assert_eq!(zb_phase_run_min_fidelity(run, &mut fid), ZbStatus::Ok);
        }
        assert_eq!(last, phi[n - 1]);
        assert!((last - target).abs() < 0.05, "{last}");
        assert_eq!((t[0], t[n - 1]), (0.0, 200.0));
        assert!(fid > 0.99 && fid <= 1.0 + 1e-12);

        let mut short = vec![0.0; n - 1];
        let s = unsafe { zb_phase_run_delta_phi(run, short.as_mut_ptr(), n - 1) };
        assert_eq!(s, ZbStatus::InvalidArgument);
        assert!(last_error().contains("need 40001"));
        unsafe { zb_phase_run_free(run) };
    }
}

#[test]
fn error_codes() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { zb_model_new(0.0, 0.0, 0.0, &mut m) }, ZbStatus::InvalidArgument);
    assert!(m.is_null());
    assert_eq!(unsafe { zb_model_new(1.0, 1.0, 0.0, ptr::null_mut()) }, ZbStatus::InvalidArgument);
    assert!(last_error().contains("null"));

    let gapless = Model::new(1.0, 1.0, 0.0);
    let mut out = 0;
    assert_eq!(unsafe { zb_winding_number(gapless.0, 4096, &mut out) }, ZbStatus::Gapless);
    assert!(!last_error().is_empty());
    let mut run = ptr::null_mut();
    let s = unsafe { zb_phase_run_new(gapless.0, 200.0, 1000, ZbSchedule::Half, &mut run) };
    assert_eq!(s, ZbStatus::Gapless);
    assert!(run.is_null());

    let m = Model::new(1.0, 1.0, 4.0);
    let s = unsafe { zb_phase_run_new(m.0, 200.0, 4, ZbSchedule::Half, &mut run) };
    assert_eq!(s, ZbStatus::UnwrapJump);
    assert_eq!(unsafe { zb_winding_number(ptr::null(), 64, &mut out) }, ZbStatus::InvalidArgument);
    assert_eq!(unsafe { zb_phase_run_len(ptr::null()) }, 0);
    unsafe {
        zb_model_free(ptr::null_mut());
        zb_phase_run_free(ptr::null_mut());
    }
}

#[test]
fn lab_comparison() {
    let m = Model::new(1.0, 5.0, 0.0);
    let mut config = zb_cavity_config_default();
    assert_eq!((config.f0_hz, config.demod_cycles), (1955.0, 8));
    let mut out = ZbLabResult::default();
    assert_eq!(unsafe { zb_lab_compare(m.0, &config, &mut out) }, ZbStatus::Ok);
    assert!(out.abs_error <= 0.1);
    assert!((out.delta_phi_lab - PI).abs() <= 0.1);
    assert!(out.samples > 900);

    config.g0 *= 10.0;
    assert_eq!(unsafe { zb_lab_compare(m.0, &config, &mut out) }, ZbStatus::RotatingWave);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(zb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn staticlib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libzakbench_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = staticlib().expect("staticlib built alongside the tests");
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("cc available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let first: Vec<&str> = lines.next().unwrap().split(' ').collect();
    assert_eq!(first[0], "40001");
    assert!((first[1].parse::<f64>().unwrap() - PI).abs() < 0.05);
    assert!(lines.next().unwrap().starts_with("3 "));
}
