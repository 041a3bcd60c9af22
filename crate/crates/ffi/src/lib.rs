//! C interface to zakbench.
//!
//! Every fallible call returns a [`ZbStatus`]; on failure a message is kept
//! per thread and read back with [`zb_last_error`]. Handles are opaque and
//! must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use zakbench::cli::model_exit_code;
use zakbench::evolve::{evolve_pair_with, PairPaths, PairSetup};
use zakbench::invariants::{theta_unwrapped, winding_number, zak_wilson};
use zakbench::labframe::{run_lab, CavityConfig};
use zakbench::phase::{phase_trace, PhaseTrace};
use zakbench::{Error, ModelParams};

/// Status codes; the numeric values match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZbStatus {
    Ok = 0,
    Failure = 1,
    InvalidArgument = 2,
    Gapless = 3,
    UnwrapJump = 4,
    RotatingWave = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZbSchedule {
    /// Mirror half-zone paths, `Δφ(T) = πW`.
    Half = 0,
    /// Mirror full-zone paths, `Δφ(T) = 2πW`.
    Full = 1,
}

/// Coupling parameters `(w, v, J)`.
pub struct ZbModel {
    params: ModelParams,
}

/// Result of one interferometric pair run.
pub struct ZbPhaseRun {
    trace: PhaseTrace,
}

/// Resonator settings for the lab-frame comparison. Units are Hz, s and rad/s.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZbCavityConfig {
    pub f0_hz: f64,
    pub gamma: f64,
    pub g0: f64,
    pub sample_rate: f64,
    pub total_time: f64,
    pub demod_cycles: u32,
    pub substeps: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZbLabResult {
    pub delta_phi_lab: f64,
    pub delta_phi_rot: f64,
    pub abs_error: f64,
    pub samples: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    let c = CString::new(text).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ZbStatus {
    match model_exit_code(e) {
        2 => ZbStatus::InvalidArgument,
        3 => ZbStatus::Gapless,
        4 => ZbStatus::UnwrapJump,
        5 => ZbStatus::RotatingWave,
        _ => ZbStatus::Failure,
    }
}

fn fail(status: ZbStatus, message: impl Into<String>) -> ZbStatus {
    set_error(message);
    status
}

/// Runs `f`, recording its error or panic as the last error.
fn guard(f: impl FnOnce() -> Result<(), ZbStatus>) -> ZbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ZbStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(ZbStatus::Failure, "internal panic"),
    }
}

fn check<T>(r: zakbench::Result<T>) -> Result<T, ZbStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, ZbStatus> {
    p.as_ref().ok_or_else(|| fail(ZbStatus::InvalidArgument, format!("{what} is null")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<*mut T, ZbStatus> {
    if p.is_null() {
        Err(fail(ZbStatus::InvalidArgument, format!("{what} is null")))
    } else {
        Ok(p)
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next `zb_*` call on the same thread.
#[no_mangle]
pub extern "C" fn zb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn zb_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn zb_model_new(w: f64, v: f64, j: f64, out: *mut *mut ZbModel) -> ZbStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let params = check(ModelParams::new(w, v, j))?;
        *out = Box::into_raw(Box::new(ZbModel { params }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`zb_model_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn zb_model_free(model: *mut ZbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Winding number of `q(k)` sampled at `n` points.
///
/// # Safety
/// `model` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn zb_winding_number(model: *const ZbModel, n: usize, out: *mut i64) -> ZbStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let out = out_ptr(out, "out")?;
        *out = check(winding_number(&m.params, n))?;
        Ok(())
    })
}

/// Wilson-loop Zak phase of the upper band, in `[0, 2π)`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn zb_zak_wilson(model: *const ZbModel, n: usize, out: *mut f64) -> ZbStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let out = out_ptr(out, "out")?;
        *out = check(zak_wilson(&m.params, n))?;
        Ok(())
    })
}

/// `arg q` continued from `k = 0` to `k = target` over `n` intervals.
///
/// # Safety
/// `model` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn zb_theta_unwrapped(model: *const ZbModel, target: f64, n: usize, out: *mut f64) -> ZbStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let out = out_ptr(out, "out")?;
        *out = check(theta_unwrapped(&m.params, target, n))?;
        Ok(())
    })
}

/// Evolves the mirror pair over `total_time` (in units of 1/g0) with `steps` steps.
///
/// # Safety
/// `model` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn zb_phase_run_new(
    model: *const ZbModel,
    total_time: f64,
    steps: usize,
    schedule: ZbSchedule,
    out: *mut *mut ZbPhaseRun,
) -> ZbStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let out = out_ptr(out, "out")?;
        let paths = match schedule {
            ZbSchedule::Half => PairPaths::Half,
            ZbSchedule::Full => PairPaths::Full,
        };
        let setup = PairSetup { paths, ..PairSetup::default() };
        let (a, b) = check(evolve_pair_with(&m.params, total_time, steps, &setup))?;
        let trace = check(phase_trace(&m.params, &a, &b))?;
        *out = Box::into_raw(Box::new(ZbPhaseRun { trace }));
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`zb_phase_run_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn zb_phase_run_free(run: *mut ZbPhaseRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of samples, `steps + 1`; 0 for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn zb_phase_run_len(run: *const ZbPhaseRun) -> usize {
    run.as_ref().map_or(0, |r| r.trace.times.len())
}

/// # Safety
/// `run` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn zb_phase_run_final(run: *const ZbPhaseRun, out: *mut f64) -> ZbStatus {
    guard(|| {
        let r = deref(run, "run")?;
        *out_ptr(out, "out")? = r.trace.final_delta_phi();
        Ok(())
    })
}

/// Smallest instantaneous-eigenstate fidelity over both paths.
///
/// # Safety
/// `run` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn zb_phase_run_min_fidelity(run: *const ZbPhaseRun, out: *mut f64) -> ZbStatus {
    guard(|| {
        let r = deref(run, "run")?;
        *out_ptr(out, "out")? = r.trace.min_fidelity();
        Ok(())
    })
}

unsafe fn copy_series(src: &[f64], buf: *mut f64, len: usize) -> Result<(), ZbStatus> {
    let buf = out_ptr(buf, "buf")?;
    if len < src.len() {
        return Err(fail(
            ZbStatus::InvalidArgument,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies the sample times into `buf`, which must hold `zb_phase_run_len` values.
///
/// # Safety
/// `run` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn zb_phase_run_times(run: *const ZbPhaseRun, buf: *mut f64, len: usize) -> ZbStatus {
    guard(|| copy_series(&deref(run, "run")?.trace.times, buf, len))
}

/// Copies the unwrapped `Δφ(t)` into `buf`, which must hold `zb_phase_run_len` values.
///
/// # Safety
/// `run` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn zb_phase_run_delta_phi(run: *const ZbPhaseRun, buf: *mut f64, len: usize) -> ZbStatus {
    guard(|| copy_series(&deref(run, "run")?.trace.delta_phi, buf, len))
}

#[no_mangle]
pub extern "C" fn zb_cavity_config_default() -> ZbCavityConfig {
    let c = CavityConfig::default();
    ZbCavityConfig {
        f0_hz: c.f0,
        gamma: c.gamma,
        g0: c.g0,
        sample_rate: c.sample_rate,
        total_time: c.total_time,
        demod_cycles: c.demod_cycles as u32,
        substeps: c.substeps as u32,
    }
}

/// Runs the resonator emulation and compares its phase with the rotating frame.
///
/// # Safety
/// `model` must be a live handle, `config` readable and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn zb_lab_compare(
    model: *const ZbModel,
    config: *const ZbCavityConfig,
    out: *mut ZbLabResult,
) -> ZbStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let c = deref(config, "config")?;
        let out = out_ptr(out, "out")?;
        let config = CavityConfig {
            f0: c.f0_hz,
            gamma: c.gamma,
            g0: c.g0,
            sample_rate: c.sample_rate,
            total_time: c.total_time,
            demod_cycles: c.demod_cycles as usize,
            substeps: c.substeps as usize,
        };
        let run = check(run_lab(&m.params, &config))?;
        let cmp = &run.comparison;
        *out = ZbLabResult {
            delta_phi_lab: cmp.final_lab(),
            delta_phi_rot: cmp.final_rot(),
            abs_error: cmp.final_error(),
            samples: cmp.times.len(),
        };
        Ok(())
    })
}
