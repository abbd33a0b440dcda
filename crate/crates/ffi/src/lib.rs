//! C ABI over `uavsec`.
//!
//! Every fallible function returns a [`UavsecStatus`]; on failure the
//! message is available from [`uavsec_last_error_message`] on the same
//! thread. Handles are opaque and must be released with their `_free`
//! function. Matrices cross the boundary as separate row-major real and
//! imaginary arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use uavsec::config::{parse_with_overrides, ConfigFile};
use uavsec::evaluation::topology_capacity;
use uavsec::linalg::{CMat, C64};
use uavsec::optimizer::{double_loop_optimize, solve_precoding_slot, DoubleLoopOutput, PrecodingProblem};
use uavsec::security::{spectral_cap, ChanceConstraintParams};
use uavsec::topology::{fekete_points, topology_from_config};
use uavsec::Error;

/// Result codes. `Ok` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavsecStatus {
    Ok = 0,
    InvalidInput = 1,
    DimensionMismatch = 2,
    Config = 3,
    UnknownKey = 4,
    Parse = 5,
    Io = 6,
    RankDeficient = 7,
    DegenerateLinearization = 8,
    Singular = 9,
    Infeasible = 10,
    Unreachable = 11,
    SlotInfeasible = 12,
    NonConvergence = 13,
    NullPointer = 14,
    BufferTooSmall = 15,
    Panic = 16,
}

impl From<&Error> for UavsecStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => UavsecStatus::InvalidInput,
            Error::DimensionMismatch { .. } => UavsecStatus::DimensionMismatch,
            Error::Config { .. } => UavsecStatus::Config,
            Error::UnknownKey(_) => UavsecStatus::UnknownKey,
            Error::Parse(_) => UavsecStatus::Parse,
            Error::Io(_) => UavsecStatus::Io,
            Error::RankDeficient { .. } => UavsecStatus::RankDeficient,
            Error::DegenerateLinearization => UavsecStatus::DegenerateLinearization,
            Error::Singular(_) => UavsecStatus::Singular,
            Error::Infeasible { .. } => UavsecStatus::Infeasible,
            Error::Unreachable { .. } => UavsecStatus::Unreachable,
            Error::Slot { .. } => UavsecStatus::SlotInfeasible,
            Error::NonConvergence(_) => UavsecStatus::NonConvergence,
        }
    }
}

/// Scenario configuration handle.
pub struct UavsecConfig {
    file: ConfigFile,
}

/// Output of a joint trajectory and precoder optimization.
pub struct UavsecOptimization {
    out: DoubleLoopOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: UavsecStatus, msg: impl Into<String>) -> UavsecStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> UavsecStatus {
    let status = UavsecStatus::from(&e);
    set_error(format!("{}: {e}", e.kind()));
    status
}

fn guard(f: impl FnOnce() -> UavsecStatus) -> UavsecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(UavsecStatus::Panic, "internal panic"),
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, UavsecStatus> {
    if p.is_null() {
        return Err(fail(UavsecStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(UavsecStatus::InvalidInput, "string is not UTF-8"))
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(UavsecStatus::NullPointer, concat!("null argument `", stringify!($p), "`"));
        })+
    };
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, or 0 when no error
/// has been recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn uavsec_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uavsec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Creates a configuration holding the reference scenario.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uavsec_config_reference(out: *mut *mut UavsecConfig) -> UavsecStatus {
    guard(|| {
        non_null!(out);
        *out = Box::into_raw(Box::new(UavsecConfig {
            file: ConfigFile::default(),
        }));
        UavsecStatus::Ok
    })
}

/// Parses and validates a TOML scenario.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uavsec_config_from_toml(text: *const c_char, out: *mut *mut UavsecConfig) -> UavsecStatus {
    guard(|| {
        non_null!(out);
        let text = match c_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let file = match parse_with_overrides(text, &[]) {
            Ok(f) => f,
            Err(e) => return from_error(e),
        };
        if let Err(e) = file.resolve() {
            return from_error(e);
        }
        *out = Box::into_raw(Box::new(UavsecConfig { file }));
        UavsecStatus::Ok
    })
}

/// Applies one `section.key=value` override. The configuration is left
/// unchanged if the result does not validate.
///
/// # Safety
/// `config` must come from this library; `assignment` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn uavsec_config_set(config: *mut UavsecConfig, assignment: *const c_char) -> UavsecStatus {
    guard(|| {
        non_null!(config);
        let assignment = match c_str(assignment) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg = &mut *config;
        let updated = parse_with_overrides(&cfg.file.to_toml(), &[assignment.to_string()])
            .and_then(|f| f.resolve().map(|_| f));
        match updated {
            Ok(f) => {
                cfg.file = f;
                UavsecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `config` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn uavsec_config_free(config: *mut UavsecConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Writes the K Fekete points on [-1, 1] into `out_beta` (length `k`).
///
/// # Safety
/// `out_beta` must point to `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn uavsec_fekete_points(k: usize, out_beta: *mut f64) -> UavsecStatus {
    guard(|| {
        non_null!(out_beta);
        match fekete_points(k, 1e-12, 8) {
            Ok(sol) => {
                ptr::copy_nonoverlapping(sol.beta.as_ptr(), out_beta, k);
                UavsecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Spectral cap c such that WWᴴ ⪯ cI keeps every one of `q` Rayleigh
/// eavesdroppers below SNR `xi` with probability at least `kappa`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uavsec_spectral_cap(
    xi: f64,
    kappa: f64,
    q: usize,
    sigma_e2: f64,
    n: usize,
    out: *mut f64,
) -> UavsecStatus {
    guard(|| {
        non_null!(out);
        match ChanceConstraintParams::new(xi, kappa, q, sigma_e2).and_then(|p| spectral_cap(&p, n)) {
            Ok(c) => {
                *out = c;
                UavsecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Capacity Σ log₂(1 + γλ_k/N) of the normalized channel between an
/// M-element uniform receiver and the transmit topology `eta` (length `n`).
///
/// # Safety
/// `eta` must point to `n` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn uavsec_topology_capacity(
    m: usize,
    eta: *const f64,
    n: usize,
    k: usize,
    nu: f64,
    phi: f64,
    gamma: f64,
    out: *mut f64,
) -> UavsecStatus {
    guard(|| {
        non_null!(eta, out);
        if m == 0 || n == 0 || k == 0 || k > m.min(n) {
            return fail(UavsecStatus::InvalidInput, "need 1 <= K <= min(M, N)");
        }
        let eta = std::slice::from_raw_parts(eta, n);
        *out = topology_capacity(m, eta, k, nu, phi, gamma);
        UavsecStatus::Ok
    })
}

/// Minimum-power precoder for a K×N channel (`h_re`, `h_im` row-major).
/// Writes the N×K precoder row-major into `w_re`, `w_im` and its power to
/// `out_power`. Pass `INFINITY` for `spectral_cap` or `p_max` to disable.
///
/// # Safety
/// `h_re`/`h_im` must hold K·N doubles, `w_re`/`w_im` N·K writable doubles.
#[no_mangle]
pub unsafe extern "C" fn uavsec_solve_precoding(
    h_re: *const f64,
    h_im: *const f64,
    k: usize,
    n: usize,
    gamma: f64,
    sigma2: f64,
    spectral_cap: f64,
    p_max: f64,
    w_re: *mut f64,
    w_im: *mut f64,
    out_power: *mut f64,
) -> UavsecStatus {
    guard(|| {
        non_null!(h_re, h_im, w_re, w_im, out_power);
        if k == 0 || n == 0 {
            return fail(UavsecStatus::InvalidInput, "empty channel");
        }
        let re = std::slice::from_raw_parts(h_re, k * n);
        let im = std::slice::from_raw_parts(h_im, k * n);
        let h = CMat::from_fn(k, n, |r, c| C64::new(re[r * n + c], im[r * n + c]));
        let problem = PrecodingProblem {
            h,
            streams: k,
            gamma,
            sigma2,
            spectral_cap,
            p_max,
        };
        match solve_precoding_slot(&problem, 1e-8) {
            Ok((w, rep)) => {
                for r in 0..n {
                    for c in 0..k {
                        *w_re.add(r * k + c) = w[(r, c)].re;
                        *w_im.add(r * k + c) = w[(r, c)].im;
                    }
                }
                *out_power = rep.objective;
                UavsecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Runs the joint trajectory and precoder optimization.
///
/// # Safety
/// `config` must come from this library and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn uavsec_optimize(config: *const UavsecConfig, out: *mut *mut UavsecOptimization) -> UavsecStatus {
    guard(|| {
        non_null!(config, out);
        let result = (*config)
            .file
            .resolve()
            .and_then(|cfg| topology_from_config(&cfg).and_then(|axes| double_loop_optimize(&cfg, &axes)));
        match result {
            Ok(o) => {
                *out = Box::into_raw(Box::new(UavsecOptimization { out: o }));
                UavsecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of transmission slots I (the trajectory has I + 1 centers).
///
/// # Safety
/// `result` must come from [`uavsec_optimize`].
#[no_mangle]
pub unsafe extern "C" fn uavsec_optimization_slots(result: *const UavsecOptimization) -> usize {
    if result.is_null() {
        return 0;
    }
    (*result).out.trajectory.slots()
}

/// Total transmit power Γ in watts.
///
/// # Safety
/// `result` must come from [`uavsec_optimize`] and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn uavsec_optimization_total_power(
    result: *const UavsecOptimization,
    out: *mut f64,
) -> UavsecStatus {
    guard(|| {
        non_null!(result, out);
        *out = (*result).out.trajectory.total_gamma;
        UavsecStatus::Ok
    })
}

/// Writes the I + 1 centers as interleaved x, y pairs into `xy`, which must
/// hold `len` doubles with `len >= 2 (I + 1)`.
///
/// # Safety
/// `result` must come from [`uavsec_optimize`]; `xy` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn uavsec_optimization_centers(
    result: *const UavsecOptimization,
    xy: *mut f64,
    len: usize,
) -> UavsecStatus {
    guard(|| {
        non_null!(result, xy);
        let centers = &(*result).out.trajectory.centers;
        if len < 2 * centers.len() {
            return fail(
                UavsecStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", 2 * centers.len()),
            );
        }
        for (i, c) in centers.iter().enumerate() {
            *xy.add(2 * i) = c[0];
            *xy.add(2 * i + 1) = c[1];
        }
        UavsecStatus::Ok
    })
}

/// # Safety
/// `result` must be null or come from [`uavsec_optimize`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn uavsec_optimization_free(result: *mut UavsecOptimization) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
