//! C ABI over the solver: opaque handles for configs and solve reports,
//! integer status codes, and plain structs for the threshold bundle. Every
//! entry point is panic-safe (panics map to `NK_STATUS_PANIC`).
//!
//! The matching header is generated into `include/nehari_kirchhoff.h` at
//! build time.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nehari_kirchhoff::mesh::Mesh1d;
use nehari_kirchhoff::problem::{self, ValidatedConfig};
use nehari_kirchhoff::solver::{self, Branch, SolveReport, SolverOptions};
use nehari_kirchhoff::thresholds;
use nehari_kirchhoff::{Error, NehariClass};

/// Status codes shared by every entry point: `NK_STATUS_OK` on success,
/// positive values mirror the library's diagnostic codes, negative values
/// are boundary failures.
pub const NK_STATUS_OK: i32 = 0;
pub const NK_STATUS_NULL_ARGUMENT: i32 = -1;
pub const NK_STATUS_INVALID_STRING: i32 = -2;
pub const NK_STATUS_PANIC: i32 = -3;
pub const NK_STATUS_BUFFER_TOO_SMALL: i32 = -4;

/// Opaque validated configuration handle.
pub struct NkConfig {
    inner: ValidatedConfig,
}

/// Opaque solve-report handle.
pub struct NkReport {
    inner: SolveReport,
}

/// Branch selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NkBranch {
    Plus = 0,
    Minus = 1,
}

/// Nehari class of a certified solution.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NkClass {
    Plus = 0,
    Minus = 1,
    Zero = 2,
    Off = 3,
}

/// Threshold bundle (plain struct, no ownership).
#[repr(C)]
#[derive(Clone, Copy)]
pub struct NkThresholds {
    pub lambda_star: f64,
    pub lambda_dstar: f64,
    pub lambda_tstar: f64,
    pub eta0: f64,
    pub eta_lambda: f64,
    pub c_level: f64,
    pub s_p: f64,
    pub coercivity_c: f64,
    pub s_m: f64,
    pub omega_measure: f64,
}

fn status_of(e: &Error) -> i32 {
    e.code()
}

// dense operators scale as nodes^2; keep requests within an allocation
// range that fails softly instead of aborting
fn check_mesh_nodes(mesh_nodes: usize) -> Result<(), Error> {
    if mesh_nodes < 33 {
        return Err(Error::ConfigParse("mesh_nodes must be >= 33".into()));
    }
    if mesh_nodes > 8193 {
        return Err(Error::ConfigParse("mesh_nodes must be <= 8193".into()));
    }
    Ok(())
}

fn guard<F: FnOnce() -> i32>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => NK_STATUS_PANIC,
    }
}

/// Parse and validate a configuration from the plain-text `key = value`
/// format. On success writes a newly allocated handle to `out`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nk_config_parse(text: *const c_char, out: *mut *mut NkConfig) -> i32 {
    if text.is_null() || out.is_null() {
        return NK_STATUS_NULL_ARGUMENT;
    }
    guard(|| {
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return NK_STATUS_INVALID_STRING;
        };
        match problem::parse_config(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(NkConfig { inner: cfg }));
                NK_STATUS_OK
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Load and validate a configuration file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nk_config_load(path: *const c_char, out: *mut *mut NkConfig) -> i32 {
    if path.is_null() || out.is_null() {
        return NK_STATUS_NULL_ARGUMENT;
    }
    guard(|| {
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return NK_STATUS_INVALID_STRING;
        };
        match problem::load_config(std::path::Path::new(path)) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(NkConfig { inner: cfg }));
                NK_STATUS_OK
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release a configuration handle.
///
/// # Safety
/// `cfg` must be a handle from `nk_config_parse`/`nk_config_load` or null.
#[no_mangle]
pub unsafe extern "C" fn nk_config_free(cfg: *mut NkConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Replace lambda (revalidates the configuration).
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn nk_config_set_lambda(cfg: *mut NkConfig, lambda: f64) -> i32 {
    if cfg.is_null() {
        return NK_STATUS_NULL_ARGUMENT;
    }
    guard(|| match (*cfg).inner.with_lambda(lambda) {
        Ok(v) => {
            (*cfg).inner = v;
            NK_STATUS_OK
        }
        Err(e) => status_of(&e),
    })
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn nk_config_lambda(cfg: *const NkConfig) -> f64 {
    if cfg.is_null() {
        return f64::NAN;
    }
    let cfg = &(*cfg).inner;
    cfg.lambda
}

/// Critical Sobolev exponent of the configuration.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn nk_config_p_star(cfg: *const NkConfig) -> f64 {
    if cfg.is_null() {
        return f64::NAN;
    }
    (*cfg).inner.p_star
}

/// Compute the admissibility-constant bundle on a mesh with `mesh_nodes`
/// nodes (the Sobolev constant estimate runs on the same mesh).
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nk_thresholds(
    cfg: *const NkConfig,
    mesh_nodes: usize,
    out: *mut NkThresholds,
) -> i32 {
    if cfg.is_null() || out.is_null() {
        return NK_STATUS_NULL_ARGUMENT;
    }
    guard(|| {
        let cfg = &(*cfg).inner;
        if let Err(e) = check_mesh_nodes(mesh_nodes) {
            return status_of(&e);
        }
        let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, mesh_nodes);
        let sob = match thresholds::sobolev_constant(cfg, mesh) {
            Ok(s) => s,
            Err(e) => return status_of(&e),
        };
        let th = thresholds::compute(cfg, sob.s_p);
        *out = NkThresholds {
            lambda_star: th.lambda_star,
            lambda_dstar: th.lambda_dstar,
            lambda_tstar: th.lambda_tstar,
            eta0: th.eta0,
            eta_lambda: th.eta_lambda,
            c_level: th.c_level,
            s_p: th.s_p,
            coercivity_c: th.coercivity_c,
            s_m: th.s_m,
            omega_measure: th.omega_measure,
        };
        NK_STATUS_OK
    })
}

/// Run the branch minimizer from the documented initialization and hand
/// back a certified report. In the critical regime the minus branch first
/// solves the plus branch internally to seed the crossing path.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nk_solve(
    cfg: *const NkConfig,
    branch: NkBranch,
    mesh_nodes: usize,
    out: *mut *mut NkReport,
) -> i32 {
    if cfg.is_null() || out.is_null() {
        return NK_STATUS_NULL_ARGUMENT;
    }
    guard(|| {
        let cfg = &(*cfg).inner;
        if let Err(e) = check_mesh_nodes(mesh_nodes) {
            return status_of(&e);
        }
        let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, mesh_nodes);
        let opts = SolverOptions::default();
        let run = || -> Result<SolveReport, Error> {
            let ws = solver::Workspace::new(cfg.clone(), mesh)?;
            let bump = solver::positive_bump(cfg, mesh);
            match branch {
                NkBranch::Plus => solver::minimize_branch_on(&ws, Branch::Plus, &bump, &opts),
                NkBranch::Minus => {
                    let init = if cfg.is_critical() {
                        let plus = solver::minimize_branch_on(&ws, Branch::Plus, &bump, &opts)?;
                        solver::critical_minus_init(&ws, &plus.solution)?
                    } else {
                        let sob = thresholds::sobolev_constant(cfg, mesh)?;
                        let (_, eta_lambda) = thresholds::eta_bounds(cfg, sob.s_p, cfg.lambda);
                        let nb = ws.norm_p(&bump)?.powf(1.0 / cfg.p);
                        bump.scale(2.0 * eta_lambda / nb)
                    };
                    solver::minimize_branch_on(&ws, Branch::Minus, &init, &opts)
                }
            }
        };
        match run() {
            Ok(report) => {
                *out = Box::into_raw(Box::new(NkReport { inner: report }));
                NK_STATUS_OK
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn nk_report_energy(report: *const NkReport) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    (*report).inner.energy
}

/// Dual-norm residual of the certified weak form.
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn nk_report_residual(report: *const NkReport) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    (*report).inner.residual
}

/// Scale against which the residual tolerance is applied.
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn nk_report_residual_scale(report: *const NkReport) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    (*report).inner.residual_scale
}

/// X-norm of the solution.
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn nk_report_norm(report: *const NkReport) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    (*report).inner.norm_x
}

/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn nk_report_iterations(report: *const NkReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).inner.iterations
}

/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn nk_report_class(report: *const NkReport) -> NkClass {
    if report.is_null() {
        return NkClass::Off;
    }
    match (*report).inner.nehari_class {
        NehariClass::Plus => NkClass::Plus,
        NehariClass::Minus => NkClass::Minus,
        NehariClass::Zero => NkClass::Zero,
        NehariClass::Off => NkClass::Off,
    }
}

/// Number of nodal values of the solution.
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn nk_report_solution_len(report: *const NkReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).inner.solution.values.len()
}

/// Copy the nodal values into `buf` (capacity `len`).
///
/// # Safety
/// `report` must be a live report handle and `buf` must point to at least
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nk_report_solution_copy(
    report: *const NkReport,
    buf: *mut f64,
    len: usize,
) -> i32 {
    if report.is_null() || buf.is_null() {
        return NK_STATUS_NULL_ARGUMENT;
    }
    let values = &(*report).inner.solution.values;
    if len < values.len() {
        return NK_STATUS_BUFFER_TOO_SMALL;
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    NK_STATUS_OK
}

/// Release a report handle.
///
/// # Safety
/// `report` must be a handle from `nk_solve` or null.
#[no_mangle]
pub unsafe extern "C" fn nk_report_free(report: *mut NkReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Static description of a status code; never null.
#[no_mangle]
pub extern "C" fn nk_error_message(code: i32) -> *const c_char {
    // leaked CStrings form a tiny static table, one per distinct code
    use std::collections::HashMap;
    use std::sync::{Mutex, OnceLock};
    static TABLE: OnceLock<Mutex<HashMap<i32, &'static CStr>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut table = table.lock().expect("message table");
    let entry = table.entry(code).or_insert_with(|| {
        let text = match code {
            NK_STATUS_OK => "ok".to_string(),
            NK_STATUS_NULL_ARGUMENT => "null argument".to_string(),
            NK_STATUS_INVALID_STRING => "invalid string".to_string(),
            NK_STATUS_PANIC => "internal panic".to_string(),
            NK_STATUS_BUFFER_TOO_SMALL => "buffer too small".to_string(),
            1 => "exponent chain violated".to_string(),
            2 => "dimension constraint violated".to_string(),
            3 => "negative weight".to_string(),
            4 => "config error".to_string(),
            5 => "function does not vanish on the boundary".to_string(),
            6 => "point on or outside the boundary".to_string(),
            7 => "fiber derivative needs t > 0".to_string(),
            8 => "degenerate fiber profile".to_string(),
            9 => "no root bracket".to_string(),
            10 => "cutoff exceeds the domain".to_string(),
            11 => "epsilon grid too small".to_string(),
            12 => "wrong-sign nonlinearity weight".to_string(),
            13 => "singular evaluation without flooring".to_string(),
            14 => "projection lost during descent".to_string(),
            15 => "descent stalled".to_string(),
            16 => "lambda above the admissible threshold".to_string(),
            17 => "i/o error".to_string(),
            18 => "solutions not separated".to_string(),
            _ => format!("unknown status {code}"),
        };
        Box::leak(
            CString::new(text)
                .expect("no interior NUL")
                .into_boxed_c_str(),
        )
    });
    entry.as_ptr()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DESK: &str = "n = 1\np = 2\ns = 0.4\nalpha = 0.5\ntheta = 1.5\na = 1\nb = 1\nlambda = 0.02\nq = 4\ndomain = -1, 1\nc = const 1\nw = const 1\n";

    #[test]
    fn config_round_trip() {
        let text = CString::new(DESK).unwrap();
        let mut cfg: *mut NkConfig = std::ptr::null_mut();
        let code = unsafe { nk_config_parse(text.as_ptr(), &mut cfg) };
        assert_eq!(code, NK_STATUS_OK);
        assert!(!cfg.is_null());
        unsafe {
            assert!((nk_config_p_star(cfg) - 10.0).abs() < 1e-12);
            assert!((nk_config_lambda(cfg) - 0.02).abs() < 1e-15);
            assert_eq!(nk_config_set_lambda(cfg, 0.01), NK_STATUS_OK);
            assert!((nk_config_lambda(cfg) - 0.01).abs() < 1e-15);
            // invalid lambda propagates the library diagnostic
            assert_eq!(nk_config_set_lambda(cfg, -1.0), 1);
            nk_config_free(cfg);
        }
    }

    #[test]
    fn bad_config_reports_code() {
        let text = CString::new("q = 2.5\n").unwrap();
        let mut cfg: *mut NkConfig = std::ptr::null_mut();
        let code = unsafe { nk_config_parse(text.as_ptr(), &mut cfg) };
        assert_eq!(code, 1); // exponent chain
        let msg = unsafe { CStr::from_ptr(nk_error_message(code)) };
        assert_eq!(msg.to_str().unwrap(), "exponent chain violated");
    }

    #[test]
    fn thresholds_struct_filled() {
        let text = CString::new(DESK).unwrap();
        let mut cfg: *mut NkConfig = std::ptr::null_mut();
        unsafe {
            assert_eq!(nk_config_parse(text.as_ptr(), &mut cfg), NK_STATUS_OK);
            let mut th = std::mem::zeroed::<NkThresholds>();
            assert_eq!(nk_thresholds(cfg, 65, &mut th), NK_STATUS_OK);
            assert!(th.lambda_star > 0.0);
            assert!(th.eta0 < th.eta_lambda);
            assert!(th.coercivity_c < 0.0);
            nk_config_free(cfg);
        }
    }

    #[test]
    fn solve_through_the_boundary() {
        let text = CString::new(DESK).unwrap();
        let mut cfg: *mut NkConfig = std::ptr::null_mut();
        unsafe {
            assert_eq!(nk_config_parse(text.as_ptr(), &mut cfg), NK_STATUS_OK);
            assert_eq!(nk_config_set_lambda(cfg, 0.02), NK_STATUS_OK);
            let mut report: *mut NkReport = std::ptr::null_mut();
            let code = nk_solve(cfg, NkBranch::Plus, 65, &mut report);
            assert_eq!(
                code,
                NK_STATUS_OK,
                "{:?}",
                CStr::from_ptr(nk_error_message(code))
            );
            assert!(nk_report_energy(report) < 0.0);
            assert_eq!(nk_report_class(report), NkClass::Plus);
            let n = nk_report_solution_len(report);
            assert_eq!(n, 65);
            let mut buf = vec![0.0f64; n];
            assert_eq!(
                nk_report_solution_copy(report, buf.as_mut_ptr(), n),
                NK_STATUS_OK
            );
            assert!(buf.iter().all(|&v| v >= 0.0));
            let mut small = vec![0.0f64; 3];
            assert_eq!(
                nk_report_solution_copy(report, small.as_mut_ptr(), 3),
                NK_STATUS_BUFFER_TOO_SMALL
            );
            nk_report_free(report);
            // lambda far above every threshold must surface, not hang
            assert_eq!(nk_config_set_lambda(cfg, 1e9), NK_STATUS_OK);
            let mut r2: *mut NkReport = std::ptr::null_mut();
            let code = nk_solve(cfg, NkBranch::Plus, 65, &mut r2);
            assert!(code > 0, "expected solver diagnostic, got {code}");
            nk_config_free(cfg);
        }
    }

    #[test]
    fn mesh_bounds_fail_softly() {
        let text = CString::new(DESK).unwrap();
        let mut cfg: *mut NkConfig = std::ptr::null_mut();
        unsafe {
            assert_eq!(nk_config_parse(text.as_ptr(), &mut cfg), NK_STATUS_OK);
            let mut th = std::mem::zeroed::<NkThresholds>();
            assert_eq!(nk_thresholds(cfg, 8, &mut th), 4);
            assert_eq!(nk_thresholds(cfg, usize::MAX, &mut th), 4);
            let mut report: *mut NkReport = std::ptr::null_mut();
            assert_eq!(nk_solve(cfg, NkBranch::Plus, 1 << 40, &mut report), 4);
            nk_config_free(cfg);
        }
    }

    #[test]
    fn generated_header_covers_the_surface() {
        let header = include_str!("../include/nehari_kirchhoff.h");
        for symbol in [
            "nk_config_parse",
            "nk_config_load",
            "nk_config_free",
            "nk_config_set_lambda",
            "nk_config_lambda",
            "nk_config_p_star",
            "nk_thresholds",
            "nk_solve",
            "nk_report_energy",
            "nk_report_residual",
            "nk_report_residual_scale",
            "nk_report_norm",
            "nk_report_iterations",
            "nk_report_class",
            "nk_report_solution_len",
            "nk_report_solution_copy",
            "nk_report_free",
            "nk_error_message",
            "NkThresholds",
            "NkBranch",
            "NkClass",
        ] {
            assert!(header.contains(symbol), "header is missing `{symbol}`");
        }
    }
}
