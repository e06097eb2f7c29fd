//! C interface to `s1avg`.
//!
//! Every function returns an [`S1Status`]; on failure a description is
//! available from [`s1avg_last_error`] on the calling thread. Objects are
//! opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use s1avg::bounds::{gronwall_bound, surface_length_bound, GronwallParams};
use s1avg::harness::{emit_csv, verify_theorem, SweepResult};
use s1avg::vfdsl::{eval_expr, load_config, parse_config, parse_expr, Expr, SystemConfig};
use s1avg::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum S1Status {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Syntax = 4,
    Numerical = 5,
    DomainExit = 6,
    Io = 7,
    Panic = 8,
}

/// A validated system configuration.
pub struct S1Config(SystemConfig);

/// Result of an averaging-error sweep.
pub struct S1Sweep(SweepResult);

/// A parsed expression.
pub struct S1Expr(Expr);

/// One row of a sweep.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct S1SweepRow {
    pub epsilon: f64,
    pub sup_error: f64,
    pub c_eps_bound: f64,
    pub term1: f64,
    pub term2: f64,
    pub wall_ms: f64,
}

/// Constants of the error estimate.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct S1Constants {
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub c: f64,
    pub epsilon0: f64,
    pub l0: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> S1Status {
    match e {
        Error::Config { .. } | Error::ModelMismatch { .. } | Error::Dimension { .. } => S1Status::Config,
        Error::Dsl(_) => S1Status::Syntax,
        Error::Io(_) => S1Status::Io,
        Error::DomainExit { .. } => S1Status::DomainExit,
        Error::InvalidPoint(_) | Error::Domain(_) | Error::NotSameFiber { .. } => S1Status::InvalidArgument,
        _ => S1Status::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (S1Status, String)>) -> S1Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            S1Status::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            S1Status::Panic
        }
    }
}

fn lift(e: Error) -> (S1Status, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (S1Status, String) {
    (S1Status::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, (S1Status, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (S1Status::InvalidArgument, "string is not valid UTF-8".into()))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, (S1Status, String)> {
    p.as_mut().ok_or_else(null)
}

unsafe fn ref_arg<'a, T>(p: *const T) -> Result<&'a T, (S1Status, String)> {
    p.as_ref().ok_or_else(null)
}

/// Message of the last failure on this thread (empty after a success).
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn s1avg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn s1avg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Loads and validates a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn s1avg_config_load(path: *const c_char, out: *mut *mut S1Config) -> S1Status {
    guard(|| {
        let path = str_arg(path)?;
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let cfg = load_config(Path::new(path)).map_err(lift)?;
        *out = Box::into_raw(Box::new(S1Config(cfg)));
        Ok(())
    })
}

/// Parses and validates configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn s1avg_config_parse(text: *const c_char, out: *mut *mut S1Config) -> S1Status {
    guard(|| {
        let text = str_arg(text)?;
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let cfg = parse_config(text).map_err(lift)?;
        *out = Box::into_raw(Box::new(S1Config(cfg)));
        Ok(())
    })
}

/// Number of coordinates of a point on the configured manifold.
///
/// # Safety
/// `cfg` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_config_dim(cfg: *const S1Config, out: *mut usize) -> S1Status {
    guard(|| {
        *out_arg(out)? = ref_arg(cfg)?.0.kind.dim();
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library (or be null) and not be used again.
#[no_mangle]
pub unsafe extern "C" fn s1avg_config_free(cfg: *mut S1Config) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the averaging-error sweep of the configuration.
///
/// # Safety
/// `cfg` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_verify(cfg: *const S1Config, out: *mut *mut S1Sweep) -> S1Status {
    guard(|| {
        let cfg = ref_arg(cfg)?;
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let res = verify_theorem(&cfg.0).map_err(lift)?;
        *out = Box::into_raw(Box::new(S1Sweep(res)));
        Ok(())
    })
}

/// # Safety
/// `sweep` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_sweep_len(sweep: *const S1Sweep, out: *mut usize) -> S1Status {
    guard(|| {
        *out_arg(out)? = ref_arg(sweep)?.0.rows.len();
        Ok(())
    })
}

/// Row `index` in ascending `epsilon` order.
///
/// # Safety
/// `sweep` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_sweep_row(sweep: *const S1Sweep, index: usize, out: *mut S1SweepRow) -> S1Status {
    guard(|| {
        let s = ref_arg(sweep)?;
        let out = out_arg(out)?;
        let r = s.0.rows.get(index).ok_or_else(|| {
            (
                S1Status::InvalidArgument,
                format!("row {index} out of range ({} rows)", s.0.rows.len()),
            )
        })?;
        *out = S1SweepRow {
            epsilon: r.epsilon,
            sup_error: r.sup_error,
            c_eps_bound: r.c_eps_bound,
            term1: r.term1,
            term2: r.term2,
            wall_ms: r.wall_ms,
        };
        Ok(())
    })
}

/// Log–log slope of the error against `epsilon`.
///
/// # Safety
/// `sweep` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_sweep_slope(sweep: *const S1Sweep, out: *mut f64) -> S1Status {
    guard(|| {
        *out_arg(out)? = ref_arg(sweep)?.0.slope;
        Ok(())
    })
}

/// # Safety
/// `sweep` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_sweep_constants(sweep: *const S1Sweep, out: *mut S1Constants) -> S1Status {
    guard(|| {
        let k = &ref_arg(sweep)?.0.constants;
        *out_arg(out)? = S1Constants {
            kappa0: k.kappa0,
            kappa1: k.kappa1,
            kappa2: k.kappa2,
            c: k.c,
            epsilon0: k.epsilon0,
            l0: k.l0,
        };
        Ok(())
    })
}

/// Writes 1 to `out` when every asserted inequality held, 0 otherwise.
///
/// # Safety
/// `sweep` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_sweep_passed(sweep: *const S1Sweep, out: *mut i32) -> S1Status {
    guard(|| {
        *out_arg(out)? = i32::from(ref_arg(sweep)?.0.passed());
        Ok(())
    })
}

/// Writes the sweep as CSV; with `timings == 0` the `wall_ms` column is zero.
///
/// # Safety
/// `sweep` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn s1avg_sweep_write_csv(sweep: *const S1Sweep, path: *const c_char, timings: i32) -> S1Status {
    guard(|| {
        let s = ref_arg(sweep)?;
        let path = str_arg(path)?;
        let res = if timings != 0 {
            s.0.clone()
        } else {
            s.0.clone().without_timings()
        };
        emit_csv(&res, path).map_err(lift)
    })
}

/// # Safety
/// `sweep` must come from this library (or be null) and not be used again.
#[no_mangle]
pub unsafe extern "C" fn s1avg_sweep_free(sweep: *mut S1Sweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// `(δ₂/δ₁ + δ₃) e^{δ₁(t − t₀)} − δ₂/δ₁`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_gronwall_bound(
    delta1: f64,
    delta2: f64,
    delta3: f64,
    t0: f64,
    t: f64,
    out: *mut f64,
) -> S1Status {
    guard(|| {
        let out = out_arg(out)?;
        let p = GronwallParams { delta1, delta2, delta3, t0 };
        *out = gronwall_bound(&p, t).map_err(lift)?;
        Ok(())
    })
}

/// `(C₂/C₁ + L(0)) e^{C₁t} − C₂/C₁`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_surface_length_bound(c1: f64, c2: f64, l_init: f64, t: f64, out: *mut f64) -> S1Status {
    guard(|| {
        *out_arg(out)? = surface_length_bound(c1, c2, l_init, t).map_err(lift)?;
        Ok(())
    })
}

/// Parses an expression.
///
/// # Safety
/// `src` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_expr_parse(src: *const c_char, out: *mut *mut S1Expr) -> S1Status {
    guard(|| {
        let src = str_arg(src)?;
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let e = parse_expr(src).map_err(|e| lift(e.into()))?;
        *out = Box::into_raw(Box::new(S1Expr(e)));
        Ok(())
    })
}

/// Evaluates with `count` bindings `names[i] = values[i]`. `non_finite`
/// (may be null) receives 1 when the value or an intermediate is not finite.
///
/// # Safety
/// `names` and `values` must hold `count` entries; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn s1avg_expr_eval(
    expr: *const S1Expr,
    names: *const *const c_char,
    values: *const f64,
    count: usize,
    out: *mut f64,
    non_finite: *mut i32,
) -> S1Status {
    guard(|| {
        let e = ref_arg(expr)?;
        let out = out_arg(out)?;
        let mut env = HashMap::new();
        if count > 0 {
            if names.is_null() || values.is_null() {
                return Err(null());
            }
            let names = std::slice::from_raw_parts(names, count);
            let values = std::slice::from_raw_parts(values, count);
            for (n, v) in names.iter().zip(values) {
                env.insert(str_arg(*n)?.to_string(), *v);
            }
        }
        let r = eval_expr(&e.0, &env).map_err(|e| lift(e.into()))?;
        *out = r.value;
        if let Some(f) = non_finite.as_mut() {
            *f = i32::from(r.non_finite);
        }
        Ok(())
    })
}

/// # Safety
/// `expr` must come from this library (or be null) and not be used again.
#[no_mangle]
pub unsafe extern "C" fn s1avg_expr_free(expr: *mut S1Expr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}
