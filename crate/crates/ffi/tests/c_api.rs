use std::ffi::{c_char, CStr, CString};
use std::ptr;

use s1avg_ffi::*;

const SMALL: &str = r#"
name = "small"

[model]
kind = "trivial"
k = 1

[system]
omega = "1 + 0.5*cos(x1)"
x1 = ["cos(phi)", "sin(phi) + x1"]
m0 = [0.0, 0.5]
L0 = 1.0

[domain]
lower = [-1.0]
upper = [2.5]

[domain0]
lower = [0.0]
upper = [1.6]

[sweep]
eps = [0.1, 0.05]

[numerics]
nodes = 32
tol = 1e-9
seed = 3
grid = 3
halton = 2
theta = 2
"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(s1avg_last_error()) }.to_string_lossy().into_owned()
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(s1avg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn gronwall_values_and_errors() {
    let mut out = 0.0;
    let st = unsafe { s1avg_gronwall_bound(1.0, 1.0, 0.0, 0.0, 1.0, &mut out) };
    assert_eq!(st, S1Status::Ok);
    assert!((out - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    assert!(last_error().is_empty());

    let st = unsafe { s1avg_gronwall_bound(0.0, 1.0, 0.0, 0.0, 1.0, &mut out) };
    assert_eq!(st, S1Status::InvalidArgument);
    assert!(!last_error().is_empty());

    let st = unsafe { s1avg_gronwall_bound(1.0, 1.0, 0.0, 0.0, 1.0, ptr::null_mut()) };
    assert_eq!(st, S1Status::NullPointer);

    let st = unsafe { s1avg_surface_length_bound(2.0, 0.0, 3.0, 0.5, &mut out) };
    assert_eq!(st, S1Status::Ok);
    assert!((out - 3.0 * 1f64.exp()).abs() < 1e-12);
}

#[test]
fn expressions_parse_and_evaluate() {
    let mut e: *mut S1Expr = ptr::null_mut();
    let src = cstr("2*x1 - -x1");
    assert_eq!(unsafe { s1avg_expr_parse(src.as_ptr(), &mut e) }, S1Status::Ok);
    let name = cstr("x1");
    let names = [name.as_ptr()];
    let values = [1.0];
    let (mut v, mut bad) = (0.0, -1);
    let st = unsafe { s1avg_expr_eval(e, names.as_ptr(), values.as_ptr(), 1, &mut v, &mut bad) };
    assert_eq!(st, S1Status::Ok);
    assert_eq!((v, bad), (3.0, 0));

    let st = unsafe { s1avg_expr_eval(e, ptr::null(), ptr::null(), 0, &mut v, ptr::null_mut()) };
    assert_eq!(st, S1Status::Syntax);
    assert!(last_error().contains("x1"));
    unsafe { s1avg_expr_free(e) };

    let src = cstr("x1/0");
    assert_eq!(unsafe { s1avg_expr_parse(src.as_ptr(), &mut e) }, S1Status::Ok);
    unsafe { s1avg_expr_eval(e, names.as_ptr(), values.as_ptr(), 1, &mut v, &mut bad) };
    assert_eq!(bad, 1);
    unsafe { s1avg_expr_free(e) };

    let src = cstr("1 +");
    assert_eq!(unsafe { s1avg_expr_parse(src.as_ptr(), &mut e) }, S1Status::Syntax);
    assert!(e.is_null());
    assert!(last_error().contains("1:4"), "{}", last_error());
}

#[test]
fn invalid_utf8_and_null_handles() {
    let bytes = [0xffu8, 0xfe, 0];
    let mut e: *mut S1Expr = ptr::null_mut();
    let st = unsafe { s1avg_expr_parse(bytes.as_ptr() as *const c_char, &mut e) };
    assert_eq!(st, S1Status::InvalidArgument);
    let mut n = 0usize;
    assert_eq!(unsafe { s1avg_sweep_len(ptr::null(), &mut n) }, S1Status::NullPointer);
    assert_eq!(unsafe { s1avg_config_dim(ptr::null(), &mut n) }, S1Status::NullPointer);
    unsafe {
        s1avg_config_free(ptr::null_mut());
        s1avg_sweep_free(ptr::null_mut());
        s1avg_expr_free(ptr::null_mut());
    }
}

#[test]
fn config_errors_carry_status() {
    let mut cfg: *mut S1Config = ptr::null_mut();
    let bad = SMALL.replace(r#"x1 = ["cos(phi)", "sin(phi) + x1"]"#, r#"x1 = ["cos(phi)"]"#);
    let text = cstr(&bad);
    assert_eq!(unsafe { s1avg_config_parse(text.as_ptr(), &mut cfg) }, S1Status::Config);
    assert!(cfg.is_null());

    let path = cstr("/nonexistent/system.cfg");
    assert_eq!(unsafe { s1avg_config_load(path.as_ptr(), &mut cfg) }, S1Status::Io);
}

#[test]
fn sweep_through_handles() {
    let mut cfg: *mut S1Config = ptr::null_mut();
    let text = cstr(SMALL);
    assert_eq!(unsafe { s1avg_config_parse(text.as_ptr(), &mut cfg) }, S1Status::Ok, "{}", last_error());
    let mut dim = 0usize;
    unsafe { s1avg_config_dim(cfg, &mut dim) };
    assert_eq!(dim, 2);

    let mut sweep: *mut S1Sweep = ptr::null_mut();
    assert_eq!(unsafe { s1avg_verify(cfg, &mut sweep) }, S1Status::Ok, "{}", last_error());
    let mut n = 0usize;
    unsafe { s1avg_sweep_len(sweep, &mut n) };
    assert_eq!(n, 2);

    let mut k = S1Constants::default();
    unsafe { s1avg_sweep_constants(sweep, &mut k) };
    assert!(k.kappa0 > 0.0 && k.c >= k.kappa0);
    let mut rows = [S1SweepRow::default(); 2];
    for (i, r) in rows.iter_mut().enumerate() {
        assert_eq!(unsafe { s1avg_sweep_row(sweep, i, r) }, S1Status::Ok);
        assert!(r.sup_error > 0.0 && r.sup_error <= r.c_eps_bound);
    }
    assert!(rows[0].epsilon < rows[1].epsilon);
    let mut r = S1SweepRow::default();
    assert_eq!(unsafe { s1avg_sweep_row(sweep, 2, &mut r) }, S1Status::InvalidArgument);

    let mut passed = -1;
    unsafe { s1avg_sweep_passed(sweep, &mut passed) };
    assert_eq!(passed, 1);
    let mut slope = 0.0;
    unsafe { s1avg_sweep_slope(sweep, &mut slope) };
    assert!(slope.is_finite());

    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let c = cstr(p.to_str().unwrap());
        assert_eq!(unsafe { s1avg_sweep_write_csv(sweep, c.as_ptr(), 0) }, S1Status::Ok);
    }
    let text_a = std::fs::read(&a).unwrap();
    assert_eq!(text_a, std::fs::read(&b).unwrap());
    let text_a = String::from_utf8(text_a).unwrap();
    assert!(text_a.starts_with("epsilon,sup_error,c_eps_bound,term1,term2,kappa0,kappa1,kappa2,c,wall_ms\n"));
    assert!(text_a.lines().last().unwrap().starts_with("# slope="));

    unsafe {
        s1avg_sweep_free(sweep);
        s1avg_config_free(cfg);
    }
}
