use std::ffi::{CStr, CString};
use std::ptr;

use cellfree_irs::channel::Geometry;
use cellfree_irs::model::SystemConfig;
use cellfree_irs::pipeline::{run_seed, PhaseSolver, SchemeSpec};
use cellfree_irs_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(cfi_last_error()) }.to_string_lossy().into_owned()
}

const CONFIG: &str = r#"{"l": 2, "k": 1, "r": 1, "m_b": 2, "m_u": 1, "n": 4, "n_h": 2, "n_v": 2}"#;

fn config() -> *mut CfiConfig {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { cfi_config_from_json(cstr(CONFIG).as_ptr(), &mut cfg) }, CfiStatus::Ok);
    cfg
}

fn geometry() -> CString {
    cstr(&serde_json::to_string(&Geometry::reference(2, 1, 60.0)).unwrap())
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(cfi_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn config_errors_are_reported() {
    let mut cfg = ptr::null_mut();
    let status = unsafe { cfi_config_from_json(cstr("{\"l\": ").as_ptr(), &mut cfg) };
    assert_eq!(status, CfiStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("invalid configuration"));

    let status = unsafe { cfi_config_from_json(cstr(r#"{"n": 5}"#).as_ptr(), &mut cfg) };
    assert_eq!(status, CfiStatus::Config);
    assert!(last_error().contains("N_h"));

    assert_eq!(unsafe { cfi_config_from_json(ptr::null(), &mut cfg) }, CfiStatus::NullPointer);
    assert_eq!(unsafe { cfi_config_from_json(cstr("{}").as_ptr(), ptr::null_mut()) }, CfiStatus::NullPointer);
    assert_eq!(unsafe { cfi_config_from_json(cstr("{}").as_ptr(), &mut cfg) }, CfiStatus::Ok);
    assert!(last_error().is_empty());
    unsafe { cfi_config_free(cfg) };
}

#[test]
fn joint_optimize_matches_the_library() {
    let cfg = config();
    let mut ch = ptr::null_mut();
    assert_eq!(unsafe { cfi_channels_sample(cfg, geometry().as_ptr(), 11, 3, &mut ch) }, CfiStatus::Ok);
    let mut res = ptr::null_mut();
    let status = unsafe { cfi_joint_optimize(cfg, ch, cstr(r#"{"solver": "ASO"}"#).as_ptr(), &mut res) };
    assert_eq!(status, CfiStatus::Ok, "{}", last_error());

    let rust_cfg: SystemConfig = serde_json::from_str(CONFIG).unwrap();
    let expect = run_seed(&rust_cfg, &Geometry::reference(2, 1, 60.0), &[SchemeSpec::new(PhaseSolver::Aso)], 11, 3).unwrap();
    let rate = unsafe { cfi_outcome_sum_rate(res) };
    assert_eq!(rate, expect[0].sum_rate);
    assert_eq!(unsafe { cfi_outcome_iterations(res) }, expect[0].iterations);
    assert_eq!(unsafe { cfi_outcome_converged(res) }, expect[0].converged);

    let mut len = 0;
    assert_eq!(unsafe { cfi_outcome_rates(res, ptr::null_mut(), 0, &mut len) }, CfiStatus::Ok);
    assert_eq!(len, expect[0].iterations + 1);
    let mut rates = vec![0.0; len];
    assert_eq!(unsafe { cfi_outcome_rates(res, rates.as_mut_ptr(), len, &mut len) }, CfiStatus::Ok);
    assert!(rates.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));

    let (mut re, mut im) = (vec![0.0; 4], vec![0.0; 4]);
    assert_eq!(unsafe { cfi_outcome_theta(res, re.as_mut_ptr(), im.as_mut_ptr(), 2, &mut len) }, CfiStatus::BufferTooSmall);
    assert_eq!(unsafe { cfi_outcome_theta(res, re.as_mut_ptr(), im.as_mut_ptr(), 4, &mut len) }, CfiStatus::Ok);
    assert!(re.iter().zip(&im).all(|(a, b)| ((a * a + b * b).sqrt() - 1.0).abs() < 1e-12));

    unsafe {
        cfi_outcome_free(res);
        cfi_channels_free(ch);
        cfi_config_free(cfg);
    }
}

#[test]
fn bad_scheme_and_geometry() {
    let cfg = config();
    let mut ch = ptr::null_mut();
    assert_eq!(unsafe { cfi_channels_sample(cfg, cstr("[]").as_ptr(), 0, 0, &mut ch) }, CfiStatus::Config);
    let wrong = cstr(&serde_json::to_string(&Geometry::reference(3, 1, 60.0)).unwrap());
    assert_eq!(unsafe { cfi_channels_sample(cfg, wrong.as_ptr(), 0, 0, &mut ch) }, CfiStatus::InvalidArgument);
    assert_eq!(unsafe { cfi_channels_sample(cfg, geometry().as_ptr(), 0, 0, &mut ch) }, CfiStatus::Ok);
    let mut res = ptr::null_mut();
    let status = unsafe { cfi_joint_optimize(cfg, ch, cstr(r#"{"solver": "GREEDY"}"#).as_ptr(), &mut res) };
    assert_eq!(status, CfiStatus::Config);
    assert!(res.is_null());
    assert_eq!(unsafe { cfi_joint_optimize(ptr::null(), ch, cstr("{}").as_ptr(), &mut res) }, CfiStatus::NullPointer);
    unsafe {
        cfi_channels_free(ch);
        cfi_config_free(cfg);
        cfi_outcome_free(ptr::null_mut());
    }
    assert!(unsafe { cfi_outcome_sum_rate(ptr::null()) }.is_nan());
}

/// `Z = diag(2, 1)`, `ω = (1, 0)`: the optimum puts θ₀ in phase with ω.
fn diagonal_qp() -> *mut CfiQp {
    let z_re = [2.0, 0.0, 0.0, 1.0];
    let z_im = [0.0; 4];
    let (w_re, w_im) = ([1.0, 0.0], [0.0, 0.0]);
    let mut qp = ptr::null_mut();
    let status = unsafe { cfi_qp_new(2, z_re.as_ptr(), z_im.as_ptr(), w_re.as_ptr(), w_im.as_ptr(), &mut qp) };
    assert_eq!(status, CfiStatus::Ok);
    qp
}

#[test]
fn qp_solvers() {
    let qp = diagonal_qp();
    let (mut re, mut im) = ([0.0, 1.0], [1.0, 0.0]);
    let mut start = 0.0;
    assert_eq!(unsafe { cfi_qp_eval(qp, 1.0, re.as_ptr(), im.as_ptr(), &mut start) }, CfiStatus::Ok);
    assert!((start - -3.0).abs() < 1e-12);

    let mut best = 0.0;
    let status = unsafe { cfi_qp_solve_aso(qp, 1.0, 1e-12, 100, re.as_mut_ptr(), im.as_mut_ptr(), &mut best) };
    assert_eq!(status, CfiStatus::Ok);
    assert!((best - -1.0).abs() < 1e-12, "{best}");
    assert!((re[0] - 1.0).abs() < 1e-12 && im[0].abs() < 1e-12);

    let (mut re, mut im) = ([-1.0, 1.0], [0.0, 0.0]);
    let status = unsafe { cfi_qp_solve_discrete(qp, 1.0, 2, 10, re.as_mut_ptr(), im.as_mut_ptr(), &mut best) };
    assert_eq!(status, CfiStatus::Ok);
    assert_eq!(re[0], 1.0);
    assert!((best - -1.0).abs() < 1e-12);

    let (mut re, mut im) = ([0.0, 1.0], [1.0, 0.0]);
    let status = unsafe { cfi_qp_solve_discrete(qp, 1.0, 2, 10, re.as_mut_ptr(), im.as_mut_ptr(), &mut best) };
    assert_eq!(status, CfiStatus::InvalidArgument);
    assert!(last_error().contains("grid"));
    let status = unsafe { cfi_qp_eval(qp, 1.0, [0.5, 1.0].as_ptr(), [0.0, 0.0].as_ptr(), &mut best) };
    assert_eq!(status, CfiStatus::InvalidArgument);
    unsafe { cfi_qp_free(qp) };
}

#[test]
fn qp_rejects_non_hermitian() {
    let z_re = [1.0, 2.0, 0.0, 1.0];
    let mut qp = ptr::null_mut();
    let zeros = [0.0; 4];
    let status = unsafe { cfi_qp_new(2, z_re.as_ptr(), zeros.as_ptr(), zeros.as_ptr(), zeros.as_ptr(), &mut qp) };
    assert_eq!(status, CfiStatus::InvalidArgument);
    assert!(qp.is_null());
    assert_eq!(unsafe { cfi_qp_new(0, ptr::null(), ptr::null(), ptr::null(), ptr::null(), &mut qp) }, CfiStatus::InvalidArgument);
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/cellfree_irs.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["cfi_last_error", "cfi_qp_solve_aso", "cfi_joint_optimize", "CFI_STATUS_BUFFER_TOO_SMALL"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", header]).output() else {
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
