//! C ABI over `cellfree-irs`.
//!
//! Objects cross the boundary as opaque handles created by `cfi_*_new` style
//! constructors and released by the matching `cfi_*_free`. Every fallible
//! call returns a [`CfiStatus`]; on failure the message is available from
//! [`cfi_last_error`] on the same thread. Complex vectors are passed as
//! separate real and imaginary arrays, matrices in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cellfree_irs::channel::{ChannelSet, Geometry};
use cellfree_irs::irs::{aso_solve, discrete_sweep, eval_f7, CmcQpData};
use cellfree_irs::linalg::{CMat, CVec, C64};
use cellfree_irs::model::{PhaseVector, SystemConfig};
use cellfree_irs::pipeline::{joint_optimize, sample_realization, JointOutcome, SchemeSpec};
use cellfree_irs::seeds::child_rng;
use cellfree_irs::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfiStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad dimensions or values outside an operation's domain.
    InvalidArgument = 2,
    /// Malformed JSON or an inconsistent configuration.
    Config = 3,
    Numerical = 4,
    /// Output buffer shorter than the result.
    BufferTooSmall = 5,
    Panic = 6,
}

/// Validated system configuration.
pub struct CfiConfig(SystemConfig);

/// One channel realization together with the seed it was drawn from.
pub struct CfiChannels {
    channels: ChannelSet,
    master: u64,
    seed: u64,
}

/// Result of a joint optimization.
pub struct CfiOutcome(JointOutcome);

/// Constant-modulus QP `max −θᴴZθ + 2Re(θᴴω)`.
pub struct CfiQp(CmcQpData);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("no interior nul"));
}

struct Failure(CfiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) | Error::Structural(_) => CfiStatus::InvalidArgument,
            Error::Numerical(_) => CfiStatus::Numerical,
            _ => CfiStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: CfiStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CfiStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            CfiStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CfiStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(CfiStatus::NullPointer, format!("{name} is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(CfiStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(CfiStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(CfiStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(CfiStatus::NullPointer, "output handle pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn parse<T: serde::de::DeserializeOwned>(json: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(json).map_err(|e| fail(CfiStatus::Config, format!("invalid {what}: {e}")))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn cfi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn cfi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON configuration; omitted fields take their defaults, so `"{}"`
/// is the reference scenario.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cfi_config_from_json(json: *const c_char, out: *mut *mut CfiConfig) -> CfiStatus {
    guard(|| {
        let cfg: SystemConfig = parse(text(json, "json")?, "configuration")?;
        cfg.validate()?;
        put(out, CfiConfig(cfg))
    })
}

/// # Safety
/// `cfg` must be null or a handle from [`cfi_config_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfi_config_free(cfg: *mut CfiConfig) {
    free(cfg)
}

/// Draws the channel realization `seed` of the stream `master` for the
/// geometry template given as JSON.
///
/// # Safety
/// `cfg` must be a live handle, `geometry_json` a nul-terminated string and
/// `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cfi_channels_sample(
    cfg: *const CfiConfig,
    geometry_json: *const c_char,
    master: u64,
    seed: u64,
    out: *mut *mut CfiChannels,
) -> CfiStatus {
    guard(|| {
        let cfg = &get(cfg, "cfg")?.0;
        let geometry: Geometry = parse(text(geometry_json, "geometry_json")?, "geometry")?;
        let channels = sample_realization(cfg, &geometry, master, seed)?;
        put(out, CfiChannels { channels, master, seed })
    })
}

/// # Safety
/// `ch` must be null or a live channel handle.
#[no_mangle]
pub unsafe extern "C" fn cfi_channels_free(ch: *mut CfiChannels) {
    free(ch)
}

/// Runs the alternating optimizer with the scheme given as JSON, for
/// example `{"solver": "ASO"}` or `{"solver": "DISCRETE", "levels": 4}`.
/// Randomness is derived from the realization's seed, so results match the
/// experiment runner.
///
/// # Safety
/// `cfg` and `ch` must be live handles, `scheme_json` a nul-terminated
/// string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cfi_joint_optimize(
    cfg: *const CfiConfig,
    ch: *const CfiChannels,
    scheme_json: *const c_char,
    out: *mut *mut CfiOutcome,
) -> CfiStatus {
    guard(|| {
        let cfg = &get(cfg, "cfg")?.0;
        let ch = get(ch, "ch")?;
        let scheme: SchemeSpec = parse(text(scheme_json, "scheme_json")?, "scheme")?;
        let mut rng = child_rng(ch.master, ch.seed, &format!("scheme:{}", scheme.init_class()));
        let outcome = joint_optimize(&ch.channels, cfg, &scheme, &mut rng)?;
        put(out, CfiOutcome(outcome))
    })
}

/// Final sum-rate in nats on the true channels; NaN for a null handle.
///
/// # Safety
/// `res` must be null or a live outcome handle.
#[no_mangle]
pub unsafe extern "C" fn cfi_outcome_sum_rate(res: *const CfiOutcome) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.0.sum_rate)
}

/// Outer iterations run; 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live outcome handle.
#[no_mangle]
pub unsafe extern "C" fn cfi_outcome_iterations(res: *const CfiOutcome) -> usize {
    res.as_ref().map_or(0, |r| r.0.trace.iterations())
}

/// # Safety
/// `res` must be null or a live outcome handle.
#[no_mangle]
pub unsafe extern "C" fn cfi_outcome_converged(res: *const CfiOutcome) -> bool {
    res.as_ref().is_some_and(|r| r.0.trace.converged)
}

/// Copies the per-iteration sum-rate trace (nats). `len` receives the trace
/// length; pass `buf = NULL` to query it.
///
/// # Safety
/// `res` must be a live handle, `len` writable, and `buf` null or valid for
/// `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn cfi_outcome_rates(res: *const CfiOutcome, buf: *mut f64, cap: usize, len: *mut usize) -> CfiStatus {
    guard(|| {
        let rates = &get(res, "res")?.0.trace.rates;
        copy_out(rates.iter().copied(), rates.len(), buf, cap, len)
    })
}

/// Copies the reflection coefficients into `re`/`im`. `len` receives the
/// element count; pass null buffers to query it.
///
/// # Safety
/// `res` must be a live handle, `len` writable, and `re`/`im` null or valid
/// for `cap` doubles each.
#[no_mangle]
pub unsafe extern "C" fn cfi_outcome_theta(
    res: *const CfiOutcome,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    len: *mut usize,
) -> CfiStatus {
    guard(|| {
        let theta = &get(res, "res")?.0.theta.theta;
        copy_out(theta.iter().map(|z| z.re), theta.len(), re, cap, len)?;
        copy_out(theta.iter().map(|z| z.im), theta.len(), im, cap, len)
    })
}

unsafe fn copy_out(values: impl Iterator<Item = f64>, n: usize, buf: *mut f64, cap: usize, len: *mut usize) -> Result<(), Failure> {
    if len.is_null() {
        return Err(fail(CfiStatus::NullPointer, "len is null"));
    }
    *len = n;
    if buf.is_null() {
        return Ok(());
    }
    if cap < n {
        return Err(fail(CfiStatus::BufferTooSmall, format!("buffer holds {cap} values, need {n}")));
    }
    for (i, v) in values.enumerate() {
        *buf.add(i) = v;
    }
    Ok(())
}

/// # Safety
/// `res` must be null or a live outcome handle.
#[no_mangle]
pub unsafe extern "C" fn cfi_outcome_free(res: *mut CfiOutcome) {
    free(res)
}

/// Builds a QP from a Hermitian `n × n` matrix `Z` (row-major) and a vector
/// `ω` of length `n`.
///
/// # Safety
/// `z_re`/`z_im` must be valid for `n·n` doubles, `w_re`/`w_im` for `n`,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_qp_new(
    n: usize,
    z_re: *const f64,
    z_im: *const f64,
    w_re: *const f64,
    w_im: *const f64,
    out: *mut *mut CfiQp,
) -> CfiStatus {
    guard(|| {
        if n == 0 {
            return Err(fail(CfiStatus::InvalidArgument, "n must be at least 1"));
        }
        let nn = n.checked_mul(n).ok_or_else(|| fail(CfiStatus::InvalidArgument, "n is too large"))?;
        let (zr, zi) = (slice(z_re, nn, "z_re")?, slice(z_im, nn, "z_im")?);
        let (wr, wi) = (slice(w_re, n, "w_re")?, slice(w_im, n, "w_im")?);
        if zr.iter().chain(zi).chain(wr).chain(wi).any(|v| !v.is_finite()) {
            return Err(fail(CfiStatus::InvalidArgument, "QP data must be finite"));
        }
        let zcal = CMat::from_fn(n, n, |i, j| C64::new(zr[i * n + j], zi[i * n + j]));
        let skew = (&zcal - zcal.adjoint()).norm();
        if skew > 1e-10 * zcal.norm().max(1.0) {
            return Err(fail(CfiStatus::InvalidArgument, format!("Z is not Hermitian (‖Z − Zᴴ‖ = {skew:.3e})")));
        }
        let omega = CVec::from_fn(n, |i, _| C64::new(wr[i], wi[i]));
        let empty = CMat::zeros(0, 0);
        put(out, CfiQp(CmcQpData { zcal, omega, z: empty.clone(), q: empty.clone(), a: empty.clone(), e: empty }))
    })
}

/// # Safety
/// `qp` must be null or a live QP handle.
#[no_mangle]
pub unsafe extern "C" fn cfi_qp_free(qp: *mut CfiQp) {
    free(qp)
}

unsafe fn read_theta(qp: &CfiQp, alpha: f64, re: *const f64, im: *const f64) -> Result<PhaseVector, Failure> {
    let n = qp.0.dim();
    let (re, im) = (slice(re, n, "theta_re")?, slice(im, n, "theta_im")?);
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(fail(CfiStatus::InvalidArgument, format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let theta = PhaseVector { theta: CVec::from_fn(n, |i, _| C64::new(re[i], im[i])), alpha };
    theta.validate(0)?;
    Ok(theta)
}

unsafe fn write_theta(theta: &PhaseVector, re: *mut f64, im: *mut f64) {
    for (i, z) in theta.theta.iter().enumerate() {
        *re.add(i) = z.re;
        *im.add(i) = z.im;
    }
}

/// Evaluates the QP objective at `θ`, which must satisfy `|θ_i| = α`.
///
/// # Safety
/// `qp` must be a live handle, `theta_re`/`theta_im` valid for `n` doubles
/// and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_qp_eval(
    qp: *const CfiQp,
    alpha: f64,
    theta_re: *const f64,
    theta_im: *const f64,
    value: *mut f64,
) -> CfiStatus {
    guard(|| {
        let qp = get(qp, "qp")?;
        let theta = read_theta(qp, alpha, theta_re, theta_im)?;
        if value.is_null() {
            return Err(fail(CfiStatus::NullPointer, "value is null"));
        }
        *value = eval_f7(&theta, &qp.0);
        Ok(())
    })
}

/// Element-wise closed-form ascent from `θ` (updated in place) until the
/// objective changes by at most `eps` between sweeps or `max_sweeps` run.
///
/// # Safety
/// `qp` must be a live handle, `theta_re`/`theta_im` valid for `n` doubles
/// each, and `value` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cfi_qp_solve_aso(
    qp: *const CfiQp,
    alpha: f64,
    eps: f64,
    max_sweeps: usize,
    theta_re: *mut f64,
    theta_im: *mut f64,
    value: *mut f64,
) -> CfiStatus {
    guard(|| {
        let qp = get(qp, "qp")?;
        if eps.is_nan() || eps < 0.0 || max_sweeps == 0 {
            return Err(fail(CfiStatus::InvalidArgument, "eps must be non-negative and max_sweeps positive"));
        }
        let theta = read_theta(qp, alpha, theta_re, theta_im)?;
        let res = aso_solve(&theta, &qp.0, eps, max_sweeps);
        write_theta(&res.theta, theta_re, theta_im);
        if !value.is_null() {
            *value = eval_f7(&res.theta, &qp.0);
        }
        Ok(())
    })
}

/// Coordinate sweeps over the grid `{2πm/levels}` from `θ` (updated in
/// place), which must lie on that grid.
///
/// # Safety
/// As [`cfi_qp_solve_aso`].
#[no_mangle]
pub unsafe extern "C" fn cfi_qp_solve_discrete(
    qp: *const CfiQp,
    alpha: f64,
    levels: u32,
    max_sweeps: usize,
    theta_re: *mut f64,
    theta_im: *mut f64,
    value: *mut f64,
) -> CfiStatus {
    guard(|| {
        let qp = get(qp, "qp")?;
        let theta = read_theta(qp, alpha, theta_re, theta_im)?;
        if levels < 2 || max_sweeps == 0 {
            return Err(fail(CfiStatus::InvalidArgument, "levels must be at least 2 and max_sweeps positive"));
        }
        theta.validate(levels)?;
        let res = discrete_sweep(&theta, &qp.0, levels, max_sweeps)?;
        write_theta(&res.theta, theta_re, theta_im);
        if !value.is_null() {
            *value = eval_f7(&res.theta, &qp.0);
        }
        Ok(())
    })
}
