//! Semidefinite relaxation with Gaussian randomization.
//!
//! With `θ̂ = [θ; t]`, `|t| = α`, the lifted matrix
//! `Z̄ = [[−𝒵, ω/α], [ωᴴ/α, 0]]` gives `θ̂ᴴ Z̄ θ̂ = f7(θ t̄/α)`. Shifting by
//! the smallest eigenvalue, `Ẑ = Z̄ − λ_min(Z̄) I`, is PSD and leaves the
//! maximizer unchanged because `θ̂ᴴθ̂` is fixed. The relaxation
//! `max Tr(ẐV) s.t. V_ii = α², V ⪰ 0` is solved by ADMM.

use rand::Rng;

use super::{f7_raw, CmcQpData};
use crate::channel::complex_gaussian;
use crate::linalg::{eigh, identity, project_psd, trace, CMat, CVec, C64};
use crate::model::PhaseVector;

pub const ADMM_TOL: f64 = 1e-6;
pub const ADMM_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone)]
pub struct SdrResult {
    pub theta: PhaseVector,
    pub v: CMat,
    /// `Tr(ẐV)` at the relaxed solution.
    pub sdp_value: f64,
    /// Certified upper bound on the relaxation optimum from a feasible dual
    /// point `Diag(y) ⪰ Ẑ`.
    pub sdp_bound: f64,
    /// `θ̂ᴴẐθ̂` for the rounded solution.
    pub rounded_value: f64,
    pub admm_iterations: usize,
    pub admm_converged: bool,
}

/// `Ẑ` for the given data and modulus.
pub fn lifted_matrix(data: &CmcQpData, alpha: f64) -> CMat {
    let n = data.dim();
    let mut zbar = CMat::zeros(n + 1, n + 1);
    zbar.view_mut((0, 0), (n, n)).copy_from(&(-&data.zcal));
    for i in 0..n {
        zbar[(i, n)] = data.omega[i] / alpha;
        zbar[(n, i)] = data.omega[i].conj() / alpha;
    }
    let lmin = eigh(&zbar).0.first().copied().unwrap_or(0.0);
    zbar - identity(n + 1) * C64::new(lmin, 0.0)
}

struct Admm {
    v: CMat,
    /// Diagonal dual multipliers, in the units of `Ẑ`.
    y: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// ADMM on `max Tr(ẐV)` with `diag V = α²` and `V ⪰ 0`, in units where
/// `‖Ẑ‖ = 1` and `α = 1`. Returns the PSD iterate and the diagonal
/// multipliers `y = diag(Ẑ − ρΛ)`.
fn admm(zhat: &CMat, alpha: f64) -> Admm {
    let dim = zhat.nrows();
    let scale = zhat.norm().max(f64::MIN_POSITIVE);
    let c = zhat * C64::new(1.0 / scale, 0.0);
    let mut rho = 1.0;
    let mut x = identity(dim);
    let mut lam = CMat::zeros(dim, dim);
    let tol = ADMM_TOL * (dim as f64).sqrt();
    for it in 1..=ADMM_MAX_ITER {
        let mut v = &x - &lam + &c * C64::new(1.0 / rho, 0.0);
        for i in 0..dim {
            v[(i, i)] = C64::new(1.0, 0.0);
        }
        let x_prev = x;
        x = project_psd(&(&v + &lam));
        let primal = &v - &x;
        lam += &primal;
        let r = primal.norm();
        let s = rho * (&x - &x_prev).norm();
        if r <= tol && s <= tol {
            return finish(x, &c, &lam, rho, scale, alpha, it, true);
        }
        // Residual balancing; the scaled dual rescales with ρ.
        if r > 10.0 * s {
            rho *= 2.0;
            lam *= C64::new(0.5, 0.0);
        } else if s > 10.0 * r {
            rho *= 0.5;
            lam *= C64::new(2.0, 0.0);
        }
    }
    finish(x, &c, &lam, rho, scale, alpha, ADMM_MAX_ITER, false)
}

#[allow(clippy::too_many_arguments)]
fn finish(x: CMat, c: &CMat, lam: &CMat, rho: f64, scale: f64, alpha: f64, iterations: usize, converged: bool) -> Admm {
    let y = (0..c.nrows()).map(|i| (c[(i, i)] - lam[(i, i)] * C64::new(rho, 0.0)).re * scale).collect();
    Admm { v: x * C64::new(alpha * alpha, 0.0), y, iterations, converged }
}

/// `α² (Σ y_i + dim · λ_max⁺(Ẑ − Diag y))`: weak duality with `y` shifted
/// until `Diag(y) ⪰ Ẑ`.
fn dual_bound(zhat: &CMat, y: &[f64], alpha: f64) -> f64 {
    let dim = zhat.nrows();
    let mut gap = zhat.clone();
    for (i, yi) in y.iter().enumerate() {
        gap[(i, i)] -= C64::new(*yi, 0.0);
    }
    let shift = eigh(&gap).0.last().copied().unwrap_or(0.0).max(0.0);
    // Absorb eigensolver rounding so the bound stays valid.
    let slack = 1e-12 * zhat.norm();
    alpha * alpha * (y.iter().sum::<f64>() + dim as f64 * (shift + slack))
}

fn round(varpi: &CVec, alpha: f64, fallback: &CVec) -> CVec {
    let n = varpi.len() - 1;
    let last = varpi[n];
    (0..n)
        .map(|i| {
            let r = varpi[i] * last.conj();
            if r.norm() > 0.0 {
                C64::from_polar(alpha, r.arg())
            } else {
                fallback[i]
            }
        })
        .collect::<Vec<_>>()
        .into()
}

fn lift(theta: &CVec, alpha: f64) -> CVec {
    let mut out = CVec::zeros(theta.len() + 1);
    out.rows_mut(0, theta.len()).copy_from(theta);
    out[theta.len()] = C64::new(alpha, 0.0);
    out
}

/// Solves the relaxation and rounds it with `n_randomizations` Gaussian
/// draws `ϖ = U Σ^{1/2} ζ`. Each draw is rounded to the modulus constraint
/// and the candidate with the largest `θ̂ᴴẐθ̂` is kept; the principal
/// eigenvector of `V` is always a candidate.
pub fn sdr_solve<R: Rng + ?Sized>(data: &CmcQpData, alpha: f64, n_randomizations: usize, rng: &mut R) -> SdrResult {
    let n = data.dim();
    let zhat = lifted_matrix(data, alpha);
    let Admm { v, y, iterations: admm_iterations, converged: admm_converged } = admm(&zhat, alpha);
    let sdp_bound = dual_bound(&zhat, &y, alpha);
    if !admm_converged {
        log::warn!("SDR relaxation did not converge; rounding the principal eigenvector");
    }
    let (values, vectors) = eigh(&v);
    let root = CMat::from_fn(n + 1, n + 1, |i, j| vectors[(i, j)] * values[j].max(0.0).sqrt());
    let zeros = CVec::from_element(n, C64::new(alpha, 0.0));
    let score = |theta: &CVec| {
        let t = lift(theta, alpha);
        t.dotc(&(&zhat * &t)).re
    };

    let principal = vectors.column(n).into_owned();
    let mut best = round(&principal, alpha, &zeros);
    let mut best_score = score(&best);
    if admm_converged {
        for _ in 0..n_randomizations {
            let zeta = complex_gaussian(n + 1, 1, rng).column(0).into_owned();
            let cand = round(&(&root * zeta), alpha, &zeros);
            let s = score(&cand);
            if s > best_score {
                best = cand;
                best_score = s;
            }
        }
    }
    debug_assert!((best_score - (f7_raw(&best, data) + shift(&zhat, data, alpha))).abs() <= 1e-6 * best_score.abs().max(1.0));
    SdrResult {
        theta: PhaseVector { theta: best, alpha },
        sdp_value: trace(&(&zhat * &v)).re,
        sdp_bound,
        rounded_value: best_score,
        v,
        admm_iterations,
        admm_converged,
    }
}

/// `θ̂ᴴẐθ̂ − f7(θ)`, the same for every feasible `θ`.
fn shift(zhat: &CMat, data: &CmcQpData, alpha: f64) -> f64 {
    let n = data.dim();
    let probe = CVec::from_element(n, C64::new(alpha, 0.0));
    let t = lift(&probe, alpha);
    t.dotc(&(zhat * &t)).re - f7_raw(&probe, data)
}
