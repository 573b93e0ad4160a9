//! Element-wise alternating optimization of the reflection coefficients.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{f7_raw, CmcQpData};
use crate::linalg::{c, CVec, C64};
use crate::model::PhaseVector;

#[derive(Debug, Clone)]
pub struct AsoResult {
    pub theta: PhaseVector,
    /// Objective before the first sweep and after every sweep.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// `μ_i = ω_i − Σ_{n≠i} 𝒵_{i,n} θ_n`, given `s = 𝒵θ`.
fn mu(data: &CmcQpData, theta: &CVec, s: &CVec, i: usize) -> C64 {
    data.omega[i] - (s[i] - data.zcal[(i, i)] * theta[i])
}

/// Replaces `θ_i` by its exact maximizer `α e^{j arg μ_i}`.
pub fn aso_coordinate(theta: &PhaseVector, i: usize, data: &CmcQpData) -> PhaseVector {
    let s = &data.zcal * &theta.theta;
    let mut out = theta.clone();
    let m = mu(data, &theta.theta, &s, i);
    if m.norm() > 0.0 {
        out.theta[i] = C64::from_polar(theta.alpha, m.arg());
    }
    out
}

/// One in-place sweep keeping `s = 𝒵θ` current.
fn sweep(theta: &mut PhaseVector, s: &mut CVec, data: &CmcQpData, order: &[usize]) {
    for &i in order {
        let m = mu(data, &theta.theta, s, i);
        if m.norm() == 0.0 {
            continue;
        }
        let new = C64::from_polar(theta.alpha, m.arg());
        let delta = new - theta.theta[i];
        if delta != c(0.0, 0.0) {
            s.axpy(delta, &data.zcal.column(i), c(1.0, 0.0));
            theta.theta[i] = new;
        }
    }
}

fn solve(
    theta0: &PhaseVector,
    data: &CmcQpData,
    eps2: f64,
    max_aso: usize,
    mut order: impl FnMut() -> Vec<usize>,
) -> AsoResult {
    let mut theta = theta0.clone();
    let mut s = &data.zcal * &theta.theta;
    let mut trace = vec![f7_raw(&theta.theta, data)];
    for sweeps in 1..=max_aso {
        sweep(&mut theta, &mut s, data, &order());
        // Refresh to keep the incremental product from drifting.
        s = &data.zcal * &theta.theta;
        let value = f7_raw(&theta.theta, data);
        let prev = *trace.last().unwrap();
        trace.push(value);
        if (value - prev).abs() <= eps2 {
            return AsoResult { theta, trace, sweeps, converged: true };
        }
    }
    AsoResult { theta, trace, sweeps: max_aso, converged: max_aso == 0 }
}

/// Sweeps coordinates in ascending order until the objective changes by at
/// most `eps2` between consecutive sweeps.
pub fn aso_solve(theta0: &PhaseVector, data: &CmcQpData, eps2: f64, max_aso: usize) -> AsoResult {
    let n = data.dim();
    solve(theta0, data, eps2, max_aso, || (0..n).collect())
}

/// As [`aso_solve`] with a fresh random coordinate order per sweep.
pub fn aso_solve_random_order<R: Rng + ?Sized>(
    theta0: &PhaseVector,
    data: &CmcQpData,
    eps2: f64,
    max_aso: usize,
    rng: &mut R,
) -> AsoResult {
    let n = data.dim();
    solve(theta0, data, eps2, max_aso, || {
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(rng);
        v
    })
}
