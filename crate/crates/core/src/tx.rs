//! Power-constrained transmit beamforming.
//!
//! For fixed `(Θ, U, Y)` the beamformers minimize the convex quadratic
//!
//! ```text
//! f5(W) = Σ_i Tr(W_iᴴ A W_i) − 2 Re Σ_i Tr(W_iᴴ c_i),
//! A = Σ_k H_k Y_k Ū_k Y_kᴴ H_kᴴ,   c_i = H_i Y_i Ū_i,
//! ```
//!
//! over stacked `W_i` (L·M_b × M_u) subject to one power budget per BS. The
//! Lagrangian minimizer is `W_i(λ) = (A + Λ)⁻¹ c_i` with
//! `Λ = blockdiag(λ_1 I, …, λ_L I)`, and the multipliers are found by
//! projected sub-gradient ascent on the dual (or per-BS bisection).

use crate::channel::ChannelSet;
use crate::fp::AuxState;
use crate::linalg::{c, frob_sq, hermitian_part, hpd_solve_or_pinv, re_inner, trace, CMat};
use crate::model::{effective_channel, vstack, BeamformerSet, DualStrategy, PhaseVector, SystemConfig};

/// Eigenvalue floor (relative) for the pseudo-inverse used when `A + Λ` is singular.
pub const PINV_FLOOR: f64 = 1e-10;

/// Power-violation tolerance (relative to the budget) for declaring convergence.
pub const POWER_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub tau: Vec<f64>,
    pub iteration: usize,
}

/// The W-subproblem in stacked form.
#[derive(Debug, Clone)]
pub struct TxProblem {
    pub a: CMat,
    pub c: Vec<CMat>,
    pub m_b: usize,
    pub num_bs: usize,
}

impl TxProblem {
    pub fn new(h: &[Vec<CMat>], aux: &AuxState) -> Self {
        let num_bs = h.len();
        let k = aux.y.len();
        let m_b = h[0][0].nrows();
        let stacked: Vec<CMat> = (0..k)
            .map(|kk| vstack(&h.iter().map(|row| &row[kk]).collect::<Vec<_>>()))
            .collect();
        let mut a = CMat::zeros(num_bs * m_b, num_bs * m_b);
        let mut rhs = Vec::with_capacity(k);
        for kk in 0..k {
            let ubar = hermitian_part(&aux.u_bar(kk));
            let y = &aux.y[kk];
            let hy = &stacked[kk] * y;
            a += &hy * &ubar * hy.adjoint();
            rhs.push(hy * ubar);
        }
        Self { a: hermitian_part(&a), c: rhs, m_b, num_bs }
    }

    pub fn from_channels(channels: &ChannelSet, theta: &PhaseVector, aux: &AuxState) -> Self {
        Self::new(&effective_channel(channels, theta), aux)
    }

    /// `W(λ) = (A + Λ)⁻¹ c_i`, with a floored pseudo-inverse when singular.
    pub fn primal(&self, lambda: &[f64]) -> BeamformerSet {
        self.solve(lambda).0
    }

    /// Primal solution together with `(A + Λ)⁻¹`.
    fn solve(&self, lambda: &[f64]) -> (BeamformerSet, CMat) {
        let mut m = self.a.clone();
        for (l, &lam) in lambda.iter().enumerate() {
            for j in 0..self.m_b {
                let idx = l * self.m_b + j;
                m[(idx, idx)] += c(lam, 0.0);
            }
        }
        let inv = hpd_solve_or_pinv(&m, PINV_FLOOR);
        let stacked: Vec<CMat> = self.c.iter().map(|ci| &inv * ci).collect();
        (BeamformerSet::from_stacked(&stacked, self.num_bs, self.m_b), inv)
    }

    /// `∂P_l/∂λ_l = −2 Σ_i Re Tr(W_{l,i}ᴴ [(A+Λ)⁻¹]_{ll} W_{l,i})`.
    fn power_slope(&self, w: &BeamformerSet, inv: &CMat, l: usize) -> f64 {
        let block = inv.view((l * self.m_b, l * self.m_b), (self.m_b, self.m_b)).into_owned();
        -2.0 * w.w[l].iter().map(|wl| trace(&(wl.adjoint() * &block * wl)).re).sum::<f64>()
    }

    pub fn f5(&self, w: &BeamformerSet) -> f64 {
        (0..self.c.len())
            .map(|i| {
                let wi = w.stacked(i);
                trace(&(wi.adjoint() * &self.a * &wi)).re - 2.0 * re_inner(&wi, &self.c[i])
            })
            .sum()
    }

    pub fn lagrangian(&self, w: &BeamformerSet, lambda: &[f64], p_max: &[f64]) -> f64 {
        self.f5(w) + (0..self.num_bs).map(|l| lambda[l] * (w.power(l) - p_max[l])).sum::<f64>()
    }

    /// `λ_l` at which BS `l` alone, ignoring `A`, would exactly spend its budget.
    fn lambda_scale(&self, l: usize, p_max: f64) -> f64 {
        let energy: f64 = self.c.iter().map(|ci| frob_sq(&ci.rows(l * self.m_b, self.m_b).into_owned())).sum();
        (energy / p_max).sqrt().max(f64::MIN_POSITIVE)
    }
}

/// `f5` evaluated from channels and auxiliaries.
pub fn eval_f5(w: &BeamformerSet, theta: &PhaseVector, aux: &AuxState, channels: &ChannelSet) -> f64 {
    TxProblem::from_channels(channels, theta, aux).f5(w)
}

pub fn primal_w(state: &DualState, h: &[Vec<CMat>], aux: &AuxState) -> BeamformerSet {
    TxProblem::new(h, aux).primal(&state.lambda)
}

/// Projected sub-gradient step `λ_l ← [λ_l + τ_l (P_l − P_max,l)]⁺`.
pub fn dual_step(state: &DualState, w: &BeamformerSet, p_max: &[f64]) -> DualState {
    let lambda = state
        .lambda
        .iter()
        .enumerate()
        .map(|(l, &lam)| (lam + state.tau[l] * (w.power(l) - p_max[l])).max(0.0))
        .collect();
    DualState { lambda, tau: state.tau.clone(), iteration: state.iteration + 1 }
}

#[derive(Debug, Clone)]
pub struct TxOutcome {
    pub w: BeamformerSet,
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the W-subproblem for the given effective channels.
pub fn optimize_w_from_h(
    h: &[Vec<CMat>],
    aux: &AuxState,
    cfg: &SystemConfig,
    warm_lambda: Option<&[f64]>,
) -> TxOutcome {
    let problem = TxProblem::new(h, aux);
    let p_max = cfg.p_max_all();
    let mut out = match cfg.dual_strategy {
        DualStrategy::Subgradient => subgradient(&problem, &p_max, cfg, warm_lambda),
        DualStrategy::Bisection => bisection(&problem, &p_max, cfg),
    };
    out.w.clamp_power(&p_max);
    if !out.converged {
        log::debug!("dual iteration did not converge within {} steps", cfg.max_dual);
    }
    out
}

pub fn optimize_w(channels: &ChannelSet, theta: &PhaseVector, aux: &AuxState, cfg: &SystemConfig) -> TxOutcome {
    optimize_w_from_h(&effective_channel(channels, theta), aux, cfg, None)
}

fn subgradient(problem: &TxProblem, p_max: &[f64], cfg: &SystemConfig, warm: Option<&[f64]>) -> TxOutcome {
    let nb = problem.num_bs;
    let scales: Vec<f64> = (0..nb).map(|l| problem.lambda_scale(l, p_max[l])).collect();
    let fixed: Vec<Option<f64>> = (0..nb).map(|l| cfg.tau(l)).collect();

    // Inactive constraints: the unconstrained minimizer is already feasible.
    let w0 = problem.primal(&vec![0.0; nb]);
    if (0..nb).all(|l| w0.power(l) <= p_max[l] * (1.0 + POWER_TOL)) {
        return TxOutcome { w: w0, lambda: vec![0.0; nb], iterations: 1, converged: true };
    }

    let lambda = match warm {
        Some(lam) if lam.len() == nb && lam.iter().any(|&x| x > 0.0) => lam.to_vec(),
        _ => scales.clone(),
    };
    let mut state = DualState { lambda, tau: vec![0.0; nb], iteration: 0 };
    let mut damping = vec![1.0; nb];
    let mut prev_sign = vec![0i8; nb];

    loop {
        let (w, inv) = problem.solve(&state.lambda);
        if state.iteration >= cfg.max_dual {
            return TxOutcome { w, lambda: state.lambda, iterations: state.iteration, converged: false };
        }
        let viol: Vec<f64> = (0..nb).map(|l| w.power(l) - p_max[l]).collect();
        for l in 0..nb {
            let sign = if viol[l] > 0.0 { 1 } else if viol[l] < 0.0 { -1 } else { 0 };
            if sign != 0 && prev_sign[l] != 0 && sign != prev_sign[l] {
                damping[l] *= 0.5;
            }
            prev_sign[l] = sign;
            state.tau[l] = match fixed[l] {
                Some(t) => t * damping[l],
                None => damping[l] * newton_step(w.power(l), p_max[l], problem.power_slope(&w, &inv, l)),
            };
        }
        let next = dual_step(&state, &w, p_max);
        let done = (0..nb).all(|l| {
            let (old, new) = (state.lambda[l], next.lambda[l]);
            if new == 0.0 {
                viol[l] <= POWER_TOL * p_max[l] && (new - old).abs() < cfg.eps1 * scales[l]
            } else {
                (new - old).abs() / new < cfg.eps1 && viol[l].abs() <= POWER_TOL * p_max[l]
            }
        });
        if done {
            let w = problem.primal(&next.lambda);
            return TxOutcome { w, lambda: next.lambda, iterations: next.iteration, converged: true };
        }
        state = next;
    }
}

/// Step size that makes `λ + τ (P − P_max)` a Newton step on `P^{-1/2}`,
/// which is close to affine in `λ`.
fn newton_step(power: f64, p_max: f64, slope: f64) -> f64 {
    let gap = power - p_max;
    if gap == 0.0 || slope >= 0.0 || power <= 0.0 {
        return 0.0;
    }
    2.0 * power * ((power / p_max).sqrt() - 1.0) / (-slope * gap)
}

fn bisection(problem: &TxProblem, p_max: &[f64], cfg: &SystemConfig) -> TxOutcome {
    let nb = problem.num_bs;
    let mut lambda = vec![0.0; nb];
    let mut evals = 0usize;
    let mut converged = false;
    for _sweep in 0..cfg.max_dual.max(1) {
        let before = lambda.clone();
        for l in 0..nb {
            let power_at = |lam: f64, lambda: &mut Vec<f64>, evals: &mut usize| {
                lambda[l] = lam;
                *evals += 1;
                problem.primal(lambda).power(l)
            };
            if power_at(0.0, &mut lambda, &mut evals) <= p_max[l] {
                continue;
            }
            let mut hi = problem.lambda_scale(l, p_max[l]);
            while power_at(hi, &mut lambda, &mut evals) > p_max[l] {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            while (hi - lo) > cfg.eps1 * 1e-3 * hi {
                let mid = 0.5 * (lo + hi);
                if power_at(mid, &mut lambda, &mut evals) > p_max[l] {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lambda[l] = hi;
        }
        let stable = lambda
            .iter()
            .zip(&before)
            .all(|(n, o)| if *n == 0.0 { *o == 0.0 } else { (n - o).abs() / n < cfg.eps1 });
        if stable {
            converged = true;
            break;
        }
    }
    TxOutcome { w: problem.primal(&lambda), lambda, iterations: evals, converged }
}
