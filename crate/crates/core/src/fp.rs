//! Fractional-programming surrogates of the sum-rate.
//!
//! With auxiliary matrices `U_k` (Lagrangian-dual transform) and `Y_k`
//! (quadratic transform), `Ū_k = I + U_k` and `B_{k,i} = Σ_l H_{l,k}ᴴ W_{l,i}`:
//!
//! ```text
//! f1 = Σ log|Ū_k| − Σ Tr U_k + Σ Tr(Ū_k B_kkᴴ V̄_k⁻¹ B_kk)
//! f3 = Σ log|Ū_k| − Σ Tr U_k + f4
//! f4 = Σ 2 Re Tr(Ū_k Y_kᴴ B_kk) − Σ Tr(Ū_k Y_kᴴ (Σ_i B_ki B_kiᴴ + σ²I) Y_k)
//! ```
//!
//! `U_k = Γ_k` maximizes f1/f3 over `U`, and `Y_k = V̄_k⁻¹ B_kk` (the MMSE
//! receive filter) maximizes f3/f4 over `Y`; at both, f3 equals the sum-rate.

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{c, hpd_inverse, identity, logdet_general, trace, CMat};
use crate::model::{covariances, effective_channel, link_gains, BeamformerSet, PhaseVector};

/// Auxiliary matrices, one M_u × M_u pair per UE.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxState {
    pub u: Vec<CMat>,
    pub y: Vec<CMat>,
}

impl AuxState {
    pub fn zeros(k: usize, m_u: usize) -> Self {
        Self { u: vec![CMat::zeros(m_u, m_u); k], y: vec![CMat::zeros(m_u, m_u); k] }
    }

    /// `Ū_k = I + U_k`.
    pub fn u_bar(&self, k: usize) -> CMat {
        &self.u[k] + identity(self.u[k].nrows())
    }
}

pub fn update_u(gamma: &[CMat]) -> Vec<CMat> {
    gamma.to_vec()
}

/// MMSE receive filters `Y_k = V̄_k⁻¹ Σ_l H_{l,k}ᴴ W_{l,k}`.
pub fn update_y(h: &[Vec<CMat>], w: &BeamformerSet, sigma2: f64) -> Result<Vec<CMat>> {
    let gains = link_gains(h, w);
    covariances(&gains, sigma2)
        .into_iter()
        .enumerate()
        .map(|(k, (_, vbar))| {
            let inv = hpd_inverse(&vbar, 1e-14).ok_or_else(|| Error::Numerical("V̄_k is not positive definite".into()))?;
            Ok(inv * &gains[k][k])
        })
        .collect()
}

/// `Σ log|Ū_k| − Σ Tr U_k`.
pub fn const_u(u: &[CMat]) -> Result<f64> {
    let mut total = 0.0;
    for uk in u {
        let ubar = uk + identity(uk.nrows());
        let d = ubar.clone().determinant();
        if d.norm() <= 1e-12 {
            return Err(Error::Numerical("I + U_k is singular".into()));
        }
        total += logdet_general(&ubar).re - trace(uk).re;
    }
    Ok(total)
}

/// f4 from precomputed effective channels.
pub fn f4_from_h(h: &[Vec<CMat>], w: &BeamformerSet, aux: &AuxState, sigma2: f64) -> f64 {
    let gains = link_gains(h, w);
    let mut total = 0.0;
    for (k, row) in gains.iter().enumerate() {
        let ubar = aux.u_bar(k);
        let y = &aux.y[k];
        let m_u = y.nrows();
        let mut cov = identity(m_u) * c(sigma2, 0.0);
        for b in row {
            cov += b * b.adjoint();
        }
        let linear = trace(&(&ubar * y.adjoint() * &row[k])).re;
        let quad = trace(&(&ubar * y.adjoint() * cov * y)).re;
        total += 2.0 * linear - quad;
    }
    total
}

pub fn eval_f4(w: &BeamformerSet, theta: &PhaseVector, aux: &AuxState, channels: &ChannelSet, sigma2: f64) -> f64 {
    f4_from_h(&effective_channel(channels, theta), w, aux, sigma2)
}

pub fn f3_from_h(h: &[Vec<CMat>], w: &BeamformerSet, aux: &AuxState, sigma2: f64) -> Result<f64> {
    Ok(const_u(&aux.u)? + f4_from_h(h, w, aux, sigma2))
}

pub fn eval_f3(
    w: &BeamformerSet,
    theta: &PhaseVector,
    aux: &AuxState,
    channels: &ChannelSet,
    sigma2: f64,
) -> Result<f64> {
    f3_from_h(&effective_channel(channels, theta), w, aux, sigma2)
}

/// Lagrangian-dual transform objective f1 (no `Y`).
pub fn f1_from_h(h: &[Vec<CMat>], w: &BeamformerSet, u: &[CMat], sigma2: f64) -> Result<f64> {
    let gains = link_gains(h, w);
    let mut total = const_u(u)?;
    for (k, (_, vbar)) in covariances(&gains, sigma2).into_iter().enumerate() {
        let inv = hpd_inverse(&vbar, 1e-14).ok_or_else(|| Error::Numerical("V̄_k is not positive definite".into()))?;
        let b = &gains[k][k];
        let ubar = &u[k] + identity(u[k].nrows());
        total += trace(&(ubar * b.adjoint() * inv * b)).re;
    }
    Ok(total)
}
