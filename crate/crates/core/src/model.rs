//! Scenario configuration, beamformer and phase containers, channel stacking
//! and exact sum-rate evaluation.
//!
//! All BSs transmit every UE's symbols coherently, so the signal reaching UE
//! `k` through beamformers `W_{·,i}` is `B_{k,i} = Σ_l H_{l,k}ᴴ W_{l,i}`. The
//! SINR matrix is kept in stream space, `Γ_k = B_{k,k}ᴴ V_k⁻¹ B_{k,k}`, which is
//! Hermitian and has the same `det(I + Γ_k)` as the antenna-space product
//! `B_{k,k} B_{k,k}ᴴ V_k⁻¹`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{domain, structural, Error, Result};
use crate::linalg::{c, cis, frob_sq, hpd_inverse, identity, logdet_hpd, CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DualStrategy {
    /// Projected sub-gradient ascent on the dual variables.
    #[default]
    Subgradient,
    /// Bisection on each BS's power violation, cycling over BSs.
    Bisection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    /// Number of BSs.
    pub l: usize,
    /// Number of UEs.
    pub k: usize,
    /// Number of IRSs; 0 is the "without IRS" system.
    pub r: usize,
    pub m_b: usize,
    pub m_u: usize,
    /// Elements per IRS, `n = n_h · n_v`.
    pub n: usize,
    pub n_h: usize,
    pub n_v: usize,
    /// Reflecting efficiency, the modulus of every IRS coefficient.
    pub alpha: f64,
    /// Per-BS power budget in watts; a single entry applies to every BS.
    pub p_max: Vec<f64>,
    pub sigma2: f64,
    pub beta_g: f64,
    pub beta_s: f64,
    pub c0: f64,
    pub pathloss_direct: f64,
    pub pathloss_irs: f64,
    /// Discrete phase-set size, 0 for continuous phases.
    pub discrete_levels: u32,
    /// Dual-variable relative convergence threshold.
    pub eps1: f64,
    /// ASO objective change threshold.
    pub eps2: f64,
    /// Outer relative sum-rate change threshold.
    pub eps3: f64,
    /// Dual step sizes; empty (or non-positive entries) selects the automatic
    /// step scaled to each BS's problem.
    pub tau: Vec<f64>,
    pub max_outer: usize,
    pub max_dual: usize,
    pub max_aso: usize,
    pub dual_strategy: DualStrategy,
    /// Visit ASO coordinates in a random order instead of ascending index.
    pub aso_random_order: bool,
    pub sdr_randomizations: usize,
    pub qcr_max_iter: usize,
    pub qcr_tol: f64,
}

impl Default for SystemConfig {
    /// Reference scenario: six BSs, four UEs, three 60-element IRSs.
    fn default() -> Self {
        Self {
            l: 6,
            k: 4,
            r: 3,
            m_b: 4,
            m_u: 2,
            n: 60,
            n_h: 10,
            n_v: 6,
            alpha: 1.0,
            p_max: vec![0.1],
            sigma2: 1e-11,
            beta_g: 10f64.powf(0.3),
            beta_s: 10f64.powf(0.3),
            c0: 1e-3,
            pathloss_direct: 3.75,
            pathloss_irs: 2.2,
            discrete_levels: 0,
            eps1: 1e-6,
            eps2: 1e-8,
            eps3: 1e-4,
            tau: Vec::new(),
            max_outer: 50,
            max_dual: 2000,
            max_aso: 200,
            dual_strategy: DualStrategy::Subgradient,
            aso_random_order: false,
            sdr_randomizations: 200,
            qcr_max_iter: 5000,
            qcr_tol: 1e-10,
        }
    }
}

impl SystemConfig {
    /// Reference physical parameters with the given dimensions (`n = n_v·n_h`).
    pub fn small(l: usize, k: usize, r: usize, m_b: usize, m_u: usize, n_v: usize, n_h: usize) -> Self {
        Self { l, k, r, m_b, m_u, n: n_v * n_h, n_v, n_h, ..Self::default() }
    }

    /// Unit-scale configuration: unit noise and power, no path loss.
    pub fn unit(l: usize, k: usize, r: usize, m_b: usize, m_u: usize, n: usize) -> Self {
        Self {
            p_max: vec![1.0],
            sigma2: 1.0,
            c0: 1.0,
            pathloss_direct: 0.0,
            pathloss_irs: 0.0,
            ..Self::small(l, k, r, m_b, m_u, 1, n)
        }
    }

    /// Total number of IRS elements, `R·N`.
    pub fn n_total(&self) -> usize {
        self.r * self.n
    }

    pub fn p_max(&self, l: usize) -> f64 {
        if self.p_max.len() == 1 {
            self.p_max[0]
        } else {
            self.p_max[l]
        }
    }

    pub fn p_max_all(&self) -> Vec<f64> {
        (0..self.l).map(|l| self.p_max(l)).collect()
    }

    /// Configured dual step for BS `l`, if one is set.
    pub fn tau(&self, l: usize) -> Option<f64> {
        let t = match self.tau.len() {
            0 => return None,
            1 => self.tau[0],
            _ => *self.tau.get(l)?,
        };
        (t > 0.0).then_some(t)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.l == 0 || self.k == 0 || self.m_b == 0 || self.m_u == 0 {
            return err("L, K, M_b and M_u must be at least 1".into());
        }
        if self.n == 0 || self.n_h == 0 || self.n_v == 0 {
            return err("N, N_h and N_v must be at least 1".into());
        }
        if self.n != self.n_h * self.n_v {
            return err(format!("N = {} must equal N_h·N_v = {}·{}", self.n, self.n_h, self.n_v));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return err(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if self.p_max.len() != 1 && self.p_max.len() != self.l {
            return err(format!("p_max must have 1 or L = {} entries", self.l));
        }
        if self.p_max.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return err("p_max entries must be positive".into());
        }
        if !(self.sigma2 > 0.0) {
            return err("sigma2 must be positive".into());
        }
        if !(self.beta_g >= 0.0 && self.beta_s >= 0.0) {
            return err("Rician factors must be non-negative".into());
        }
        if !(self.c0 > 0.0) || !(self.pathloss_direct >= 0.0) || !(self.pathloss_irs >= 0.0) {
            return err("path-loss parameters must be positive (c0) and non-negative (exponents)".into());
        }
        if self.discrete_levels == 1 {
            return err("discrete_levels must be 0 (continuous) or at least 2".into());
        }
        if self.tau.len() > 1 && self.tau.len() != self.l {
            return err(format!("tau must have 0, 1 or L = {} entries", self.l));
        }
        if self.max_outer == 0 || self.max_dual == 0 || self.max_aso == 0 {
            return err("iteration caps must be at least 1".into());
        }
        Ok(())
    }
}

/// Active beamformers `w[l][k]`, each M_b × M_u.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<Vec<CMat>>,
}

impl BeamformerSet {
    pub fn zeros(l: usize, k: usize, m_b: usize, m_u: usize) -> Self {
        Self { w: vec![vec![CMat::zeros(m_b, m_u); k]; l] }
    }

    pub fn num_bs(&self) -> usize {
        self.w.len()
    }

    pub fn num_ue(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    /// Σ_k ‖W_{l,k}‖_F².
    pub fn power(&self, l: usize) -> f64 {
        self.w[l].iter().map(frob_sq).sum()
    }

    pub fn powers(&self) -> Vec<f64> {
        (0..self.num_bs()).map(|l| self.power(l)).collect()
    }

    pub fn is_feasible(&self, p_max: &[f64], tol: f64) -> bool {
        self.powers().iter().zip(p_max).all(|(p, m)| *p <= m + tol)
    }

    /// Scales each BS down onto its budget if it exceeds it.
    pub fn clamp_power(&mut self, p_max: &[f64]) {
        for (l, &pm) in p_max.iter().enumerate() {
            let p = self.power(l);
            if p > pm {
                let s = c((pm / p).sqrt(), 0.0);
                for m in &mut self.w[l] {
                    *m *= s;
                }
            }
        }
    }

    /// Stacked `W_i = [W_{1,i}; …; W_{L,i}]`, (L·M_b) × M_u.
    pub fn stacked(&self, i: usize) -> CMat {
        let blocks: Vec<&CMat> = self.w.iter().map(|row| &row[i]).collect();
        vstack(&blocks)
    }

    /// Inverse of [`BeamformerSet::stacked`] applied to every UE.
    pub fn from_stacked(stacked: &[CMat], l: usize, m_b: usize) -> Self {
        let w = (0..l)
            .map(|b| stacked.iter().map(|s| s.rows(b * m_b, m_b).into_owned()).collect())
            .collect();
        Self { w }
    }

    /// `Σ_i W_i W_iᴴ`, the stacked transmit covariance.
    pub fn covariance(&self) -> CMat {
        let mut acc: Option<CMat> = None;
        for i in 0..self.num_ue() {
            let s = self.stacked(i);
            let term = &s * s.adjoint();
            acc = Some(match acc {
                Some(a) => a + term,
                None => term,
            });
        }
        acc.unwrap_or_else(|| CMat::zeros(0, 0))
    }

    /// Matched filter `W_{l,k} ∝ H_{l,k}`, each BS scaled to spend its full
    /// budget split evenly over the UEs.
    pub fn matched_filter(h: &[Vec<CMat>], p_max: &[f64]) -> Self {
        let w = h
            .iter()
            .zip(p_max)
            .map(|(row, &pm)| {
                let share = pm / row.len() as f64;
                row.iter()
                    .map(|hk| {
                        let n2 = frob_sq(hk);
                        if n2 > 0.0 {
                            hk * c((share / n2).sqrt(), 0.0)
                        } else {
                            CMat::zeros(hk.nrows(), hk.ncols())
                        }
                    })
                    .collect()
            })
            .collect();
        Self { w }
    }
}

pub(crate) fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(*b);
        r0 += b.nrows();
    }
    out
}

/// Concatenated IRS reflection coefficients `θ`, element `r·N + n` belonging
/// to IRS `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub theta: CVec,
    pub alpha: f64,
}

impl PhaseVector {
    pub fn from_phases(alpha: f64, phases: &[f64]) -> Self {
        Self { theta: CVec::from_iterator(phases.len(), phases.iter().map(|&p| cis(p) * alpha)), alpha }
    }

    pub fn empty(alpha: f64) -> Self {
        Self { theta: CVec::zeros(0), alpha }
    }

    /// Phases i.i.d. uniform on [0, 2π).
    pub fn random<R: Rng + ?Sized>(alpha: f64, n: usize, rng: &mut R) -> Self {
        let phases: Vec<f64> = (0..n).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
        Self::from_phases(alpha, &phases)
    }

    /// Phases i.i.d. uniform on the grid {2πm/levels}.
    pub fn random_discrete<R: Rng + ?Sized>(alpha: f64, n: usize, levels: u32, rng: &mut R) -> Self {
        let phases: Vec<f64> = (0..n)
            .map(|_| 2.0 * PI * rng.random_range(0..levels) as f64 / levels as f64)
            .collect();
        Self::from_phases(alpha, &phases)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Phases of the coefficients in [0, 2π).
    pub fn phases(&self) -> Vec<f64> {
        self.theta.iter().map(|z| z.arg().rem_euclid(2.0 * PI)).collect()
    }

    /// Largest deviation of `|θ_i|` from `alpha`.
    pub fn modulus_defect(&self) -> f64 {
        self.theta.iter().map(|z| (z.norm() - self.alpha).abs()).fold(0.0, f64::max)
    }

    /// Largest distance of `arg(θ_i/α)` from the nearest grid angle.
    pub fn grid_defect(&self, levels: u32) -> f64 {
        let step = 2.0 * PI / levels as f64;
        self.theta
            .iter()
            .map(|z| {
                let p = z.arg().rem_euclid(2.0 * PI) / step;
                (p - p.round()).abs() * step
            })
            .fold(0.0, f64::max)
    }

    pub fn validate(&self, levels: u32) -> Result<()> {
        if self.modulus_defect() > 1e-12 * self.alpha.max(1.0) {
            return Err(domain("phase vector violates the constant-modulus constraint"));
        }
        if levels >= 2 && self.grid_defect(levels) > 1e-12 {
            return Err(domain("phase vector is off the discrete phase grid"));
        }
        Ok(())
    }
}

/// Channels stacked over BSs and IRSs.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedChannels {
    /// `D_k = [D_{1,k}; …; D_{L,k}]`, (L·M_b) × M_u.
    pub d: Vec<CMat>,
    /// `G_k = [G_{1,k}; …; G_{R,k}]`, (R·N) × M_u.
    pub g: Vec<CMat>,
    /// Block (r, l) is `S_{l,r}`; (R·N) × (L·M_b).
    pub s: CMat,
}

pub fn stack(channels: &ChannelSet) -> Result<StackedChannels> {
    let l = channels.num_bs();
    let k = channels.num_ue();
    let r = channels.num_irs();
    let (m_b, m_u) = channels.direct.first().and_then(|row| row.first()).map_or((0, 0), |m| m.shape());
    let n = channels.irs_ue.first().and_then(|row| row.first()).map_or(0, |m| m.nrows());

    for row in &channels.direct {
        if row.len() != k || row.iter().any(|m| m.shape() != (m_b, m_u)) {
            return Err(structural("direct channels have inconsistent dimensions"));
        }
    }
    for row in &channels.irs_ue {
        if row.len() != k || row.iter().any(|m| m.shape() != (n, m_u)) {
            return Err(structural("IRS-UE channels have inconsistent dimensions"));
        }
    }
    if channels.bs_irs.len() != l {
        return Err(structural("BS-IRS channels have inconsistent dimensions"));
    }
    for row in &channels.bs_irs {
        if row.len() != r || row.iter().any(|m| m.shape() != (n, m_b)) {
            return Err(structural("BS-IRS channels have inconsistent dimensions"));
        }
    }

    let d = (0..k)
        .map(|kk| vstack(&channels.direct.iter().map(|row| &row[kk]).collect::<Vec<_>>()))
        .collect();
    let g = (0..k)
        .map(|kk| {
            if r == 0 {
                CMat::zeros(0, m_u)
            } else {
                vstack(&channels.irs_ue.iter().map(|row| &row[kk]).collect::<Vec<_>>())
            }
        })
        .collect();
    let mut s = CMat::zeros(r * n, l * m_b);
    for (ll, row) in channels.bs_irs.iter().enumerate() {
        for (rr, block) in row.iter().enumerate() {
            s.view_mut((rr * n, ll * m_b), (n, m_b)).copy_from(block);
        }
    }
    Ok(StackedChannels { d, g, s })
}

/// Effective BS→UE channels `H_{l,k}` (M_b × M_u) with
/// `H_{l,k}ᴴ = D_{l,k}ᴴ + Σ_r G_{r,k}ᴴ Θ_r S_{l,r}`.
pub fn effective_channel(channels: &ChannelSet, theta: &PhaseVector) -> Vec<Vec<CMat>> {
    let r = channels.num_irs();
    let n = channels.irs_ue.first().and_then(|row| row.first()).map_or(0, |m| m.nrows());
    let active = r > 0 && theta.len() == r * n;
    channels
        .direct
        .iter()
        .enumerate()
        .map(|(l, row)| {
            row.iter()
                .enumerate()
                .map(|(k, d)| {
                    let mut h = d.clone();
                    if active {
                        for rr in 0..r {
                            // S_{l,r}ᴴ Θ_rᴴ G_{r,k}
                            let mut tg = channels.irs_ue[rr][k].clone();
                            for i in 0..n {
                                let t = theta.theta[rr * n + i].conj();
                                for col in 0..tg.ncols() {
                                    tg[(i, col)] *= t;
                                }
                            }
                            h += channels.bs_irs[l][rr].adjoint() * tg;
                        }
                    }
                    h
                })
                .collect()
        })
        .collect()
}

/// `gains[k][i] = Σ_l H_{l,k}ᴴ W_{l,i}`, the M_u × M_u channel from UE `i`'s
/// streams to UE `k`'s antennas.
pub fn link_gains(h: &[Vec<CMat>], w: &BeamformerSet) -> Vec<Vec<CMat>> {
    let k = w.num_ue();
    (0..k)
        .map(|kk| {
            (0..k)
                .map(|i| {
                    let mut acc = h[0][kk].adjoint() * &w.w[0][i];
                    for l in 1..h.len() {
                        acc += h[l][kk].adjoint() * &w.w[l][i];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Interference-plus-noise covariance `V_k` and total covariance `V̄_k` for every UE.
pub fn covariances(gains: &[Vec<CMat>], sigma2: f64) -> Vec<(CMat, CMat)> {
    gains
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let m_u = row[k].nrows();
            let mut v = identity(m_u) * c(sigma2, 0.0);
            for (i, b) in row.iter().enumerate() {
                if i != k {
                    v += b * b.adjoint();
                }
            }
            let vbar = &v + &row[k] * row[k].adjoint();
            (v, vbar)
        })
        .collect()
}

/// Stream-space SINR matrices `Γ_k = B_kᴴ V_k⁻¹ B_k`.
pub fn sinr(h: &[Vec<CMat>], w: &BeamformerSet, sigma2: f64) -> Result<Vec<CMat>> {
    let gains = link_gains(h, w);
    covariances(&gains, sigma2)
        .into_iter()
        .enumerate()
        .map(|(k, (v, _))| {
            let vinv = hpd_inverse(&v, 1e-14).ok_or_else(|| Error::Numerical("V_k is not positive definite".into()))?;
            let b = &gains[k][k];
            Ok(b.adjoint() * vinv * b)
        })
        .collect()
}

/// Antenna-space SINR product `(Σ signal) · V_k⁻¹` as displayed in the model
/// equations. Same determinant as [`sinr`]; kept as an independent check.
pub fn sinr_antenna(h: &[Vec<CMat>], w: &BeamformerSet, sigma2: f64) -> Result<Vec<CMat>> {
    let gains = link_gains(h, w);
    covariances(&gains, sigma2)
        .into_iter()
        .enumerate()
        .map(|(k, (v, _))| {
            let vinv = v.clone().try_inverse().ok_or_else(|| Error::Numerical("V_k is singular".into()))?;
            let b = &gains[k][k];
            Ok(b * b.adjoint() * vinv)
        })
        .collect()
}

/// `Σ_k log det(I + Γ_k)` in nats for precomputed effective channels.
pub fn sum_rate_from_h(h: &[Vec<CMat>], w: &BeamformerSet, sigma2: f64) -> f64 {
    let gains = link_gains(h, w);
    covariances(&gains, sigma2)
        .iter()
        .map(|(v, vbar)| {
            let a = logdet_hpd(vbar).unwrap_or(f64::NAN);
            let b = logdet_hpd(v).unwrap_or(f64::NAN);
            a - b
        })
        .sum()
}

/// Achievable sum-rate in nats.
pub fn sum_rate(channels: &ChannelSet, w: &BeamformerSet, theta: &PhaseVector, sigma2: f64) -> f64 {
    sum_rate_from_h(&effective_channel(channels, theta), w, sigma2)
}

pub fn nats_to_bits(x: f64) -> f64 {
    x / std::f64::consts::LN_2
}
