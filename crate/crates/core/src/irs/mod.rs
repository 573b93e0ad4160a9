//! Reflection-coefficient design as a constant-modulus quadratic program.
//!
//! For fixed `(W, U, Y)` the θ-dependent part of f4 is
//!
//! ```text
//! f7(θ) = −θᴴ 𝒵 θ + 2 Re(θᴴ ω),   |θ_i| = α,
//! ```
//!
//! with `𝒵 = Z ⊙ Qᵀ`, `ω = diag(E − A)` and
//!
//! ```text
//! Z = Σ_k G_k Y_k Ū_k Y_kᴴ G_kᴴ        Q = S (Σ_i W_i W_iᴴ) Sᴴ
//! A = Σ_k G_k Y_k Ū_k Y_kᴴ D_kᴴ (Σ_i W_i W_iᴴ) Sᴴ
//! E = Σ_k G_k Y_k Ū_k W_kᴴ Sᴴ
//! ```
//!
//! over the stacked channels. Four solvers are provided: coordinate ascent
//! ([`aso`]), its discrete-grid variant ([`discrete`]), a convex relaxation of
//! the modulus constraint ([`qcr`]) and semidefinite relaxation with Gaussian
//! randomization ([`sdr`]).

pub mod aso;
pub mod discrete;
pub mod qcr;
pub mod sdr;

pub use aso::{aso_coordinate, aso_solve, aso_solve_random_order, AsoResult};
pub use discrete::{discrete_sweep, nearest_level, DiscreteResult};
pub use qcr::{qcr_solve, QcrResult};
pub use sdr::{sdr_solve, SdrResult};

use crate::fp::AuxState;
use crate::linalg::{hermitian_part, CMat, CVec};
use crate::model::{BeamformerSet, PhaseVector, StackedChannels};

#[derive(Debug, Clone, PartialEq)]
pub struct CmcQpData {
    pub zcal: CMat,
    pub omega: CVec,
    pub z: CMat,
    pub q: CMat,
    pub a: CMat,
    pub e: CMat,
}

impl CmcQpData {
    pub fn dim(&self) -> usize {
        self.omega.len()
    }
}

pub fn build_cmcqp(stacked: &StackedChannels, w: &BeamformerSet, aux: &AuxState) -> CmcQpData {
    let n = stacked.s.nrows();
    let wsum = w.covariance();
    let sw = &stacked.s * &wsum;
    let mut z = CMat::zeros(n, n);
    let mut a = CMat::zeros(n, n);
    let mut e = CMat::zeros(n, n);
    for k in 0..stacked.g.len() {
        let g = &stacked.g[k];
        let y = &aux.y[k];
        let ubar = aux.u_bar(k);
        let p = hermitian_part(&(y * &ubar * y.adjoint()));
        let gp = g * &p;
        z += &gp * g.adjoint();
        a += &gp * stacked.d[k].adjoint() * sw.adjoint();
        e += g * y * ubar.adjoint() * (&stacked.s * w.stacked(k)).adjoint();
    }
    let z = hermitian_part(&z);
    let q = hermitian_part(&(&sw * stacked.s.adjoint()));
    let zcal = hermitian_part(&z.component_mul(&q.transpose()));
    let omega = (&e - &a).diagonal();
    CmcQpData { zcal, omega, z, q, a, e }
}

/// `f7(θ) = −θᴴ𝒵θ + 2 Re(θᴴω)` for a raw coefficient vector.
pub fn f7_raw(theta: &CVec, data: &CmcQpData) -> f64 {
    let quad = theta.dotc(&(&data.zcal * theta)).re;
    -quad + 2.0 * theta.dotc(&data.omega).re
}

pub fn eval_f7(theta: &PhaseVector, data: &CmcQpData) -> f64 {
    f7_raw(&theta.theta, data)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::channel::{complex_gaussian, sample_iid};
    use crate::fp::{update_u, update_y};
    use crate::linalg::c;
    use crate::model::{effective_channel, sinr, stack, SystemConfig};
    use crate::channel::ChannelSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub struct Instance {
        pub cfg: SystemConfig,
        pub channels: ChannelSet,
        pub w: BeamformerSet,
        pub aux: AuxState,
        pub data: CmcQpData,
    }

    pub fn instance(seed: u64, r: usize, n: usize) -> Instance {
        let cfg = SystemConfig::unit(2, 2, r, 2, 2, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channels = sample_iid(&cfg, 0.7, &mut rng);
        let theta = PhaseVector::random(1.0, r * n, &mut rng);
        let w = BeamformerSet {
            w: (0..2).map(|_| (0..2).map(|_| complex_gaussian(2, 2, &mut rng) * c(0.4, 0.0)).collect()).collect(),
        };
        let h = effective_channel(&channels, &theta);
        let aux = AuxState { u: update_u(&sinr(&h, &w, 1.0).unwrap()), y: update_y(&h, &w, 1.0).unwrap() };
        let data = build_cmcqp(&stack(&channels).unwrap(), &w, &aux);
        Instance { cfg, channels, w, aux, data }
    }

    /// Random QP with a PSD `𝒵` of the given dimension.
    pub fn random_qp(seed: u64, n: usize) -> CmcQpData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = complex_gaussian(n, n, &mut rng);
        let zcal = hermitian_part(&(&x * x.adjoint()));
        let omega = complex_gaussian(n, 1, &mut rng).column(0).into_owned() * c(2.0, 0.0);
        CmcQpData { zcal, omega, z: CMat::zeros(0, 0), q: CMat::zeros(0, 0), a: CMat::zeros(0, 0), e: CMat::zeros(0, 0) }
    }

    /// Exhaustive maximum of f7 over a uniform phase grid.
    pub fn brute_force(data: &CmcQpData, alpha: f64, levels: u32) -> (f64, Vec<u32>) {
        let n = data.dim();
        let mut idx = vec![0u32; n];
        let mut best = (f64::NEG_INFINITY, idx.clone());
        loop {
            let phases: Vec<f64> = idx.iter().map(|&m| 2.0 * std::f64::consts::PI * m as f64 / levels as f64).collect();
            let v = f7_raw(&PhaseVector::from_phases(alpha, &phases).theta, data);
            if v > best.0 {
                best = (v, idx.clone());
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    return best;
                }
                idx[pos] += 1;
                if idx[pos] < levels {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }
}
