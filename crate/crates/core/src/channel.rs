//! Random channel synthesis from scenario geometry.
//!
//! Direct BS→UE links are Rayleigh; BS→IRS and IRS→UE links are Rician with a
//! rank-one line-of-sight part built from ULA (BS, UE) and UPA (IRS) steering
//! vectors. Large-scale path loss is a power gain, so channel amplitudes are
//! scaled by its square root.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, Result};
use crate::linalg::{c, cis, kron, CMat, CVec};
use crate::model::SystemConfig;

/// Rician factors at or above this value are treated as pure line-of-sight.
pub const RICIAN_LOS_LIMIT: f64 = 1e9;

pub type Point = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs_positions: Vec<Point>,
    pub irs_positions: Vec<Point>,
    /// Empty in a template; filled per realization by [`Geometry::with_sampled_ues`].
    #[serde(default)]
    pub ue_positions: Vec<Point>,
    pub ue_center_x: f64,
    #[serde(default = "default_center_y")]
    pub ue_center_y: f64,
    pub ue_radius: f64,
    #[serde(default = "default_ue_height")]
    pub ue_height: f64,
}

fn default_center_y() -> f64 {
    100.0
}

fn default_ue_height() -> f64 {
    1.5
}

impl Geometry {
    /// Reference layout: `l` BSs at 3 m height evenly spread along the x axis
    /// over [0, 200] m, `r` IRSs at 6 m height on the line y = 110 m at
    /// x = 200·(i+1)/(r+1), and UEs in a 10 m disc around (`center_x`, 100).
    pub fn reference(l: usize, r: usize, center_x: f64) -> Self {
        let bs_positions = (0..l)
            .map(|i| {
                let x = if l == 1 { 100.0 } else { 200.0 * i as f64 / (l - 1) as f64 };
                [x, 0.0, 3.0]
            })
            .collect();
        let irs_positions = (0..r)
            .map(|i| [200.0 * (i + 1) as f64 / (r + 1) as f64, 110.0, 6.0])
            .collect();
        Self {
            bs_positions,
            irs_positions,
            ue_positions: Vec::new(),
            ue_center_x: center_x,
            ue_center_y: default_center_y(),
            ue_radius: 10.0,
            ue_height: default_ue_height(),
        }
    }

    /// Copy of the template with `k` UEs drawn uniformly in the disc.
    pub fn with_sampled_ues<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Self {
        let mut g = self.clone();
        g.ue_positions = (0..k)
            .map(|_| {
                let rad = self.ue_radius * rng.random::<f64>().sqrt();
                let ang = 2.0 * PI * rng.random::<f64>();
                [
                    self.ue_center_x + rad * ang.cos(),
                    self.ue_center_y + rad * ang.sin(),
                    self.ue_height,
                ]
            })
            .collect();
        g
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.bs_positions.len() != cfg.l {
            return Err(structural(format!("expected {} BS positions, got {}", cfg.l, self.bs_positions.len())));
        }
        if self.irs_positions.len() != cfg.r {
            return Err(structural(format!("expected {} IRS positions, got {}", cfg.r, self.irs_positions.len())));
        }
        if self.ue_positions.len() != cfg.k {
            return Err(structural(format!("expected {} UE positions, got {}", cfg.k, self.ue_positions.len())));
        }
        let all = self.bs_positions.iter().chain(&self.irs_positions).chain(&self.ue_positions);
        for p in all {
            if !(p[2] > 0.0) || p.iter().any(|v| !v.is_finite()) {
                return Err(structural(format!("invalid position {p:?}: heights must be positive")));
            }
        }
        Ok(())
    }
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngles {
    pub departure_bs: Vec<f64>,
    pub arrival_ue: Vec<f64>,
    pub irs_arrival_azimuth: Vec<f64>,
    pub irs_arrival_elevation: Vec<f64>,
    pub irs_departure_azimuth: Vec<f64>,
    pub irs_departure_elevation: Vec<f64>,
}

impl SteeringAngles {
    /// Azimuths and ULA angles uniform on [0, 2π), elevations uniform on [0, π).
    pub fn sample<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Self {
        let mut draw = |n: usize, span: f64| -> Vec<f64> { (0..n).map(|_| span * rng.random::<f64>()).collect() };
        let departure_bs = draw(cfg.l, 2.0 * PI);
        let arrival_ue = draw(cfg.k, 2.0 * PI);
        let irs_arrival_azimuth = draw(cfg.r, 2.0 * PI);
        let irs_arrival_elevation = draw(cfg.r, PI);
        let irs_departure_azimuth = draw(cfg.r, 2.0 * PI);
        let irs_departure_elevation = draw(cfg.r, PI);
        Self {
            departure_bs,
            arrival_ue,
            irs_arrival_azimuth,
            irs_arrival_elevation,
            irs_departure_azimuth,
            irs_departure_elevation,
        }
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        let lens = [
            (self.departure_bs.len(), cfg.l),
            (self.arrival_ue.len(), cfg.k),
            (self.irs_arrival_azimuth.len(), cfg.r),
            (self.irs_arrival_elevation.len(), cfg.r),
            (self.irs_departure_azimuth.len(), cfg.r),
            (self.irs_departure_elevation.len(), cfg.r),
        ];
        if lens.iter().any(|(a, b)| a != b) {
            return Err(structural("steering angle counts do not match the configuration"));
        }
        let elev = self.irs_arrival_elevation.iter().chain(&self.irs_departure_elevation);
        if elev.clone().any(|e| !(0.0..PI).contains(e)) {
            return Err(domain("elevation angles must lie in [0, π)"));
        }
        let all = self
            .departure_bs
            .iter()
            .chain(&self.arrival_ue)
            .chain(&self.irs_arrival_azimuth)
            .chain(&self.irs_departure_azimuth);
        if all.chain(elev).any(|a| !a.is_finite()) {
            return Err(domain("steering angles must be finite"));
        }
        Ok(())
    }
}

/// Per-link channel matrices, indexed `direct[l][k]`, `irs_ue[r][k]`, `bs_irs[l][r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// D_{l,k}: M_b × M_u.
    pub direct: Vec<Vec<CMat>>,
    /// G_{r,k}: N × M_u.
    pub irs_ue: Vec<Vec<CMat>>,
    /// S_{l,r}: N × M_b.
    pub bs_irs: Vec<Vec<CMat>>,
}

impl ChannelSet {
    pub fn num_bs(&self) -> usize {
        self.direct.len()
    }

    pub fn num_ue(&self) -> usize {
        self.direct.first().map_or(0, Vec::len)
    }

    pub fn num_irs(&self) -> usize {
        self.irs_ue.len()
    }

    /// The same realization with every IRS removed.
    pub fn without_irs(&self) -> Self {
        Self {
            direct: self.direct.clone(),
            irs_ue: Vec::new(),
            bs_irs: vec![Vec::new(); self.direct.len()],
        }
    }

    pub fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        let bad = |what: &str| Err(structural(format!("{what} has wrong dimensions")));
        if self.direct.len() != cfg.l || self.bs_irs.len() != cfg.l || self.irs_ue.len() != cfg.r {
            return bad("channel set");
        }
        for row in &self.direct {
            if row.len() != cfg.k || row.iter().any(|m| m.shape() != (cfg.m_b, cfg.m_u)) {
                return bad("direct channel");
            }
        }
        for row in &self.irs_ue {
            if row.len() != cfg.k || row.iter().any(|m| m.shape() != (cfg.n, cfg.m_u)) {
                return bad("IRS-UE channel");
            }
        }
        for row in &self.bs_irs {
            if row.len() != cfg.r || row.iter().any(|m| m.shape() != (cfg.n, cfg.m_b)) {
                return bad("BS-IRS channel");
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.matrices().all(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub fn matrices(&self) -> impl Iterator<Item = &CMat> {
        self.direct
            .iter()
            .flatten()
            .chain(self.irs_ue.iter().flatten())
            .chain(self.bs_irs.iter().flatten())
    }

    fn matrices_mut(&mut self) -> impl Iterator<Item = &mut CMat> {
        self.direct
            .iter_mut()
            .flatten()
            .chain(self.irs_ue.iter_mut().flatten())
            .chain(self.bs_irs.iter_mut().flatten())
    }
}

/// `c0·(distance/d0)^(−exponent)`, a linear power gain.
pub fn path_loss(distance: f64, exponent: f64, c0: f64, d0: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(domain(format!("distance must be positive, got {distance}")));
    }
    if !(d0 > 0.0) {
        return Err(domain(format!("reference distance must be positive, got {d0}")));
    }
    if !(exponent >= 0.0) {
        return Err(domain(format!("path-loss exponent must be non-negative, got {exponent}")));
    }
    Ok(c0 * (distance / d0).powf(-exponent))
}

/// Half-wavelength ULA response: element i is `exp(j·π·i·sin(angle))`.
pub fn ula_steering(angle: f64, m: usize) -> Result<CVec> {
    if m == 0 {
        return Err(domain("array must have at least one element"));
    }
    let s = angle.sin();
    Ok(CVec::from_fn(m, |i, _| cis(PI * i as f64 * s)))
}

/// UPA response `a_v ⊗ a_h` with `a_v[i] = exp(jπ i sinκ sinφ)` and
/// `a_h[i] = exp(jπ i cosφ)`.
pub fn upa_steering(azimuth: f64, elevation: f64, n_v: usize, n_h: usize) -> Result<CVec> {
    if n_v == 0 || n_h == 0 {
        return Err(domain("planar array dimensions must be at least 1"));
    }
    let sv = azimuth.sin() * elevation.sin();
    let sh = elevation.cos();
    let av = CVec::from_fn(n_v, |i, _| cis(PI * i as f64 * sv));
    let ah = CVec::from_fn(n_h, |i, _| cis(PI * i as f64 * sh));
    Ok(kron(&av, &ah))
}

/// Matrix with i.i.d. CN(0, 1) entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(s * re, s * im)
    })
}

fn rician_weights(beta: f64) -> (f64, f64) {
    if beta >= RICIAN_LOS_LIMIT {
        (1.0, 0.0)
    } else {
        ((beta / (1.0 + beta)).sqrt(), (1.0 / (1.0 + beta)).sqrt())
    }
}

fn rician<R: Rng + ?Sized>(los: CMat, beta: f64, amplitude: f64, rng: &mut R) -> CMat {
    let (w_los, w_nlos) = rician_weights(beta);
    let nlos = complex_gaussian(los.nrows(), los.ncols(), rng);
    // Draw NLOS even in the pure-LOS limit so the random stream stays aligned.
    (los * c(w_los, 0.0) + nlos * c(w_nlos, 0.0)) * c(amplitude, 0.0)
}

/// Draws one realization of every channel. Random draws happen in the fixed
/// order D (l-major), G (r-major), S (l-major).
pub fn sample_channels<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    geometry: &Geometry,
    angles: &SteeringAngles,
    rng: &mut R,
) -> Result<ChannelSet> {
    cfg.validate()?;
    geometry.validate(cfg)?;
    angles.validate(cfg)?;

    let amp = |a: &Point, b: &Point, exponent: f64| -> Result<f64> {
        Ok(path_loss(distance(a, b), exponent, cfg.c0, 1.0)?.sqrt())
    };

    let bs_arrays = angles
        .departure_bs
        .iter()
        .map(|&a| ula_steering(a, cfg.m_b))
        .collect::<Result<Vec<_>>>()?;
    let ue_arrays = angles
        .arrival_ue
        .iter()
        .map(|&a| ula_steering(a, cfg.m_u))
        .collect::<Result<Vec<_>>>()?;
    let irs_arrival = (0..cfg.r)
        .map(|r| upa_steering(angles.irs_arrival_azimuth[r], angles.irs_arrival_elevation[r], cfg.n_v, cfg.n_h))
        .collect::<Result<Vec<_>>>()?;
    let irs_departure = (0..cfg.r)
        .map(|r| upa_steering(angles.irs_departure_azimuth[r], angles.irs_departure_elevation[r], cfg.n_v, cfg.n_h))
        .collect::<Result<Vec<_>>>()?;

    let mut direct = Vec::with_capacity(cfg.l);
    for l in 0..cfg.l {
        let mut row = Vec::with_capacity(cfg.k);
        for k in 0..cfg.k {
            let a = amp(&geometry.bs_positions[l], &geometry.ue_positions[k], cfg.pathloss_direct)?;
            row.push(complex_gaussian(cfg.m_b, cfg.m_u, rng) * c(a, 0.0));
        }
        direct.push(row);
    }

    let mut irs_ue = Vec::with_capacity(cfg.r);
    for r in 0..cfg.r {
        let mut row = Vec::with_capacity(cfg.k);
        for k in 0..cfg.k {
            let a = amp(&geometry.irs_positions[r], &geometry.ue_positions[k], cfg.pathloss_irs)?;
            // N × M_u: departure response at the IRS times the UE arrival response.
            let los = &irs_departure[r] * ue_arrays[k].adjoint();
            row.push(rician(los, cfg.beta_g, a, rng));
        }
        irs_ue.push(row);
    }

    let mut bs_irs = Vec::with_capacity(cfg.l);
    for l in 0..cfg.l {
        let mut row = Vec::with_capacity(cfg.r);
        for r in 0..cfg.r {
            let a = amp(&geometry.bs_positions[l], &geometry.irs_positions[r], cfg.pathloss_irs)?;
            let los = &irs_arrival[r] * bs_arrays[l].adjoint();
            row.push(rician(los, cfg.beta_s, a, rng));
        }
        bs_irs.push(row);
    }

    Ok(ChannelSet { direct, irs_ue, bs_irs })
}

/// Geometry-free realization with every entry i.i.d. CN(0, 1); the IRS-related
/// links are scaled by `irs_gain` (amplitude). Useful for unit-scale
/// experiments and tests.
pub fn sample_iid<R: Rng + ?Sized>(cfg: &SystemConfig, irs_gain: f64, rng: &mut R) -> ChannelSet {
    let g = c(irs_gain, 0.0);
    let direct = (0..cfg.l)
        .map(|_| (0..cfg.k).map(|_| complex_gaussian(cfg.m_b, cfg.m_u, rng)).collect())
        .collect();
    let irs_ue = (0..cfg.r)
        .map(|_| (0..cfg.k).map(|_| complex_gaussian(cfg.n, cfg.m_u, rng) * g).collect())
        .collect();
    let bs_irs = (0..cfg.l)
        .map(|_| (0..cfg.r).map(|_| complex_gaussian(cfg.n, cfg.m_b, rng) * g).collect())
        .collect();
    ChannelSet { direct, irs_ue, bs_irs }
}

/// Bounded CSI error: returns estimates `Ĥ = H − Δ` with `Δ` pointing in a
/// Gaussian-random direction and `‖Δ‖_F = ρ‖H‖_F/(1+ρ)`, so that
/// `‖Δ‖_F ≤ ρ‖Ĥ‖_F` holds for every matrix.
pub fn apply_csi_error<R: Rng + ?Sized>(channels: &ChannelSet, rho: f64, rng: &mut R) -> Result<ChannelSet> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(domain(format!("CSI error ratio must be non-negative, got {rho}")));
    }
    let mut out = channels.clone();
    if rho == 0.0 {
        return Ok(out);
    }
    for m in out.matrices_mut() {
        let norm = m.norm();
        let dir = complex_gaussian(m.nrows(), m.ncols(), rng);
        let dn = dir.norm();
        if norm == 0.0 || dn == 0.0 {
            continue;
        }
        let scale = rho * norm / (1.0 + rho) / dn;
        *m -= dir * c(scale, 0.0);
    }
    Ok(out)
}
