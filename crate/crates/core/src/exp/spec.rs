use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::Geometry;
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::pipeline::{PhaseSolver, SchemeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Outer iteration budget; convergence early-exit is disabled.
    Iterations,
    /// Elements per IRS; `n_h` is kept and `n_v = n / n_h`.
    NPhaseShifts,
    UeCenterX,
    IrsPathlossExponent,
    ReflectingEfficiency,
    /// Overrides the CSI error of every scheme; scheme names stay fixed.
    CsiErrorRho,
    /// Overrides the level count of every discrete scheme.
    DiscreteLevels,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Iterations => "iterations",
            Self::NPhaseShifts => "n_phase_shifts",
            Self::UeCenterX => "ue_center_x",
            Self::IrsPathlossExponent => "irs_pathloss_exponent",
            Self::ReflectingEfficiency => "reflecting_efficiency",
            Self::CsiErrorRho => "csi_error_rho",
            Self::DiscreteLevels => "discrete_levels",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub base: SystemConfig,
    pub geometry: Geometry,
    pub sweep: SweepParam,
    pub sweep_values: Vec<f64>,
    pub schemes: Vec<SchemeSpec>,
    pub n_seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v.fract() != 0.0 || !(v >= 0.0) || v > u32::MAX as f64 {
        return Err(config(format!("{what} must be a non-negative integer, got {v}")));
    }
    Ok(v as usize)
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config(format!("invalid experiment spec: {e}")))
    }

    /// Configuration, geometry and schemes for one sweep value.
    pub fn instantiate(&self, value: f64) -> Result<(SystemConfig, Geometry, Vec<SchemeSpec>)> {
        let mut cfg = self.base.clone();
        let mut geometry = self.geometry.clone();
        let mut schemes = self.schemes.clone();
        match self.sweep {
            SweepParam::Iterations => {
                cfg.max_outer = as_count(value, "iterations")?;
                cfg.eps3 = 0.0;
            }
            SweepParam::NPhaseShifts => {
                let n = as_count(value, "n_phase_shifts")?;
                if cfg.n_h == 0 || n % cfg.n_h != 0 {
                    return Err(config(format!("n_phase_shifts {n} is not a multiple of n_h = {}", cfg.n_h)));
                }
                cfg.n = n;
                cfg.n_v = n / cfg.n_h;
            }
            SweepParam::UeCenterX => geometry.ue_center_x = value,
            SweepParam::IrsPathlossExponent => cfg.pathloss_irs = value,
            SweepParam::ReflectingEfficiency => cfg.alpha = value,
            SweepParam::CsiErrorRho => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(config(format!("csi_error_rho must lie in [0, 1], got {value}")));
                }
                for s in &mut schemes {
                    // Keep the name stable across sweep values.
                    s.label = s.name();
                    s.csi_error_rho = value;
                }
            }
            SweepParam::DiscreteLevels => {
                let levels = as_count(value, "discrete_levels")? as u32;
                cfg.discrete_levels = levels;
                for s in &mut schemes {
                    if let PhaseSolver::Discrete { levels: l } = &mut s.phase_solver {
                        *l = levels;
                    }
                }
            }
        }
        Ok((cfg, geometry, schemes))
    }

    /// Checks the spec and every instantiated sweep point.
    pub fn validate(&self) -> Result<()> {
        if self.sweep_values.is_empty() {
            return Err(config("sweep_values must not be empty"));
        }
        if self.n_seeds == 0 {
            return Err(config("n_seeds must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(config("schemes must not be empty"));
        }
        for &value in &self.sweep_values {
            let at = |e: Error| config(format!("{} = {value}: {e}", self.sweep));
            let (cfg, geometry, schemes) = self.instantiate(value).map_err(at)?;
            cfg.validate().map_err(at)?;
            let mut probe = geometry.clone();
            probe.ue_positions = vec![[geometry.ue_center_x, geometry.ue_center_y, geometry.ue_height]; cfg.k];
            probe.validate(&cfg).map_err(at)?;
            for s in &schemes {
                if !(0.0..=1.0).contains(&s.csi_error_rho) {
                    return Err(at(config(format!("scheme {}: csi_error_rho must lie in [0, 1]", s.name()))));
                }
                if let PhaseSolver::Discrete { levels } = s.phase_solver {
                    if levels < 2 {
                        return Err(at(config(format!("scheme {}: at least 2 levels required", s.name()))));
                    }
                }
            }
            let mut names: Vec<String> = schemes.iter().map(SchemeSpec::name).collect();
            names.sort();
            if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
                return Err(at(config(format!("duplicate scheme name {}", w[0]))));
            }
        }
        Ok(())
    }
}
