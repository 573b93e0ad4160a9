//! Alternating optimization of `(U, Y, W, θ)` and Monte-Carlo orchestration.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_csi_error, sample_channels, ChannelSet, Geometry, SteeringAngles};
use crate::error::{Error, Result};
use crate::fp::{f3_from_h, f4_from_h, update_u, update_y, AuxState};
use crate::irs::{aso_solve, aso_solve_random_order, build_cmcqp, discrete_sweep, eval_f7, qcr_solve, sdr_solve};
use crate::model::{effective_channel, sinr, stack, sum_rate, sum_rate_from_h, BeamformerSet, PhaseVector, SystemConfig};
use crate::seeds::child_rng;
use crate::tx::optimize_w_from_h;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhaseSolver {
    Aso,
    Qcr,
    Sdr,
    Discrete { levels: u32 },
    Random,
    None,
}

impl fmt::Display for PhaseSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Aso => f.write_str("ASO"),
            Self::Qcr => f.write_str("QCR"),
            Self::Sdr => f.write_str("SDR"),
            Self::Discrete { levels } => write!(f, "DISCRETE-{levels}"),
            Self::Random => f.write_str("RANDOM"),
            Self::None => f.write_str("NONE"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    #[serde(flatten)]
    pub phase_solver: PhaseSolver,
    #[serde(default)]
    pub csi_error_rho: f64,
    #[serde(default)]
    pub label: String,
}

impl SchemeSpec {
    pub fn new(phase_solver: PhaseSolver) -> Self {
        Self { phase_solver, csi_error_rho: 0.0, label: String::new() }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.csi_error_rho = rho;
        self
    }

    /// Explicit label, or one derived from the solver and CSI error.
    pub fn name(&self) -> String {
        if !self.label.is_empty() {
            self.label.clone()
        } else if self.csi_error_rho > 0.0 {
            format!("{}@rho={}", self.phase_solver, self.csi_error_rho)
        } else {
            self.phase_solver.to_string()
        }
    }

    /// Schemes in the same class share their random stream: the initial
    /// phases and CSI-error directions coincide, pairing their results.
    pub fn init_class(&self) -> String {
        match self.phase_solver {
            PhaseSolver::Discrete { levels } => format!("discrete-{levels}"),
            _ => "continuous".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageTimes {
    pub u_secs: f64,
    pub y_secs: f64,
    pub w_secs: f64,
    pub theta_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunTrace {
    /// Sum-rate (nats) on the optimization channels, initial point first.
    pub rates: Vec<f64>,
    /// `f3` after each outer iteration's W and θ updates.
    pub f3: Vec<f64>,
    pub dual_iterations: Vec<usize>,
    pub phase_sweeps: Vec<usize>,
    /// Outer iterations in which a W or θ candidate was rejected.
    pub rejected_steps: usize,
    pub times: StageTimes,
    pub converged: bool,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.rates.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone)]
pub struct JointOutcome {
    pub w: BeamformerSet,
    pub theta: PhaseVector,
    /// Final sum-rate (nats) evaluated on the true channels.
    pub sum_rate: f64,
    pub trace: RunTrace,
}

/// Relative tolerance for the ascent safeguards.
const ASCENT_SLACK: f64 = 1e-12;

fn initial_theta<R: Rng + ?Sized>(cfg: &SystemConfig, scheme: &SchemeSpec, rng: &mut R) -> PhaseVector {
    match scheme.phase_solver {
        PhaseSolver::Discrete { levels } => PhaseVector::random_discrete(cfg.alpha, cfg.n_total(), levels, rng),
        _ => PhaseVector::random(cfg.alpha, cfg.n_total(), rng),
    }
}

/// Alternates `U → Y → W → θ` until the relative sum-rate change drops
/// below `ε₃` or `max_outer` iterations have run.
///
/// The random stream is consumed in a fixed order: initial phases, then the
/// CSI perturbation, then solver randomness.
pub fn joint_optimize<R: Rng + ?Sized>(
    channels: &ChannelSet,
    cfg: &SystemConfig,
    scheme: &SchemeSpec,
    rng: &mut R,
) -> Result<JointOutcome> {
    cfg.validate()?;
    channels.check_dims(cfg)?;
    if let PhaseSolver::Discrete { levels } = scheme.phase_solver {
        if levels < 2 {
            return Err(Error::Config(format!("discrete scheme needs at least 2 levels, got {levels}")));
        }
    }

    let mut theta = initial_theta(cfg, scheme, rng);
    let estimated = apply_csi_error(channels, scheme.csi_error_rho, rng)?;
    let (truth, work) = if scheme.phase_solver == PhaseSolver::None {
        theta = PhaseVector::empty(cfg.alpha);
        (channels.without_irs(), estimated.without_irs())
    } else {
        (channels.clone(), estimated)
    };
    let optimize_phases = !matches!(scheme.phase_solver, PhaseSolver::None | PhaseSolver::Random) && cfg.r > 0;
    let stacked = stack(&work)?;
    let p_max = cfg.p_max_all();

    let mut w = BeamformerSet::matched_filter(&effective_channel(&work, &theta), &p_max);
    let mut trace = RunTrace { rates: vec![sum_rate(&work, &w, &theta, cfg.sigma2)], ..Default::default() };
    let mut lambda: Option<Vec<f64>> = None;

    for _ in 0..cfg.max_outer {
        let h = effective_channel(&work, &theta);

        let t = Instant::now();
        let u = update_u(&sinr(&h, &w, cfg.sigma2)?);
        trace.times.u_secs += t.elapsed().as_secs_f64();
        let t = Instant::now();
        let y = update_y(&h, &w, cfg.sigma2)?;
        trace.times.y_secs += t.elapsed().as_secs_f64();
        let aux = AuxState { u, y };

        let t = Instant::now();
        let out = optimize_w_from_h(&h, &aux, cfg, lambda.as_deref());
        trace.dual_iterations.push(out.iterations);
        let old_f4 = f4_from_h(&h, &w, &aux, cfg.sigma2);
        if f4_from_h(&h, &out.w, &aux, cfg.sigma2) >= old_f4 - ASCENT_SLACK * old_f4.abs() {
            w = out.w;
            lambda = Some(out.lambda);
        } else {
            trace.rejected_steps += 1;
        }
        trace.times.w_secs += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let mut sweeps = 0;
        if optimize_phases {
            let data = build_cmcqp(&stacked, &w, &aux);
            let candidate = match scheme.phase_solver {
                PhaseSolver::Aso if cfg.aso_random_order => {
                    let r = aso_solve_random_order(&theta, &data, cfg.eps2, cfg.max_aso, rng);
                    sweeps = r.sweeps;
                    r.theta
                }
                PhaseSolver::Aso => {
                    let r = aso_solve(&theta, &data, cfg.eps2, cfg.max_aso);
                    sweeps = r.sweeps;
                    r.theta
                }
                PhaseSolver::Discrete { levels } => {
                    let r = discrete_sweep(&theta, &data, levels, cfg.max_aso)?;
                    sweeps = r.sweeps;
                    r.theta
                }
                PhaseSolver::Qcr => {
                    let r = qcr_solve(&theta, &data, cfg.qcr_tol, cfg.qcr_max_iter);
                    sweeps = r.iterations;
                    r.theta
                }
                PhaseSolver::Sdr => {
                    let r = sdr_solve(&data, cfg.alpha, cfg.sdr_randomizations, rng);
                    sweeps = r.admm_iterations;
                    r.theta
                }
                PhaseSolver::Random | PhaseSolver::None => unreachable!(),
            };
            let old = eval_f7(&theta, &data);
            if eval_f7(&candidate, &data) >= old - ASCENT_SLACK * old.abs() {
                theta = candidate;
            } else {
                trace.rejected_steps += 1;
            }
        }
        trace.phase_sweeps.push(sweeps);
        trace.times.theta_secs += t.elapsed().as_secs_f64();

        let h = effective_channel(&work, &theta);
        trace.f3.push(f3_from_h(&h, &w, &aux, cfg.sigma2)?);
        let rate = sum_rate_from_h(&h, &w, cfg.sigma2);
        let prev = *trace.rates.last().unwrap();
        trace.rates.push(rate);
        if !rate.is_finite() {
            return Err(Error::Numerical("sum-rate became non-finite".into()));
        }
        if (rate - prev).abs() < cfg.eps3 * prev.abs().max(f64::MIN_POSITIVE) {
            trace.converged = true;
            break;
        }
    }

    let sum_rate = sum_rate(&truth, &w, &theta, cfg.sigma2);
    Ok(JointOutcome { w, theta, sum_rate, trace })
}

/// One channel realization: UE drop, steering angles and fading.
pub fn sample_realization(cfg: &SystemConfig, template: &Geometry, master: u64, seed: u64) -> Result<ChannelSet> {
    let geometry = template.with_sampled_ues(cfg.k, &mut child_rng(master, seed, "ues"));
    let angles = SteeringAngles::sample(cfg, &mut child_rng(master, seed, "angles"));
    sample_channels(cfg, &geometry, &angles, &mut child_rng(master, seed, "channels"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedResult {
    pub scheme: String,
    pub seed: u64,
    pub sum_rate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_secs: f64,
}

/// Runs every scheme on the realization belonging to `seed`.
pub fn run_seed(
    cfg: &SystemConfig,
    template: &Geometry,
    schemes: &[SchemeSpec],
    master: u64,
    seed: u64,
) -> Result<Vec<SeedResult>> {
    let channels = sample_realization(cfg, template, master, seed)?;
    schemes
        .iter()
        .map(|scheme| {
            let start = Instant::now();
            let mut rng = child_rng(master, seed, &format!("scheme:{}", scheme.init_class()));
            let out = joint_optimize(&channels, cfg, scheme, &mut rng)?;
            Ok(SeedResult {
                scheme: scheme.name(),
                seed,
                sum_rate: out.sum_rate,
                iterations: out.trace.iterations(),
                converged: out.trace.converged,
                wall_secs: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub scheme: String,
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub rows: Vec<SeedResult>,
    pub summary: Vec<SchemeSummary>,
}

impl MonteCarloResult {
    pub fn mean(&self, scheme: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.scheme == scheme).map(|s| s.mean)
    }

    /// Per-seed rates of `scheme`, ordered by seed.
    pub fn per_seed(&self, scheme: &str) -> Vec<f64> {
        let mut rows: Vec<&SeedResult> = self.rows.iter().filter(|r| r.scheme == scheme).collect();
        rows.sort_by_key(|r| r.seed);
        rows.iter().map(|r| r.sum_rate).collect()
    }

    /// Per-seed differences `a − b` over seeds present for both.
    pub fn paired_differences(&self, a: &str, b: &str) -> Vec<f64> {
        let lookup = |s: &str, seed: u64| self.rows.iter().find(|r| r.scheme == s && r.seed == seed).map(|r| r.sum_rate);
        let mut seeds: Vec<u64> = self.rows.iter().filter(|r| r.scheme == a).map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.into_iter().filter_map(|s| Some(lookup(a, s)? - lookup(b, s)?)).collect()
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Seeds `0..n_seeds`, every scheme on the same realization per seed.
pub fn monte_carlo(
    cfg: &SystemConfig,
    template: &Geometry,
    schemes: &[SchemeSpec],
    n_seeds: usize,
    master: u64,
) -> Result<MonteCarloResult> {
    if n_seeds == 0 {
        return Err(Error::Config("n_seeds must be at least 1".into()));
    }
    let per_seed: Vec<Vec<SeedResult>> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|seed| run_seed(cfg, template, schemes, master, seed))
        .collect::<Result<_>>()?;
    let rows: Vec<SeedResult> = per_seed.into_iter().flatten().collect();
    let summary = schemes
        .iter()
        .map(|s| {
            let name = s.name();
            let vals: Vec<f64> = rows.iter().filter(|r| r.scheme == name).map(|r| r.sum_rate).collect();
            let (mean, std_err) = mean_stderr(&vals);
            SchemeSummary { scheme: name, mean, std_err, n: vals.len() }
        })
        .collect();
    Ok(MonteCarloResult { rows, summary })
}
