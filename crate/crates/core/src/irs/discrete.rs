//! Coordinate ascent over a uniform grid of `ℳ` phase levels.

use std::f64::consts::TAU;

use super::{f7_raw, CmcQpData};
use crate::error::{domain, Result};
use crate::linalg::C64;
use crate::model::PhaseVector;

/// Relative slack for treating a phase as equidistant between two levels.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DiscreteResult {
    pub theta: PhaseVector,
    pub trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Grid index `m` in `0..levels` whose phase `2πm/ℳ` is nearest to `eta`;
/// an exact midpoint resolves to the lower index.
pub fn nearest_level(eta: f64, levels: u32) -> u32 {
    let t = (eta / TAU * levels as f64).rem_euclid(levels as f64);
    let lo = t.floor();
    let frac = t - lo;
    let lo = lo as u32 % levels;
    let hi = (lo + 1) % levels;
    if (frac - 0.5).abs() <= TIE_TOL * levels as f64 {
        lo.min(hi)
    } else if frac > 0.5 {
        hi
    } else {
        lo
    }
}

fn level_value(alpha: f64, m: u32, levels: u32) -> C64 {
    C64::from_polar(alpha, TAU * m as f64 / levels as f64)
}

/// Coordinate-wise projection of `arg μ_i` onto the grid, repeated until a
/// sweep changes nothing or `max_sweeps` is reached.
pub fn discrete_sweep(theta: &PhaseVector, data: &CmcQpData, levels: u32, max_sweeps: usize) -> Result<DiscreteResult> {
    if levels < 2 {
        return Err(domain(format!("need at least 2 phase levels, got {levels}")));
    }
    let n = data.dim();
    let mut theta = theta.clone();
    let mut s = &data.zcal * &theta.theta;
    let mut trace = vec![f7_raw(&theta.theta, data)];
    for sweeps in 1..=max_sweeps {
        let mut changed = false;
        for i in 0..n {
            let mu = data.omega[i] - (s[i] - data.zcal[(i, i)] * theta.theta[i]);
            if mu.norm() == 0.0 {
                continue;
            }
            let new = level_value(theta.alpha, nearest_level(mu.arg(), levels), levels);
            let delta = new - theta.theta[i];
            // Ignore representational noise for an unchanged level.
            if delta.norm() > 1e-12 * theta.alpha {
                s.axpy(delta, &data.zcal.column(i), C64::new(1.0, 0.0));
                theta.theta[i] = new;
                changed = true;
            }
        }
        s = &data.zcal * &theta.theta;
        trace.push(f7_raw(&theta.theta, data));
        if !changed {
            return Ok(DiscreteResult { theta, trace, sweeps, converged: true });
        }
    }
    Ok(DiscreteResult { theta, trace, sweeps: max_sweeps, converged: false })
}

#[cfg(test)]
mod tests {
    use super::super::aso::aso_solve;
    use super::super::testutil::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn nearest_level_examples() {
        assert_eq!(nearest_level(0.1, 4), 0);
        assert_eq!(nearest_level(PI / 2.0 - 0.1, 4), 1);
        assert_eq!(nearest_level(-0.1, 4), 0);
        assert_eq!(nearest_level(2.0 * PI - 0.3, 4), 0);
        assert_eq!(nearest_level(PI, 2), 1);
        // midpoints go to the lower index
        assert_eq!(nearest_level(PI / 4.0, 4), 0);
        assert_eq!(nearest_level(3.0 * PI / 4.0, 4), 1);
        assert_eq!(nearest_level(-PI / 4.0, 4), 0);
        assert_eq!(nearest_level(PI / 2.0, 2), 0);
    }

    #[test]
    fn rejects_single_level() {
        let data = random_qp(1, 3);
        let t = PhaseVector::from_phases(1.0, &[0.0; 3]);
        assert!(discrete_sweep(&t, &data, 1, 10).is_err());
    }

    #[test]
    fn output_on_grid_and_monotone() {
        for seed in 0..20 {
            let data = random_qp(seed, 6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t0 = PhaseVector::random_discrete(1.0, 6, 8, &mut rng);
            let res = discrete_sweep(&t0, &data, 8, 200).unwrap();
            assert!(res.converged);
            assert!(res.theta.grid_defect(8) <= 1e-12);
            assert!(res.theta.modulus_defect() <= 1e-12);
            assert!(res.trace.windows(2).all(|p| p[1] >= p[0] - 1e-10 * p[0].abs().max(1.0)));
        }
    }

    #[test]
    fn fine_grid_approaches_continuous() {
        for seed in 0..10 {
            let data = random_qp(50 + seed, 4);
            let t0 = PhaseVector::from_phases(1.0, &[0.0; 4]);
            let cont = aso_solve(&t0, &data, 1e-14, 1000);
            let disc = discrete_sweep(&t0, &data, 1 << 16, 1000).unwrap();
            let (a, b) = (*cont.trace.last().unwrap(), *disc.trace.last().unwrap());
            assert!((a - b).abs() <= 1e-4 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn brute_force_optimum_is_fixed_point() {
        let mut equal = 0;
        for seed in 0..20 {
            let data = random_qp(200 + seed, 3);
            let (best, idx) = brute_force(&data, 1.0, 2);
            let phases: Vec<f64> = idx.iter().map(|&m| PI * m as f64).collect();
            let start = PhaseVector::from_phases(1.0, &phases);
            let res = discrete_sweep(&start, &data, 2, 100).unwrap();
            assert!((res.trace.last().unwrap() - best).abs() <= 1e-10 * best.abs().max(1.0));

            let (best4, _) = brute_force(&data, 1.0, 4);
            let from_zero = discrete_sweep(&PhaseVector::from_phases(1.0, &[0.0; 3]), &data, 4, 100).unwrap();
            let v = *from_zero.trace.last().unwrap();
            assert!(v <= best4 + 1e-10 * best4.abs().max(1.0));
            if (v - best4).abs() <= 1e-10 * best4.abs().max(1.0) {
                equal += 1;
            }
        }
        assert!(equal > 0);
    }
}
