//! Convex relaxation `|θ_i| ≤ α` solved by projected gradient ascent.

use super::{f7_raw, CmcQpData};
use crate::linalg::{max_eigenvalue, CVec, C64};
use crate::model::PhaseVector;

#[derive(Debug, Clone)]
pub struct QcrResult {
    /// Relaxed solution mapped onto the modulus-α circle.
    pub theta: PhaseVector,
    pub relaxed: CVec,
    pub relaxed_objective: f64,
    pub projected_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clip_to_disc(v: &mut CVec, alpha: f64) {
    for z in v.iter_mut() {
        let r = z.norm();
        if r > alpha {
            *z *= alpha / r;
        }
    }
}

fn to_circle(v: &CVec, fallback: &CVec, alpha: f64) -> CVec {
    v.iter()
        .zip(fallback.iter())
        .map(|(z, f)| if z.norm() > 0.0 { C64::from_polar(alpha, z.arg()) } else { *f })
        .collect::<Vec<_>>()
        .into()
}

/// Maximizes f7 over the discs `|θ_i| ≤ α` from `theta0` with step
/// `1/(2 λ_max(𝒵))`, stopping once an iterate moves by at most
/// `tol·α·√𝒩`, and finally projects each phase onto the circle.
pub fn qcr_solve(theta0: &PhaseVector, data: &CmcQpData, tol: f64, max_iter: usize) -> QcrResult {
    let alpha = theta0.alpha;
    let n = data.dim();
    let lmax = if n > 0 { max_eigenvalue(&data.zcal) } else { 0.0 };
    let mut x = theta0.theta.clone();
    let mut iterations = 0;
    let mut converged = false;
    if lmax <= f64::EPSILON * data.omega.norm() {
        // Linear objective: the boundary point aligned with ω is optimal.
        x = to_circle(&data.omega, &x, alpha);
        converged = true;
    } else {
        let step = 1.0 / lmax;
        let stop = tol * alpha * (n as f64).sqrt();
        while iterations < max_iter {
            iterations += 1;
            let grad = &data.omega - &data.zcal * &x;
            let mut next = &x + grad * C64::new(step, 0.0);
            clip_to_disc(&mut next, alpha);
            let moved = (&next - &x).norm();
            x = next;
            if moved <= stop {
                converged = true;
                break;
            }
        }
    }
    let theta = PhaseVector { theta: to_circle(&x, &theta0.theta, alpha), alpha };
    QcrResult {
        relaxed_objective: f7_raw(&x, data),
        projected_objective: f7_raw(&theta.theta, data),
        relaxed: x,
        theta,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::linalg::CMat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_objective_hits_boundary() {
        let mut data = random_qp(1, 5);
        data.zcal = CMat::zeros(5, 5);
        let res = qcr_solve(&PhaseVector::from_phases(0.8, &[0.0; 5]), &data, 1e-10, 1000);
        for i in 0..5 {
            assert!((res.theta.theta[i] - C64::from_polar(0.8, data.omega[i].arg())).norm() < 1e-12);
        }
        assert!((res.relaxed_objective - res.projected_objective).abs() < 1e-12);
    }

    #[test]
    fn dominant_omega_is_on_boundary() {
        let mut data = random_qp(2, 4);
        let lmax = max_eigenvalue(&data.zcal);
        let alpha = 1.0;
        let need = 2.0 * alpha * 4.0 * lmax;
        for w in data.omega.iter_mut() {
            *w *= need / w.norm();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let res = qcr_solve(&PhaseVector::random(alpha, 4, &mut rng), &data, 1e-12, 100_000);
        assert!(res.converged);
        assert!(res.relaxed.iter().all(|z| (z.norm() - alpha).abs() <= 1e-6));
    }

    #[test]
    fn relaxed_objective_dominates_and_ascends() {
        for seed in 0..10 {
            let data = random_qp(10 + seed, 6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t0 = PhaseVector::random(1.0, 6, &mut rng);
            // ascent per step
            let mut last = f7_raw(&t0.theta, &data);
            for it in 1..30 {
                let r = qcr_solve(&t0, &data, 0.0, it);
                assert!(r.relaxed_objective >= last - 1e-10 * last.abs().max(1.0));
                last = r.relaxed_objective;
            }
            let res = qcr_solve(&t0, &data, 1e-12, 100_000);
            assert!(res.relaxed_objective >= res.projected_objective - 1e-9);
            assert!(res.theta.modulus_defect() <= 1e-12);
            assert!(res.relaxed.iter().all(|z| z.norm() <= 1.0 + 1e-12));
        }
    }
}
