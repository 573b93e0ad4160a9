//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Unit-modulus complex number `e^{j·phase}`.
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn frob_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Hermitian part `(M + Mᴴ)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are returned in
/// ascending order together with the matching unit eigenvectors (columns).
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    eigh(m).0.last().copied().unwrap_or(0.0)
}

/// Reassemble `V diag(f(λ)) Vᴴ` from an eigen-decomposition.
pub fn eig_compose(values: &[f64], vectors: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let s = f(v);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Nearest positive-semidefinite matrix in Frobenius norm.
pub fn project_psd(m: &CMat) -> CMat {
    let (values, vectors) = eigh(m);
    eig_compose(&values, &vectors, |v| v.max(0.0))
}

/// Hermitian positive-definite inverse via Cholesky. Returns `None` when the
/// factorization fails or the smallest pivot is below `floor` relative to the
/// largest diagonal entry.
pub fn hpd_inverse(m: &CMat, floor: f64) -> Option<CMat> {
    let h = hermitian_part(m);
    let chol = h.clone().cholesky()?;
    let l = chol.l();
    let max_diag = h.diagonal().iter().map(|z| z.re).fold(0.0, f64::max);
    let min_pivot = l.diagonal().iter().map(|z| z.re * z.re).fold(f64::INFINITY, f64::min);
    if !(min_pivot > floor * max_diag.max(f64::MIN_POSITIVE)) {
        return None;
    }
    Some(chol.inverse())
}

/// Moore–Penrose style inverse of a Hermitian PSD matrix; eigenvalues below
/// `rel_floor·λ_max` are treated as zero.
pub fn psd_pinv(m: &CMat, rel_floor: f64) -> CMat {
    let (values, vectors) = eigh(m);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let cut = rel_floor * top;
    eig_compose(&values, &vectors, |v| if v > cut && v > 0.0 { 1.0 / v } else { 0.0 })
}

/// Inverse of a Hermitian PSD matrix, falling back to the floored
/// pseudo-inverse when it is numerically singular.
pub fn hpd_solve_or_pinv(m: &CMat, rel_floor: f64) -> CMat {
    hpd_inverse(m, rel_floor).unwrap_or_else(|| psd_pinv(m, rel_floor))
}

/// `log det` of a Hermitian positive-definite matrix (natural log).
pub fn logdet_hpd(m: &CMat) -> Option<f64> {
    let chol = hermitian_part(m).cholesky()?;
    Some(
        chol.l()
            .diagonal()
            .iter()
            .map(|z| 2.0 * z.re.ln())
            .sum(),
    )
}

/// Determinant of a general square complex matrix via LU.
pub fn det(m: &CMat) -> C64 {
    m.clone().determinant()
}

/// `log det` of a general square complex matrix (principal branch of the
/// complex log, returned as a complex number).
pub fn logdet_general(m: &CMat) -> C64 {
    det(m).ln()
}

/// Kronecker product of two column vectors.
pub fn kron(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

/// Real inner product `Re Tr(Aᴴ B)` on matrices viewed as real vectors.
pub fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hpd(n: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        &a * a.adjoint() + identity(n) * c(0.1, 0.0)
    }

    #[test]
    fn eigh_reconstructs() {
        let m = random_hpd(5, 3);
        let (values, vectors) = eigh(&m);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let back = eig_compose(&values, &vectors, |v| v);
        assert!((back - &m).norm() < 1e-10);
    }

    #[test]
    fn inverse_and_logdet_agree_with_lu() {
        let m = random_hpd(4, 9);
        let inv = hpd_inverse(&m, 1e-12).unwrap();
        assert!((&inv * &m - identity(4)).norm() < 1e-10);
        let ld = logdet_hpd(&m).unwrap();
        let lu = logdet_general(&m);
        assert!((ld - lu.re).abs() < 1e-10);
        assert!(lu.im.abs() < 1e-10);
    }

    #[test]
    fn pinv_on_rank_deficient() {
        let v = CMat::from_column_slice(3, 1, &[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)]);
        let m = &v * v.adjoint();
        assert!(hpd_inverse(&m, 1e-10).is_none());
        let p = hpd_solve_or_pinv(&m, 1e-10);
        assert!((&m * &p * &m - &m).norm() < 1e-10);
    }

    #[test]
    fn psd_projection_clips_negative_spectrum() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0, 0.0), c(-1.0, 0.0)]));
        let p = project_psd(&m);
        assert!((p[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!(p[(1, 1)].norm() < 1e-12);
    }
}
