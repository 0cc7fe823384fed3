//! Dense complex linear-algebra primitives used by the optimizer.
//!
//! Everything here operates on `DMatrix<Complex<f64>>` and is a pure function
//! of its input: factorizations are deterministic (no randomized pivoting),
//! eigenvalues come back in descending order, and eigenvector phases are
//! fixed so repeated runs produce identical traces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

/// Relative asymmetry tolerance for Hermitian checks.
const HERMITIAN_TOL: f64 = 1e-9;
/// Eigenvalue ratio below which the inverse square root refuses to proceed.
const INV_SQRT_COND_TOL: f64 = 1e-14;

/// Largest entry magnitude, used to scale relative tolerances.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Maximum entrywise deviation from `M = M†`.
pub fn hermitian_asymmetry(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// `(M + M†)/2`, absorbing roundoff from products like `A A†`.
pub fn hermitize(m: &CMat) -> CMat {
    let half = Complex64::new(0.5, 0.0);
    (m + m.adjoint()) * half
}

fn require_square(op: &'static str, m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            op,
            detail: format!("expected square matrix, got {}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

fn require_hermitian(op: &'static str, m: &CMat) -> Result<()> {
    require_square(op, m)?;
    let scale = max_abs(m).max(1.0);
    let asym = hermitian_asymmetry(m);
    if asym > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { op, asym });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix: `M = U diag(w) U†`.
#[derive(Debug, Clone)]
pub struct HermitianEvd {
    /// Unitary eigenvector matrix; column `j` pairs with `values[j]`.
    pub vectors: CMat,
    /// Real eigenvalues in descending order.
    pub values: Vec<f64>,
}

impl HermitianEvd {
    /// `U diag(f(w)) U†` for a real function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = Complex64::new(f(self.values[j]), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Hermitian eigendecomposition with deterministic ordering and phase.
///
/// Eigenvalues are returned descending; each eigenvector is rotated so its
/// largest-magnitude component is real and positive.
pub fn hermitian_evd(m: &CMat) -> Result<HermitianEvd> {
    require_hermitian("hermitian_evd", m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEvd {
            vectors: CMat::zeros(0, 0),
            values: Vec::new(),
        });
    }
    let sym = nalgebra::SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        sym.eigenvalues[b]
            .partial_cmp(&sym.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let mut vectors = CMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(sym.eigenvalues[src]);
        let col = sym.eigenvectors.column(src);
        // Fix the phase: largest-magnitude component becomes real positive.
        let mut best = 0usize;
        let mut best_mag = 0.0f64;
        for (i, z) in col.iter().enumerate() {
            let mag = z.norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        let phase = if best_mag > 0.0 {
            col[best].conj() / Complex64::new(best_mag, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            vectors[(i, dst)] = col[i] * phase;
        }
    }
    Ok(HermitianEvd { vectors, values })
}

/// Cholesky factorization that actually rejects indefinite input.
///
/// nalgebra's complex Cholesky takes complex square roots of negative
/// pivots instead of failing, so the pivots are validated here: each must
/// be real positive with negligible imaginary part.
pub fn cholesky_pd(op: &'static str, m: &CMat) -> Result<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
    require_hermitian(op, m)?;
    let chol =
        nalgebra::Cholesky::new(hermitize(m)).ok_or(Error::NotPositiveDefinite { op })?;
    {
        let l = chol.l_dirty();
        for i in 0..m.nrows() {
            let d = l[(i, i)];
            if !(d.re > 0.0) || d.im.abs() > 1e-8 * d.re {
                return Err(Error::NotPositiveDefinite { op });
            }
        }
    }
    Ok(chol)
}

/// `ln|M|` for Hermitian positive definite `M`, via Cholesky.
pub fn logdet_pd(m: &CMat) -> Result<f64> {
    let chol = cholesky_pd("logdet_pd", m)?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].re.ln();
    }
    Ok(2.0 * acc)
}

/// Principal inverse square root `M^{-1/2}` of a Hermitian PD matrix.
pub fn inv_sqrt_hpd(m: &CMat) -> Result<CMat> {
    let evd = hermitian_evd(m)?;
    if evd.values.is_empty() {
        return Ok(CMat::zeros(0, 0));
    }
    let w_max = evd.values[0];
    let w_min = *evd.values.last().expect("nonempty");
    if w_min <= 0.0 {
        return Err(Error::NotPositiveDefinite { op: "inv_sqrt_hpd" });
    }
    if w_min <= INV_SQRT_COND_TOL * w_max {
        return Err(Error::IllConditioned {
            op: "inv_sqrt_hpd",
            ratio: w_min / w_max,
        });
    }
    Ok(evd.apply(|w| 1.0 / w.sqrt()))
}

/// Principal PSD square root, clamping slightly negative eigenvalues to 0.
///
/// Eigenvalues below `-1e-10 * max` are rejected as genuinely indefinite.
pub fn sqrt_psd(m: &CMat) -> Result<CMat> {
    let evd = hermitian_evd(m)?;
    if evd.values.is_empty() {
        return Ok(CMat::zeros(0, 0));
    }
    let scale = evd.values[0].abs().max(1e-300);
    if let Some(&w_min) = evd.values.last() {
        if w_min < -1e-10 * scale {
            return Err(Error::Domain {
                op: "sqrt_psd",
                detail: format!("eigenvalue {w_min:.3e} below PSD tolerance"),
            });
        }
    }
    Ok(evd.apply(|w| w.max(0.0).sqrt()))
}

/// Smallest and largest eigenvalues of a Hermitian matrix.
pub fn eig_range(m: &CMat) -> Result<(f64, f64)> {
    let evd = hermitian_evd(m)?;
    if evd.values.is_empty() {
        return Ok((0.0, 0.0));
    }
    Ok((*evd.values.last().expect("nonempty"), evd.values[0]))
}

/// Clip a Hermitian matrix to the PSD cone: eigenvalues floored at zero.
pub fn clip_psd(m: &CMat) -> Result<CMat> {
    let evd = hermitian_evd(m)?;
    Ok(evd.apply(|w| w.max(0.0)))
}

/// Real trace of a (numerically Hermitian) matrix.
pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// Frobenius norm.
pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Complex identity matrix.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cgauss(rng: &mut ChaCha12Rng) -> Complex64 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) / 2f64.sqrt()
    }

    fn random_matrix(n: usize, m: usize, rng: &mut ChaCha12Rng) -> CMat {
        CMat::from_fn(n, m, |_, _| cgauss(rng))
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha12Rng) -> CMat {
        let a = random_matrix(n, n, rng);
        hermitize(&a)
    }

    fn random_hpd(n: usize, rng: &mut ChaCha12Rng) -> CMat {
        let a = random_matrix(n, n, rng);
        &a * a.adjoint() + eye(n) * Complex64::new(0.5, 0.0)
    }

    #[test]
    fn evd_identity() {
        let evd = hermitian_evd(&eye(3)).unwrap();
        for w in &evd.values {
            assert!((w - 1.0).abs() < 1e-12);
        }
        let res = &evd.vectors * evd.vectors.adjoint() - eye(3);
        assert!(fro_norm(&res) < 1e-10);
    }

    #[test]
    fn evd_diagonal_descending() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(5.0, 0.0),
        ]));
        let evd = hermitian_evd(&m).unwrap();
        assert!((evd.values[0] - 5.0).abs() < 1e-12);
        assert!((evd.values[1] - 2.0).abs() < 1e-12);
        // Phase fix makes each column's largest entry real positive.
        for j in 0..2 {
            let col = evd.vectors.column(j);
            let mag: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((mag - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn evd_reconstructs_random_hermitian() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let m = random_hermitian(4, &mut rng);
        let evd = hermitian_evd(&m).unwrap();
        let rebuilt = evd.apply(|w| w);
        let rel = fro_norm(&(&rebuilt - &m)) / fro_norm(&m).max(1e-300);
        assert!(rel < 1e-10, "reconstruction residual {rel:.3e}");
        let unit = &evd.vectors * evd.vectors.adjoint() - eye(4);
        assert!(fro_norm(&unit) < 1e-10);
    }

    #[test]
    fn evd_rejects_non_square_and_non_hermitian() {
        let rect = CMat::zeros(2, 3);
        assert!(matches!(
            hermitian_evd(&rect),
            Err(Error::Dimension { .. })
        ));
        let mut m = eye(2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            hermitian_evd(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn evd_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let m = random_hermitian(5, &mut rng);
        let a = hermitian_evd(&m).unwrap();
        let b = hermitian_evd(&m).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn logdet_identity_is_zero() {
        assert!(logdet_pd(&eye(4)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn logdet_diag_e_e2() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::new(std::f64::consts::E, 0.0),
            Complex64::new(std::f64::consts::E * std::f64::consts::E, 0.0),
        ]));
        assert!((logdet_pd(&m).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn logdet_matches_evd_eigenvalues() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let m = random_hpd(5, &mut rng);
        let ld = logdet_pd(&m).unwrap();
        let evd = hermitian_evd(&m).unwrap();
        let by_eig: f64 = evd.values.iter().map(|w| w.ln()).sum();
        assert!((ld - by_eig).abs() < 1e-10);
    }

    #[test]
    fn logdet_rejects_indefinite() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-0.5, 0.0),
        ]));
        assert!(matches!(
            logdet_pd(&m),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn inv_sqrt_identity_and_diag() {
        assert!(fro_norm(&(inv_sqrt_hpd(&eye(3)).unwrap() - eye(3))) < 1e-12);
        let m = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::new(4.0, 0.0),
            Complex64::new(9.0, 0.0),
        ]));
        let s = inv_sqrt_hpd(&m).unwrap();
        assert!((s[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((s[(1, 1)].re - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn inv_sqrt_sandwich_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let m = random_hpd(4, &mut rng);
        let s = inv_sqrt_hpd(&m).unwrap();
        let sandwich = &s * &m * &s;
        assert!(fro_norm(&(&sandwich - &eye(4))) < 1e-9);
        // Commutes with M: both are functions of the same eigenbasis.
        let comm = &s * &m - &m * &s;
        assert!(fro_norm(&comm) < 1e-9);
    }

    #[test]
    fn inv_sqrt_rejects_ill_conditioned() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1e-16, 0.0),
        ]));
        assert!(matches!(
            inv_sqrt_hpd(&m),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn exp_logdet_matches_eigenvalue_product() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..10 {
            let m = random_hpd(4, &mut rng);
            let prod: f64 = hermitian_evd(&m).unwrap().values.iter().product();
            let ld = logdet_pd(&m).unwrap();
            assert!((ld.exp() - prod).abs() <= 1e-8 * prod.abs().max(1.0));
        }
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let a = random_matrix(3, 2, &mut rng);
        let m = &a * a.adjoint(); // rank-2 PSD
        let s = sqrt_psd(&m).unwrap();
        assert!(fro_norm(&(&s * &s - &m)) < 1e-9);
    }
}
