//! Covariance update for fixed phases: water-filling on a surrogate bound.
//!
//! The Eve term is linearized around the previous covariance, leaving the
//! concave problem `max ln|I + H_B X H_B†| - tr(Phi X)` over the power ball.
//! For a dual variable `mu` the inner maximizer is a water-filling over the
//! eigenmodes of `Phibar^{-1/2} H_B† H_B Phibar^{-1/2}` with
//! `Phibar = Phi + mu I`; the power constraint is met by bisecting on `mu`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, CMat, HermitianEvd};
use crate::rates::{rate_raw, InputCovariance};

/// Relative eigenvalue cutoff for the numerical rank of the mode matrix.
const RANK_TOL: f64 = 1e-12;
/// Below this fraction of the largest eigenvalue, `Phi` is treated as
/// singular and the `mu = 0` evaluation is skipped.
const SINGULAR_TOL: f64 = 1e-12;
/// Bisection lower bracket.
const MU_LO: f64 = 1e-12;
/// Power residual target, relative to the budget. Much tighter than the
/// nominal 1e-8 so the surrogate-improvement chain holds to 1e-9 even when
/// the dual variable is large.
const POWER_TOL: f64 = 1e-11;
/// Iteration cap across bracketing and bisection.
const MAX_ITERS: usize = 200;

/// Outcome of the dual search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionReport {
    /// Dual variable at termination.
    pub mu: f64,
    /// Water-filling evaluations spent.
    pub iterations: usize,
    /// `|tr X - P0|` when the budget binds; `P0 - tr X` when slack.
    pub power_residual: f64,
    /// Budget did not bind (`mu` effectively zero).
    pub slack: bool,
}

/// Gradient of `ln|I + H_E X H_E†|` at `X_prev`:
/// `Phi = H_E† (I + H_E X_prev H_E†)^{-1} H_E`, Hermitian PSD.
pub fn eve_gradient_matrix(h_e: &CMat, x_prev: &CMat) -> Result<CMat> {
    let nt = h_e.ncols();
    if x_prev.nrows() != nt || x_prev.ncols() != nt {
        return Err(Error::Dimension {
            op: "eve_gradient_matrix",
            detail: format!(
                "channel {}x{} vs covariance {}x{}",
                h_e.nrows(),
                nt,
                x_prev.nrows(),
                x_prev.ncols()
            ),
        });
    }
    if h_e.nrows() == 0 {
        return Ok(CMat::zeros(nt, nt));
    }
    let gram = numerics::eye(h_e.nrows()) + h_e * x_prev * h_e.adjoint();
    let chol = numerics::cholesky_pd("eve_gradient_matrix", &numerics::hermitize(&gram))?;
    let solved = chol.solve(h_e);
    Ok(numerics::hermitize(&(h_e.adjoint() * solved)))
}

/// Surrogate secrecy objective at `X`, linearized around `X_prev`:
/// `ln|I + H_B X H_B†| - ln|I + H_E X_prev H_E†| - tr(Phi (X - X_prev))`.
pub fn surrogate_value(h_b: &CMat, h_e: &CMat, x: &CMat, x_prev: &CMat) -> Result<f64> {
    let phi = eve_gradient_matrix(h_e, x_prev)?;
    let bob = rate_raw(h_b, x)?;
    let eve_prev = rate_raw(h_e, x_prev)?;
    let correction = numerics::trace_re(&(&phi * (x - x_prev)));
    Ok(bob - eve_prev - correction)
}

/// Water-filling factors for one dual variable.
#[derive(Debug, Clone)]
pub struct CovSubproblem {
    pub mu: f64,
    /// `(Phi + mu I)^{-1/2}`.
    pub phi_bar_inv_sqrt: CMat,
    /// Eigenvectors of `Phibar^{-1/2} H_B† H_B Phibar^{-1/2}`.
    pub u: CMat,
    /// Its eigenvalues, descending, clamped at zero.
    pub sigma: Vec<f64>,
    /// Numerical rank of the mode matrix.
    pub rank: usize,
    /// Diagonal water-filled allocation `[1 - 1/sigma_j]_+`.
    pub xdot: Vec<f64>,
}

impl CovSubproblem {
    /// Solve the inner maximization for a given `mu >= 0`.
    pub fn solve(h_b: &CMat, phi: &CMat, mu: f64) -> Result<Self> {
        let phi_evd = numerics::hermitian_evd(phi)?;
        Self::solve_with_evd(h_b, &phi_evd, mu)
    }

    /// Same, reusing the eigendecomposition of `Phi` across `mu` values.
    pub fn solve_with_evd(h_b: &CMat, phi_evd: &HermitianEvd, mu: f64) -> Result<Self> {
        let nt = h_b.ncols();
        if phi_evd.values.len() != nt {
            return Err(Error::Dimension {
                op: "waterfill_given_mu",
                detail: format!("Phi of size {} vs Nt = {nt}", phi_evd.values.len()),
            });
        }
        let w_max = phi_evd.values.first().copied().unwrap_or(0.0).max(0.0);
        let w_min = phi_evd.values.last().copied().unwrap_or(0.0).max(0.0);
        if mu <= 0.0 && w_min <= SINGULAR_TOL * w_max.max(SINGULAR_TOL) {
            // Phibar is (numerically) singular: the unconstrained power is
            // unbounded, so the caller must bisect on mu > 0.
            return Err(Error::PowerDiverges);
        }
        // Phi is PSD up to roundoff; clamp before shifting by mu.
        let phi_bar_inv_sqrt = phi_evd.apply(|w| 1.0 / (w.max(0.0) + mu).sqrt());
        let scaled = h_b * &phi_bar_inv_sqrt;
        let modes = numerics::hermitize(&(scaled.adjoint() * &scaled));
        let evd = numerics::hermitian_evd(&modes)?;
        let sigma: Vec<f64> = evd.values.iter().map(|w| w.max(0.0)).collect();
        let s_max = sigma.first().copied().unwrap_or(0.0);
        let rank = sigma.iter().take_while(|&&s| s > RANK_TOL * s_max).count();
        let xdot: Vec<f64> = sigma
            .iter()
            .enumerate()
            .map(|(j, &s)| if j < rank { (1.0 - 1.0 / s).max(0.0) } else { 0.0 })
            .collect();
        Ok(CovSubproblem {
            mu,
            phi_bar_inv_sqrt,
            u: evd.vectors,
            sigma,
            rank,
            xdot,
        })
    }

    /// `X(mu) = Phibar^{-1/2} U Xdot U† Phibar^{-1/2}`.
    pub fn covariance(&self) -> CMat {
        let nt = self.u.nrows();
        let mut scaled = self.u.clone();
        for j in 0..nt {
            let s = Complex64::new(self.xdot[j], 0.0);
            for i in 0..nt {
                scaled[(i, j)] *= s;
            }
        }
        let inner = &scaled * self.u.adjoint();
        numerics::hermitize(&(&self.phi_bar_inv_sqrt * inner * &self.phi_bar_inv_sqrt))
    }

    /// `tr X(mu)` without forming the covariance: `sum_j xdot_j
    /// ||Phibar^{-1/2} u_j||^2`.
    pub fn power(&self) -> f64 {
        let cols = &self.phi_bar_inv_sqrt * &self.u;
        self.xdot
            .iter()
            .enumerate()
            .map(|(j, &x)| x * cols.column(j).norm_squared())
            .sum()
    }
}

/// Water-filled covariance candidate for one dual variable.
pub fn waterfill_given_mu(h_b: &CMat, phi: &CMat, mu: f64) -> Result<CMat> {
    Ok(CovSubproblem::solve(h_b, phi, mu)?.covariance())
}

/// Maximize the surrogate over the power ball: try `mu = 0` when `Phi` is
/// safely invertible, otherwise bisect `mu` until the budget binds.
pub fn optimize_covariance(
    h_b: &CMat,
    h_e: &CMat,
    x_prev: &InputCovariance,
    p0: f64,
) -> Result<(InputCovariance, BisectionReport)> {
    if !(p0 > 0.0) {
        return Err(Error::Domain {
            op: "optimize_covariance",
            detail: format!("power budget must be > 0, got {p0}"),
        });
    }
    let nt = h_b.ncols();
    if numerics::max_abs(h_b) == 0.0 {
        // The objective is nonincreasing in X when Bob hears nothing.
        return Ok((
            InputCovariance::zero(p0, nt),
            BisectionReport {
                mu: 0.0,
                iterations: 0,
                power_residual: p0,
                slack: true,
            },
        ));
    }
    let phi = eve_gradient_matrix(h_e, x_prev.matrix())?;
    let phi_evd = numerics::hermitian_evd(&phi)?;
    let mut iterations = 0usize;

    let eval = |mu: f64| -> Result<(CovSubproblem, f64)> {
        let sub = CovSubproblem::solve_with_evd(h_b, &phi_evd, mu)?;
        let p = sub.power();
        Ok((sub, p))
    };

    // mu = 0 short-circuit when Phi is comfortably positive definite.
    let w_max = phi_evd.values.first().copied().unwrap_or(0.0).max(0.0);
    let w_min = phi_evd.values.last().copied().unwrap_or(0.0).max(0.0);
    if w_min > SINGULAR_TOL * w_max.max(SINGULAR_TOL) {
        iterations += 1;
        let (sub, power) = eval(0.0)?;
        if power <= p0 * (1.0 + 1e-12) {
            return finish(sub, power, p0, iterations, true);
        }
    }

    // Bracket: power(mu_lo) > P0 >= power(mu_hi).
    let mut mu_lo = MU_LO;
    iterations += 1;
    match eval(mu_lo) {
        Ok((sub, power)) => {
            if power <= p0 {
                // Budget slack already at an essentially zero dual.
                return finish(sub, power, p0, iterations, true);
            }
        }
        Err(Error::PowerDiverges) | Err(Error::IllConditioned { .. }) => {
            // Treat as infinite power: valid infeasible-side bracket.
        }
        Err(e) => return Err(e),
    }
    let mut mu_hi = 1.0;
    let (mut best_sub, mut best_power) = loop {
        if iterations >= MAX_ITERS {
            return Err(Error::BisectionFailed {
                iterations,
                residual: f64::INFINITY,
            });
        }
        iterations += 1;
        let (sub, power) = eval(mu_hi)?;
        if power <= p0 {
            break (sub, power);
        }
        mu_lo = mu_hi;
        mu_hi *= 2.0;
    };

    while iterations < MAX_ITERS {
        if p0 - best_power <= POWER_TOL * p0 {
            break;
        }
        let width = mu_hi - mu_lo;
        if width <= f64::EPSILON * mu_hi.max(1.0) {
            break;
        }
        iterations += 1;
        let mid = 0.5 * (mu_lo + mu_hi);
        let (sub, power) = eval(mid)?;
        if power > p0 {
            mu_lo = mid;
        } else {
            mu_hi = mid;
            best_sub = sub;
            best_power = power;
        }
    }
    let residual = (best_power - p0).abs();
    if residual > 1e-8 * p0 {
        return Err(Error::BisectionFailed {
            iterations,
            residual,
        });
    }
    finish(best_sub, best_power, p0, iterations, false)
}

fn finish(
    sub: CovSubproblem,
    power: f64,
    p0: f64,
    iterations: usize,
    slack: bool,
) -> Result<(InputCovariance, BisectionReport)> {
    // Re-Hermitize and clip to the PSD cone to absorb roundoff.
    let x = numerics::clip_psd(&sub.covariance())?;
    let cov = InputCovariance::new(x, p0)?;
    Ok((
        cov,
        BisectionReport {
            mu: sub.mu,
            iterations,
            power_residual: (power - p0).abs(),
            slack,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
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

    fn random_feasible(nt: usize, p0: f64, rng: &mut ChaCha12Rng) -> CMat {
        let a = random_matrix(nt, nt, rng);
        let mut x = &a * a.adjoint();
        let tr = numerics::trace_re(&x);
        let frac: f64 = rng.random::<f64>();
        x *= Complex64::new(p0 * frac / tr.max(1e-300), 0.0);
        x
    }

    fn scalar(v: f64) -> CMat {
        CMat::from_element(1, 1, Complex64::new(v, 0.0))
    }

    #[test]
    fn gradient_at_zero_is_gram() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let h = random_matrix(2, 3, &mut rng);
        let phi = eve_gradient_matrix(&h, &CMat::zeros(3, 3)).unwrap();
        let gram = numerics::hermitize(&(h.adjoint() * &h));
        assert!(numerics::fro_norm(&(&phi - &gram)) < 1e-12 * numerics::fro_norm(&gram));
    }

    #[test]
    fn gradient_of_zero_channel_is_zero() {
        let phi = eve_gradient_matrix(&CMat::zeros(2, 3), &numerics::eye(3)).unwrap();
        assert!(numerics::fro_norm(&phi) == 0.0);
        // empty Eve (Ne = 0) likewise
        let phi = eve_gradient_matrix(&CMat::zeros(0, 3), &numerics::eye(3)).unwrap();
        assert_eq!(phi, CMat::zeros(3, 3));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let h = random_matrix(2, 3, &mut rng);
        let x0 = random_feasible(3, 1.0, &mut rng);
        let phi = eve_gradient_matrix(&h, &x0).unwrap();
        let f = |x: &CMat| rate_raw(&h, x).unwrap();
        let eps = 1e-5;
        for _ in 0..20 {
            let d = numerics::hermitize(&random_matrix(3, 3, &mut rng));
            let fp = f(&(&x0 + &d * Complex64::new(eps, 0.0)));
            let fm = f(&(&x0 - &d * Complex64::new(eps, 0.0)));
            let fd = (fp - fm) / (2.0 * eps);
            let inner = numerics::trace_re(&(&phi * &d));
            assert!(
                (fd - inner).abs() < 1e-6 * (1.0 + inner.abs()),
                "fd {fd} vs <Phi,D> {inner}"
            );
        }
    }

    #[test]
    fn surrogate_touches_at_x_prev() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let h_b = random_matrix(2, 3, &mut rng);
        let h_e = random_matrix(2, 3, &mut rng);
        let x_prev = random_feasible(3, 2.0, &mut rng);
        let sur = surrogate_value(&h_b, &h_e, &x_prev, &x_prev).unwrap();
        let exact = rate_raw(&h_b, &x_prev).unwrap() - rate_raw(&h_e, &x_prev).unwrap();
        assert!((sur - exact).abs() < 1e-10);
        // X = X_prev = 0 gives 0
        let z = CMat::zeros(3, 3);
        assert!(surrogate_value(&h_b, &h_e, &z, &z).unwrap().abs() < 1e-14);
    }

    #[test]
    fn surrogate_is_lower_bound() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..200 {
            let h_b = random_matrix(2, 3, &mut rng);
            let h_e = random_matrix(2, 3, &mut rng);
            let x_prev = random_feasible(3, 1.5, &mut rng);
            let x = random_feasible(3, 1.5, &mut rng);
            let sur = surrogate_value(&h_b, &h_e, &x, &x_prev).unwrap();
            let exact = rate_raw(&h_b, &x).unwrap() - rate_raw(&h_e, &x).unwrap();
            assert!(sur <= exact + 1e-9, "surrogate {sur} above exact {exact}");
        }
    }

    #[test]
    fn waterfill_scalar_kkt() {
        // H_B = 1, Phi = 0, mu = 0.5: sigma = 2, xdot = 1/2, X = 1
        let sub = CovSubproblem::solve(&scalar(1.0), &scalar(0.0), 0.5).unwrap();
        assert!((sub.sigma[0] - 2.0).abs() < 1e-12);
        assert!((sub.xdot[0] - 0.5).abs() < 1e-12);
        assert!((sub.covariance()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!((sub.power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn waterfill_inactive_streams() {
        // Phi = 0, mu = 1, H_B = diag(1, 0.5): sigma = (1, 0.25), X = 0
        let h = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        let x = waterfill_given_mu(&h, &CMat::zeros(2, 2), 1.0).unwrap();
        assert!(numerics::fro_norm(&x) < 1e-12);
        let sub = CovSubproblem::solve(&h, &CMat::zeros(2, 2), 1.0).unwrap();
        assert!((sub.sigma[0] - 1.0).abs() < 1e-12);
        assert!((sub.sigma[1] - 0.25).abs() < 1e-12);
        assert_eq!(sub.xdot, vec![0.0, 0.0]);
    }

    #[test]
    fn waterfill_zero_channel() {
        let x = waterfill_given_mu(&CMat::zeros(2, 3), &numerics::eye(3), 0.7).unwrap();
        assert!(numerics::fro_norm(&x) < 1e-12);
    }

    #[test]
    fn waterfill_signals_divergence_at_mu_zero() {
        // rank-deficient Phi at mu = 0
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let h = random_matrix(2, 3, &mut rng);
        let phi_low = {
            let a = random_matrix(3, 1, &mut rng);
            numerics::hermitize(&(&a * a.adjoint()))
        };
        assert!(matches!(
            CovSubproblem::solve(&h, &phi_low, 0.0),
            Err(Error::PowerDiverges)
        ));
    }

    #[test]
    fn power_nonincreasing_in_mu() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let h = random_matrix(3, 4, &mut rng);
        let phi = {
            let a = random_matrix(4, 4, &mut rng);
            numerics::hermitize(&(&a * a.adjoint())) * Complex64::new(0.1, 0.0)
        };
        let mut last = f64::INFINITY;
        for k in 1..40 {
            let mu = 0.05 * k as f64;
            let p = CovSubproblem::solve(&h, &phi, mu).unwrap().power();
            assert!(p <= last + 1e-9, "power grew at mu = {mu}");
            last = p;
        }
    }

    #[test]
    fn optimize_scalar_budget_binds() {
        // h = 1, Phi = 0 (no Eve), P0 = 2: X = 2
        let x_prev = InputCovariance::zero(2.0, 1);
        let (x, report) =
            optimize_covariance(&scalar(1.0), &CMat::zeros(0, 1), &x_prev, 2.0).unwrap();
        assert!((x.matrix()[(0, 0)].re - 2.0).abs() < 1e-7);
        assert!(!report.slack);
        assert!(report.power_residual <= 1e-8 * 2.0);
        // complementary slackness
        assert!(report.mu * (x.trace() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn optimize_classical_waterfilling() {
        // H_B = diag(1, 0.5), Phi = 0, P0 = 1: X = diag(1, 0)
        let h = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        let x_prev = InputCovariance::zero(1.0, 2);
        let (x, _) = optimize_covariance(&h, &CMat::zeros(0, 2), &x_prev, 1.0).unwrap();
        assert!((x.matrix()[(0, 0)].re - 1.0).abs() < 1e-7);
        assert!(x.matrix()[(1, 1)].norm() < 1e-7);
    }

    #[test]
    fn optimize_zero_channel_returns_zero() {
        let x_prev = InputCovariance::scaled_identity(1.0, 3);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let h_e = random_matrix(2, 3, &mut rng);
        let (x, report) = optimize_covariance(&CMat::zeros(2, 3), &h_e, &x_prev, 1.0).unwrap();
        assert!(numerics::fro_norm(x.matrix()) == 0.0);
        assert!(report.slack);
    }

    #[test]
    fn optimize_beats_random_feasible_points() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..20 {
            let nt = rng.random_range(1..5usize);
            let nr = rng.random_range(1..5usize);
            let ne = rng.random_range(1..5usize);
            let h_b = random_matrix(nr, nt, &mut rng);
            let h_e = random_matrix(ne, nt, &mut rng);
            let p0 = 0.5 + rng.random::<f64>();
            let x_prev_m = random_feasible(nt, p0, &mut rng);
            let x_prev = InputCovariance::new(x_prev_m, p0).unwrap();
            let (x_k, _) = optimize_covariance(&h_b, &h_e, &x_prev, p0).unwrap();
            let best = surrogate_value(&h_b, &h_e, x_k.matrix(), x_prev.matrix()).unwrap();
            for _ in 0..50 {
                let x = random_feasible(nt, p0, &mut rng);
                let v = surrogate_value(&h_b, &h_e, &x, x_prev.matrix()).unwrap();
                assert!(v <= best + 1e-7, "random point {v} beats optimum {best}");
            }
        }
    }

    #[test]
    fn improvement_chain_holds() {
        // C(theta, X_k) >= surrogate(X_k) >= surrogate(X_prev) = C(theta, X_prev)
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..50 {
            let h_b = random_matrix(3, 4, &mut rng);
            let h_e = random_matrix(2, 4, &mut rng);
            let p0 = 1.0 + rng.random::<f64>();
            let x_prev_m = random_feasible(4, p0, &mut rng);
            let x_prev = InputCovariance::new(x_prev_m.clone(), p0).unwrap();
            let (x_k, _) = optimize_covariance(&h_b, &h_e, &x_prev, p0).unwrap();

            let exact_new =
                rate_raw(&h_b, x_k.matrix()).unwrap() - rate_raw(&h_e, x_k.matrix()).unwrap();
            let sur_new = surrogate_value(&h_b, &h_e, x_k.matrix(), &x_prev_m).unwrap();
            let sur_old = surrogate_value(&h_b, &h_e, &x_prev_m, &x_prev_m).unwrap();
            let exact_old =
                rate_raw(&h_b, &x_prev_m).unwrap() - rate_raw(&h_e, &x_prev_m).unwrap();

            assert!(exact_new >= sur_new - 1e-9);
            assert!(sur_new >= sur_old - 1e-9);
            assert!((sur_old - exact_old).abs() < 1e-9);
        }
    }

    #[test]
    fn kkt_stationarity() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..20 {
            let h_b = random_matrix(3, 4, &mut rng);
            let h_e = random_matrix(2, 4, &mut rng);
            let p0 = 1.0;
            let x_prev = InputCovariance::new(random_feasible(4, p0, &mut rng), p0).unwrap();
            let (x_k, report) = optimize_covariance(&h_b, &h_e, &x_prev, p0).unwrap();
            let phi = eve_gradient_matrix(&h_e, x_prev.matrix()).unwrap();

            let gram = numerics::eye(3) + &h_b * x_k.matrix() * h_b.adjoint();
            let chol = numerics::cholesky_pd("kkt", &numerics::hermitize(&gram)).unwrap();
            let g = numerics::hermitize(&(h_b.adjoint() * chol.solve(&h_b)));
            let slack_dir = &g - &phi - numerics::eye(4) * Complex64::new(report.mu, 0.0);

            // globally <= 0 ...
            let (_, top) = numerics::eig_range(&numerics::hermitize(&slack_dir)).unwrap();
            assert!(top <= 1e-6, "max eigenvalue {top:.3e}");
            // ... and zero on active eigenvectors of X
            let evd = numerics::hermitian_evd(x_k.matrix()).unwrap();
            for (j, &w) in evd.values.iter().enumerate() {
                if w > 1e-8 * p0 {
                    let v = evd.vectors.column(j).into_owned();
                    let q = v.dotc(&(&slack_dir * &v)).re;
                    assert!(q.abs() < 1e-6, "active-direction residual {q:.3e}");
                }
            }
        }
    }

    #[test]
    fn returned_covariance_is_feasible() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..30 {
            let h_b = random_matrix(2, 3, &mut rng);
            let h_e = random_matrix(3, 3, &mut rng);
            let p0 = 0.25 + rng.random::<f64>();
            let x_prev = InputCovariance::new(random_feasible(3, p0, &mut rng), p0).unwrap();
            let (x_k, _) = optimize_covariance(&h_b, &h_e, &x_prev, p0).unwrap();
            let (w_min, _) = numerics::eig_range(x_k.matrix()).unwrap();
            assert!(w_min >= -1e-9 * p0);
            assert!(x_k.trace() <= p0 * (1.0 + 1e-8));
        }
    }
}
