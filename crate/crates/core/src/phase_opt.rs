//! Closed-form optimization of one reflection coefficient at a time.
//!
//! Fixing the covariance and every other phase, the Bob-side quadratic form
//! collapses to `P_i + theta Q_i + theta* Q_i†` with `Q_i` rank one, so the
//! coordinate objective becomes the scalar ratio
//!
//! ```text
//! f(theta) = (2 Re(gamma_b theta) + delta_b) / (2 Re(gamma_e theta) + delta_e)
//! ```
//!
//! whose maximizer over `|theta| = 1` is one of two stationary angles found
//! analytically. `gamma` and `delta` come from a rank-2 determinant identity
//! (one Hermitian solve per side) instead of the eigendecomposition of the
//! non-normal matrix `P_i^{-1} Q_i`, which is numerically fragile; the two
//! routes agree and the tests pin that down.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{self, CMat, CVec};
use crate::rates::{InputCovariance, PhaseVector};

/// Angles scanned by the fallback when the closed form hits a non-finite
/// intermediate.
const GRID_FALLBACK_POINTS: usize = 4096;
/// Relative flatness below which a side of the ratio is treated as constant.
const FLAT_TOL: f64 = 1e-15;
/// Roundoff allowance on the arcsin argument.
const ARCSIN_SLACK: f64 = 1e-9;

/// One-coordinate subproblem: matrices and scalars for element `i`.
#[derive(Debug, Clone)]
pub struct PhaseSubproblem {
    pub index: usize,
    /// Bob-side Hermitian PD part (Nr x Nr).
    pub p: CMat,
    /// Bob-side rank-1 part `Q_i = q_left q_right†`.
    pub q: CMat,
    /// Eve-side Hermitian PD part (Ne x Ne).
    pub r: CMat,
    /// Eve-side rank-1 part `S_i = s_left s_right†`.
    pub s: CMat,
    pub q_left: CVec,
    pub q_right: CVec,
    pub s_left: CVec,
    pub s_right: CVec,
    pub gamma_b: Complex64,
    pub gamma_e: Complex64,
    pub delta_b: f64,
    pub delta_e: f64,
    /// Reflection coefficient currently occupying the slot.
    pub current: Complex64,
}

impl PhaseSubproblem {
    pub fn lambda_b(&self) -> f64 {
        2.0 * self.gamma_b.norm()
    }

    pub fn lambda_e(&self) -> f64 {
        2.0 * self.gamma_e.norm()
    }

    /// The scalar ratio objective at a unit-modulus `theta`.
    pub fn ratio(&self, theta: Complex64) -> f64 {
        let num = 2.0 * (self.gamma_b * theta).re + self.delta_b;
        let den = 2.0 * (self.gamma_e * theta).re + self.delta_e;
        num / den
    }

    /// Coordinate objective in nats: `ln` of the ratio.
    pub fn objective(&self, theta: Complex64) -> f64 {
        self.ratio(theta).ln()
    }
}

/// `(gamma, delta)` of the rank-2 determinant identity: for `Q = u v†` and
/// Hermitian PD `P`,
///
/// ```text
/// |I + theta P^{-1} Q + theta* P^{-1} Q†| = 2 Re(gamma theta) + delta
/// ```
///
/// for all `|theta| = 1`, with `gamma = v† P^{-1} u` (the sole nonzero
/// eigenvalue of `P^{-1} Q`) and `delta = 1 + |gamma|^2 - (v†P^{-1}v)(u†P^{-1}u)`.
pub fn gamma_delta(p: &CMat, u: &CVec, v: &CVec) -> Result<(Complex64, f64)> {
    if u.len() != p.nrows() || v.len() != p.nrows() {
        return Err(Error::Dimension {
            op: "gamma_delta",
            detail: format!(
                "P is {}x{} but factors have lengths {} and {}",
                p.nrows(),
                p.ncols(),
                u.len(),
                v.len()
            ),
        });
    }
    let chol = numerics::cholesky_pd("gamma_delta", p)?;
    let pu = chol.solve(u);
    let pv = chol.solve(v);
    let gamma = v.dotc(&pu);
    let a = v.dotc(&pv).re;
    let b = u.dotc(&pu).re;
    let delta = 1.0 + gamma.norm_sqr() - a * b;
    Ok((gamma, delta))
}

/// Running-state of one Gauss-Seidel sweep.
///
/// `p_run = H_AB_hat + sum_j theta_j hbar_j hhat_j†` is maintained
/// incrementally as elements are accepted; the Eve analogue likewise.
struct SweepState {
    h_ai_hat: CMat,
    p_run: CMat,
    r_run: CMat,
}

impl SweepState {
    fn new(ch: &ChannelSet, theta: &PhaseVector, x: &InputCovariance) -> Result<Self> {
        let x_sqrt = x_sqrt_checked(x)?;
        let h_ab_hat = &ch.h_ab_bar * &x_sqrt;
        let h_ae_hat = &ch.h_ae_bar * &x_sqrt;
        let h_ai_hat = &ch.h_ai * &x_sqrt;

        let mut scaled = h_ai_hat.clone();
        for (i, &t) in theta.theta().iter().enumerate() {
            for j in 0..scaled.ncols() {
                scaled[(i, j)] *= t;
            }
        }
        let p_run = &h_ab_hat + &ch.h_ib_bar * &scaled;
        let r_run = &h_ae_hat + &ch.h_ie_bar * &scaled;
        Ok(SweepState {
            h_ai_hat,
            p_run,
            r_run,
        })
    }

    /// Column `hhat_i` of `H_AI_hat†`.
    fn h_hat(&self, i: usize) -> CVec {
        CVec::from_fn(self.h_ai_hat.ncols(), |k, _| self.h_ai_hat[(i, k)].conj())
    }

    fn subproblem(&self, ch: &ChannelSet, theta_i: Complex64, i: usize) -> Result<PhaseSubproblem> {
        let h_hat = self.h_hat(i);
        let h_bar: CVec = ch.h_ib_bar.column(i).into_owned();
        let h_tilde: CVec = ch.h_ie_bar.column(i).into_owned();
        let hh_norm2 = Complex64::new(h_hat.norm_squared(), 0.0);

        // Peel element i out of the running aggregate.
        let p_minus = &self.p_run - (&h_bar * h_hat.adjoint()) * theta_i;
        let r_minus = &self.r_run - (&h_tilde * h_hat.adjoint()) * theta_i;

        let p = numerics::hermitize(
            &(numerics::eye(ch.nr()) + &p_minus * p_minus.adjoint()
                + (&h_bar * h_bar.adjoint()) * hh_norm2),
        );
        let r = numerics::hermitize(
            &(numerics::eye(ch.ne()) + &r_minus * r_minus.adjoint()
                + (&h_tilde * h_tilde.adjoint()) * hh_norm2),
        );
        let q_right: CVec = &p_minus * &h_hat;
        let s_right: CVec = &r_minus * &h_hat;
        let q = &h_bar * q_right.adjoint();
        let s = &h_tilde * s_right.adjoint();

        let (gamma_b, delta_b) = gamma_delta(&p, &h_bar, &q_right)?;
        let (gamma_e, delta_e) = gamma_delta(&r, &h_tilde, &s_right)?;

        Ok(PhaseSubproblem {
            index: i,
            p,
            q,
            r,
            s,
            q_left: h_bar,
            q_right,
            s_left: h_tilde,
            s_right,
            gamma_b,
            gamma_e,
            delta_b,
            delta_e,
            current: theta_i,
        })
    }

    fn accept(&mut self, ch: &ChannelSet, i: usize, old: Complex64, new: Complex64) {
        let h_hat = self.h_hat(i);
        let h_bar: CVec = ch.h_ib_bar.column(i).into_owned();
        let h_tilde: CVec = ch.h_ie_bar.column(i).into_owned();
        let delta = new - old;
        self.p_run += (&h_bar * h_hat.adjoint()) * delta;
        self.r_run += (&h_tilde * h_hat.adjoint()) * delta;
    }
}

/// Principal PSD square root of the covariance, rejecting genuinely
/// indefinite inputs (eigenvalue below `-1e-8` of the scale).
fn x_sqrt_checked(x: &InputCovariance) -> Result<CMat> {
    let evd = numerics::hermitian_evd(x.matrix())?;
    if let (Some(&w_min), Some(&w_max)) = (evd.values.last(), evd.values.first()) {
        if w_min < -1e-8 * w_max.abs().max(1.0) {
            return Err(Error::Domain {
                op: "build_subproblem",
                detail: format!("covariance eigenvalue {w_min:.3e} is negative"),
            });
        }
    }
    Ok(evd.apply(|w| w.max(0.0).sqrt()))
}

/// Build the subproblem for element `i` from scratch.
pub fn build_subproblem(
    ch: &ChannelSet,
    theta: &PhaseVector,
    x: &InputCovariance,
    i: usize,
) -> Result<PhaseSubproblem> {
    if theta.len() != ch.n() {
        return Err(Error::Dimension {
            op: "build_subproblem",
            detail: format!("{} phases for {} IRS elements", theta.len(), ch.n()),
        });
    }
    if i >= ch.n() {
        return Err(Error::Dimension {
            op: "build_subproblem",
            detail: format!("element index {i} out of range for N = {}", ch.n()),
        });
    }
    let state = SweepState::new(ch, theta, x)?;
    state.subproblem(ch, theta.theta()[i], i)
}

/// Dense fallback scan over the unit circle.
fn grid_search(sp: &PhaseSubproblem) -> (Complex64, f64) {
    let mut best_phi = 0.0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..GRID_FALLBACK_POINTS {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / GRID_FALLBACK_POINTS as f64;
        let v = sp.ratio(Complex64::from_polar(1.0, phi));
        if v > best {
            best = v;
            best_phi = phi;
        }
    }
    (Complex64::from_polar(1.0, best_phi), best)
}

/// Best reflection coefficient for the subproblem, with the attained ratio.
///
/// Trivial cases keep or align the phase directly; otherwise the two
/// stationary angles of the ratio are compared (together with the current
/// coefficient and zero phase, which guards boundary degeneracies).
pub fn optimize_phase(sp: &PhaseSubproblem) -> Result<(Complex64, f64)> {
    let lam_b = sp.lambda_b();
    let lam_e = sp.lambda_e();
    let flat_b = lam_b <= FLAT_TOL * sp.delta_b.abs();
    let flat_e = lam_e <= FLAT_TOL * sp.delta_e.abs();

    if flat_b && flat_e {
        return Ok((sp.current, sp.ratio(sp.current)));
    }
    if flat_e {
        // maximize the numerator: align theta against gamma_b
        let theta = Complex64::from_polar(1.0, -sp.gamma_b.arg());
        return Ok(pick_best(sp, &[sp.current, theta]));
    }
    if flat_b {
        // minimize the denominator: anti-align theta against gamma_e
        let theta = Complex64::from_polar(1.0, std::f64::consts::PI - sp.gamma_e.arg());
        return Ok(pick_best(sp, &[sp.current, theta]));
    }

    // Centers: 2 Re(gamma theta) = lambda cos(phi - c) with c = -arg(gamma).
    let c_b = -sp.gamma_b.arg();
    let c_e = -sp.gamma_e.arg();
    let a = lam_b * sp.delta_e;
    let b = lam_e * sp.delta_b;
    let lambda_i = (a * a + b * b - 2.0 * a * b * (c_b - c_e).cos()).max(0.0).sqrt();
    if lambda_i <= FLAT_TOL * (a + b) {
        // lambda_i = 0 iff the ratio is constant on the circle.
        return Ok((sp.current, sp.ratio(sp.current)));
    }
    let psi = (a * c_b.sin() - b * c_e.sin()).atan2(a * c_b.cos() - b * c_e.cos());
    let s = lam_b * lam_e * (c_b - c_e).sin() / lambda_i;
    if !s.is_finite() || !psi.is_finite() {
        log::warn!(
            "phase update {}: non-finite stationary-point intermediates, using grid fallback",
            sp.index
        );
        return Ok(grid_search(sp));
    }
    if s.abs() > 1.0 + ARCSIN_SLACK {
        log::warn!(
            "phase update {}: arcsin argument {s:.6} out of range, using grid fallback",
            sp.index
        );
        return Ok(grid_search(sp));
    }
    let s = s.clamp(-1.0, 1.0);
    let phi_1 = s.asin() + psi;
    let phi_2 = std::f64::consts::PI - s.asin() + psi;
    let candidates = [
        sp.current,
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, phi_1),
        Complex64::from_polar(1.0, phi_2),
    ];
    Ok(pick_best(sp, &candidates))
}

fn pick_best(sp: &PhaseSubproblem, candidates: &[Complex64]) -> (Complex64, f64) {
    let mut best = candidates[0];
    let mut best_val = sp.ratio(best);
    for &c in &candidates[1..] {
        let v = sp.ratio(c);
        if v > best_val {
            best_val = v;
            best = c;
        }
    }
    (best, best_val)
}

/// One full Gauss-Seidel sweep: optimizes each element in turn, accepting
/// every update immediately. The unclamped secrecy objective is
/// nondecreasing across the sweep.
pub fn sweep_phases(
    ch: &ChannelSet,
    theta: &PhaseVector,
    x: &InputCovariance,
) -> Result<PhaseVector> {
    if theta.len() != ch.n() {
        return Err(Error::Dimension {
            op: "sweep_phases",
            detail: format!("{} phases for {} IRS elements", theta.len(), ch.n()),
        });
    }
    if ch.n() == 0 {
        return Ok(theta.clone());
    }
    let mut out = theta.clone();
    let mut state = SweepState::new(ch, theta, x)?;
    for i in 0..ch.n() {
        let old = out.theta()[i];
        let sp = state.subproblem(ch, old, i)?;
        let (new, _) = optimize_phase(&sp)?;
        state.accept(ch, i, old, new);
        out.set(i, new);
    }
    Ok(out)
}
