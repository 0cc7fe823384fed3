//! Effective channels and achievable/secrecy rates.
//!
//! With `Z(theta) = diag(theta)` the composite noise-normalized channels are
//! `H_B = H_AB/sigma_b + (H_IB/sigma_b) Z H_AI` toward Bob and the analogous
//! `H_E` toward Eve; rates are `ln|I + H X H†|` in nats.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{self, CMat};

/// Unit-modulus reflection coefficients of the IRS.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    theta: Vec<Complex64>,
    phi: Vec<f64>,
}

impl PhaseVector {
    /// Build from angles; coefficients are `exp(j phi_i)`.
    pub fn from_angles(phi: Vec<f64>) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        let phi: Vec<f64> = phi.into_iter().map(|a| a.rem_euclid(tau)).collect();
        let theta = phi.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
        PhaseVector { theta, phi }
    }

    /// All elements at zero phase.
    pub fn all_ones(n: usize) -> Self {
        Self::from_angles(vec![0.0; n])
    }

    /// Angles uniform on `[0, 2 pi)`.
    pub fn uniform_random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        Self::from_angles((0..n).map(|_| rng.random::<f64>() * tau).collect())
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[Complex64] {
        &self.theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Replace one coefficient with a unit-modulus value.
    pub fn set(&mut self, i: usize, theta: Complex64) {
        debug_assert!((theta.norm() - 1.0).abs() < 1e-9);
        self.phi[i] = theta.arg().rem_euclid(2.0 * std::f64::consts::PI);
        self.theta[i] = theta;
    }
}

/// Transmit covariance with its power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct InputCovariance {
    x: CMat,
    p0: f64,
}

impl InputCovariance {
    /// Validates Hermitian PSD (eigenvalues >= -1e-10 of the largest) and
    /// trace within the budget.
    pub fn new(x: CMat, p0: f64) -> Result<Self> {
        if !(p0 > 0.0) {
            return Err(Error::Domain {
                op: "InputCovariance::new",
                detail: format!("power budget must be > 0, got {p0}"),
            });
        }
        let (w_min, w_max) = numerics::eig_range(&x)?;
        if w_min < -1e-10 * w_max.abs().max(1e-300) && w_min < -1e-10 * p0 {
            return Err(Error::Domain {
                op: "InputCovariance::new",
                detail: format!("covariance has negative eigenvalue {w_min:.3e}"),
            });
        }
        let tr = numerics::trace_re(&x);
        if tr > p0 * (1.0 + 1e-8) {
            return Err(Error::Domain {
                op: "InputCovariance::new",
                detail: format!("trace {tr:.6e} exceeds budget {p0:.6e}"),
            });
        }
        Ok(InputCovariance { x, p0 })
    }

    /// `X0 = (P0/Nt) I`: feasible with full trace.
    pub fn scaled_identity(p0: f64, nt: usize) -> Self {
        let x = numerics::eye(nt) * Complex64::new(p0 / nt as f64, 0.0);
        InputCovariance { x, p0 }
    }

    /// Zero covariance (transmitter silent).
    pub fn zero(p0: f64, nt: usize) -> Self {
        InputCovariance {
            x: CMat::zeros(nt, nt),
            p0,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.x
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn trace(&self) -> f64 {
        numerics::trace_re(&self.x)
    }

    pub fn nt(&self) -> usize {
        self.x.nrows()
    }
}

/// The two composite noise-normalized channels for a fixed phase vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    pub h_b: CMat,
    pub h_e: CMat,
}

/// Achievable rates and the clamped secrecy rate, all in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub c_b: f64,
    pub c_e: f64,
    /// `[C_B - C_E]_+`.
    pub c_s: f64,
}

impl RateReport {
    /// Unclamped difference used internally by the optimizer.
    pub fn unclamped(&self) -> f64 {
        self.c_b - self.c_e
    }
}

/// `H Z(theta) H_AI` contribution folded into the direct links.
pub fn effective_channels(ch: &ChannelSet, theta: &PhaseVector) -> Result<EffectiveChannels> {
    if theta.len() != ch.n() {
        return Err(Error::Dimension {
            op: "effective_channels",
            detail: format!("{} phases for {} IRS elements", theta.len(), ch.n()),
        });
    }
    // diag(theta) * H_AI = H_AI with row i scaled by theta_i.
    let mut scaled = ch.h_ai.clone();
    for (i, &t) in theta.theta().iter().enumerate() {
        for j in 0..scaled.ncols() {
            scaled[(i, j)] *= t;
        }
    }
    Ok(EffectiveChannels {
        h_b: &ch.h_ab_bar + &ch.h_ib_bar * &scaled,
        h_e: &ch.h_ae_bar + &ch.h_ie_bar * &scaled,
    })
}

/// `ln|I + H X H†|` for a noise-normalized channel and a PSD covariance.
pub fn rate(h: &CMat, x: &InputCovariance) -> Result<f64> {
    rate_raw(h, x.matrix())
}

/// Rate for a raw covariance matrix the caller guarantees PSD.
pub(crate) fn rate_raw(h: &CMat, x: &CMat) -> Result<f64> {
    if h.ncols() != x.nrows() {
        return Err(Error::Dimension {
            op: "rate",
            detail: format!("channel {}x{} vs covariance {}x{}", h.nrows(), h.ncols(), x.nrows(), x.ncols()),
        });
    }
    let m = numerics::eye(h.nrows()) + h * x * h.adjoint();
    numerics::logdet_pd(&numerics::hermitize(&m))
}

/// Bob and Eve rates plus the clamped secrecy rate.
pub fn secrecy_rate(
    ch: &ChannelSet,
    theta: &PhaseVector,
    x: &InputCovariance,
) -> Result<RateReport> {
    let eff = effective_channels(ch, theta)?;
    let c_b = rate(&eff.h_b, x)?;
    let c_e = rate(&eff.h_e, x)?;
    Ok(RateReport {
        c_b,
        c_e,
        c_s: (c_b - c_e).max(0.0),
    })
}

/// Nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Diagonal phase matrix `Z(theta)`, for tests and diagnostics.
pub fn phase_diag(theta: &PhaseVector) -> CMat {
    CMat::from_diagonal(&DVector::from_vec(theta.theta().to_vec()))
}
