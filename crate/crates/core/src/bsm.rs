//! Block successive maximization driver.
//!
//! One outer iteration sweeps every phase shift (exact closed-form
//! coordinate updates) and then refreshes the covariance by water-filling
//! the surrogate bound. The unclamped objective never decreases along
//! either half-step; the driver asserts that chain and records a trace.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, Seed, StreamPurpose};
use crate::cov_opt::optimize_covariance;
use crate::error::{Error, Result};
use crate::numerics::CMat;
use crate::phase_opt::sweep_phases;
use crate::rates::{effective_channels, secrecy_rate, InputCovariance, PhaseVector, RateReport};

/// Phase-shift initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseInit {
    AllOnes,
    /// Avoids the all-ones symmetry trap on symmetric geometries.
    #[default]
    UniformRandom,
}

/// Covariance initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovInit {
    /// `X0 = (P0/Nt) I`: feasible with full trace.
    #[default]
    ScaledIdentity,
}

/// Driver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BsmConfig {
    pub max_iterations: usize,
    /// Stop when `|delta| <= rel_tolerance * (1 + |objective|)`.
    pub rel_tolerance: f64,
    pub phase_init: PhaseInit,
    pub cov_init: CovInit,
    /// Allowed backward slip of the unclamped objective before the run is
    /// declared buggy.
    pub guard_tolerance: f64,
}

impl Default for BsmConfig {
    fn default() -> Self {
        BsmConfig {
            max_iterations: 500,
            rel_tolerance: 1e-6,
            phase_init: PhaseInit::default(),
            cov_init: CovInit::default(),
            guard_tolerance: 1e-8,
        }
    }
}

impl BsmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.rel_tolerance > 0.0) || !(self.guard_tolerance > 0.0) {
            return Err(Error::Config("tolerances must be > 0".into()));
        }
        Ok(())
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Outer iteration index; 0 is the initial point.
    pub k: usize,
    pub c_s: f64,
    pub c_b: f64,
    pub c_e: f64,
    /// Wall time since the run started. Kept out of serialized traces so
    /// replayed experiments emit byte-identical files.
    #[serde(skip)]
    pub elapsed_s: f64,
}

/// Full record of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iterations: Vec<IterationRecord>,
    /// Final phase angles.
    pub final_phi: Vec<f64>,
    /// Final covariance matrix.
    pub final_x: CMat,
    /// Relative-change criterion met before the iteration cap.
    pub converged: bool,
}

impl IterationTrace {
    pub fn final_record(&self) -> &IterationRecord {
        self.iterations.last().expect("trace has the initial point")
    }

    pub fn final_cs(&self) -> f64 {
        self.final_record().c_s
    }

    pub fn final_report(&self) -> RateReport {
        let r = self.final_record();
        RateReport {
            c_b: r.c_b,
            c_e: r.c_e,
            c_s: r.c_s,
        }
    }

    pub fn final_phases(&self) -> PhaseVector {
        PhaseVector::from_angles(self.final_phi.clone())
    }
}

/// Initial iterate per the configured schemes.
pub fn init_point(
    cfg: &BsmConfig,
    ch: &ChannelSet,
    p0: f64,
    seed: &Seed,
) -> (PhaseVector, InputCovariance) {
    let theta = match cfg.phase_init {
        PhaseInit::AllOnes => PhaseVector::all_ones(ch.n()),
        PhaseInit::UniformRandom => {
            let mut rng = seed.stream(StreamPurpose::PhaseInit);
            PhaseVector::uniform_random(ch.n(), &mut rng)
        }
    };
    let x0 = match cfg.cov_init {
        CovInit::ScaledIdentity => InputCovariance::scaled_identity(p0, ch.nt()),
    };
    (theta, x0)
}

/// Run from the configured initial point.
pub fn run_bsm(ch: &ChannelSet, p0: f64, cfg: &BsmConfig, seed: &Seed) -> Result<IterationTrace> {
    let (theta0, x0) = init_point(cfg, ch, p0, seed);
    run_bsm_from(ch, theta0, x0, cfg)
}

/// Run from an explicit feasible iterate.
pub fn run_bsm_from(
    ch: &ChannelSet,
    theta0: PhaseVector,
    x0: InputCovariance,
    cfg: &BsmConfig,
) -> Result<IterationTrace> {
    run_loop(ch, theta0, x0, cfg, true)
}

/// Covariance-only iteration: phases stay fixed, the covariance is updated
/// to a stationary point of the surrogate scheme.
pub fn run_covariance_only(
    ch: &ChannelSet,
    theta: PhaseVector,
    x0: InputCovariance,
    cfg: &BsmConfig,
) -> Result<IterationTrace> {
    run_loop(ch, theta, x0, cfg, false)
}

fn run_loop(
    ch: &ChannelSet,
    mut theta: PhaseVector,
    mut x: InputCovariance,
    cfg: &BsmConfig,
    sweep: bool,
) -> Result<IterationTrace> {
    cfg.validate()?;
    let p0 = x.p0();
    let start = Instant::now();

    let first = secrecy_rate(ch, &theta, &x)?;
    let mut iterations = vec![IterationRecord {
        k: 0,
        c_s: first.c_s,
        c_b: first.c_b,
        c_e: first.c_e,
        elapsed_s: start.elapsed().as_secs_f64(),
    }];
    let mut obj_prev = first.unclamped();
    let mut converged = false;

    for k in 1..=cfg.max_iterations {
        if sweep {
            theta = sweep_phases(ch, &theta, &x)?;
        }
        // Lemma-1 chain, first link: phases may only improve the objective.
        let mid = secrecy_rate(ch, &theta, &x)?;
        if mid.unclamped() < obj_prev - cfg.guard_tolerance {
            return Err(Error::MonotonicityViolated {
                iteration: k,
                prev: obj_prev,
                next: mid.unclamped(),
            });
        }

        let eff = effective_channels(ch, &theta)?;
        let (x_new, _) = optimize_covariance(&eff.h_b, &eff.h_e, &x, p0)?;
        x = x_new;

        let rep = secrecy_rate(ch, &theta, &x)?;
        if rep.unclamped() < mid.unclamped() - cfg.guard_tolerance {
            return Err(Error::MonotonicityViolated {
                iteration: k,
                prev: mid.unclamped(),
                next: rep.unclamped(),
            });
        }
        iterations.push(IterationRecord {
            k,
            c_s: rep.c_s,
            c_b: rep.c_b,
            c_e: rep.c_e,
            elapsed_s: start.elapsed().as_secs_f64(),
        });

        let delta = rep.unclamped() - obj_prev;
        obj_prev = rep.unclamped();
        if delta.abs() <= cfg.rel_tolerance * (1.0 + obj_prev.abs()) {
            converged = true;
            break;
        }
    }

    Ok(IterationTrace {
        iterations,
        final_phi: theta.phi().to_vec(),
        final_x: x.matrix().clone(),
        converged,
    })
}
