//! Experiment harness: Monte Carlo sweeps, baselines and result records.
//!
//! Trials are independent tasks keyed by `(master seed, trial index)`; they
//! may run concurrently and the aggregated output is identical for any
//! scheduling. Wall-clock timing stays in memory so replayed experiments
//! write byte-identical files.

mod emit;

pub use emit::{emit_results, EmittedFiles};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bsm::{
    init_point, run_bsm, run_bsm_from, run_covariance_only, BsmConfig, IterationTrace,
};
use crate::channel::{draw_channels, ChannelSet, GeometryConfig, Seed, StreamPurpose};
use crate::error::{Error, Result};
use crate::rates::{InputCovariance, PhaseVector};

/// Which experiment a spec describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// One configuration point.
    Single,
    /// One point with full per-iteration traces, cold-started.
    Convergence,
    /// Secrecy rate against the number of reflecting elements.
    SweepN,
    /// Secrecy rate against the number of eavesdropper antennas.
    SweepNe,
    /// Secrecy rate against the transmit power budget.
    SweepPower,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Single => "single",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::SweepN => "sweep-n",
            ExperimentKind::SweepNe => "sweep-ne",
            ExperimentKind::SweepPower => "sweep-power",
        }
    }
}

/// Optional comparison runs executed per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BaselineToggles {
    pub no_irs: bool,
    pub random_phase: bool,
}

/// Complete, replayable description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub geometry: GeometryConfig,
    pub bsm: BsmConfig,
    /// Power budgets in watts (input helpers accept dBm).
    pub p0_watts: Vec<f64>,
    /// IRS element counts to sweep.
    pub n_values: Vec<usize>,
    /// Eve antenna counts to sweep.
    pub ne_values: Vec<usize>,
    pub trials: u64,
    pub master_seed: u64,
    pub baselines: BaselineToggles,
    /// Embed full per-iteration traces in the JSON output.
    pub record_traces: bool,
}

impl ExperimentSpec {
    /// Spec with per-kind defaults applied on top of a geometry.
    pub fn new(kind: ExperimentKind, geometry: GeometryConfig, bsm: BsmConfig) -> Self {
        let p25 = crate::channel::dbm_to_watts(25.0);
        let (p0_watts, n_values, ne_values, trials) = match kind {
            ExperimentKind::Single => (vec![p25], vec![geometry.n], vec![geometry.ne], 1),
            ExperimentKind::Convergence => (vec![p25], vec![geometry.n], vec![geometry.ne], 1),
            ExperimentKind::SweepN => (vec![p25], vec![9, 25, 49], vec![geometry.ne], 100),
            ExperimentKind::SweepNe => (vec![p25], vec![geometry.n], vec![2, 4], 100),
            ExperimentKind::SweepPower => (
                [0.0, 10.0, 20.0, 30.0, 40.0]
                    .iter()
                    .map(|&d| crate::channel::dbm_to_watts(d))
                    .collect(),
                vec![geometry.n],
                vec![geometry.ne],
                50,
            ),
        };
        ExperimentSpec {
            kind,
            geometry,
            bsm,
            p0_watts,
            n_values,
            ne_values,
            trials,
            master_seed: 2024,
            baselines: BaselineToggles::default(),
            record_traces: matches!(kind, ExperimentKind::Convergence),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.bsm.validate()?;
        if self.p0_watts.is_empty() || self.n_values.is_empty() || self.ne_values.is_empty() {
            return Err(Error::Config("sweep lists must be nonempty".into()));
        }
        if self.p0_watts.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Config("power budgets must be > 0".into()));
        }
        if self.ne_values.iter().any(|&ne| ne == 0) {
            return Err(Error::Config("Ne must be >= 1".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        Ok(())
    }

    /// Sweep points in their fixed evaluation order.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &ne in &self.ne_values {
                for &p0 in &self.p0_watts {
                    out.push(SweepPoint { n, ne, p0_watts: p0 });
                }
            }
        }
        out
    }
}

/// One (N, Ne, P0) combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub ne: usize,
    pub p0_watts: f64,
}

/// Everything recorded for a single trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub cs_nats: Option<f64>,
    pub c_b_nats: Option<f64>,
    pub c_e_nats: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_irs_cs_nats: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_phase_cs_nats: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<IterationTrace>,
}

/// Aggregated statistics at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub point: SweepPoint,
    pub trials: u64,
    pub failures: u64,
    pub mean_cs_nats: f64,
    pub stderr_cs_nats: f64,
    pub mean_cs_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_no_irs_cs_nats: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr_no_irs_cs_nats: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_random_phase_cs_nats: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr_random_phase_cs_nats: Option<f64>,
    pub per_trial: Vec<TrialOutcome>,
    /// Wall time spent on this point; in-memory only.
    #[serde(skip, default)]
    pub elapsed_s: f64,
}

/// Stationary secrecy rate of the plain wiretap channel (IRS removed).
pub fn baseline_no_irs(ch: &ChannelSet, p0: f64, cfg: &BsmConfig) -> Result<f64> {
    let bare = ch.without_irs();
    let x0 = InputCovariance::scaled_identity(p0, bare.nt());
    let trace = run_covariance_only(&bare, PhaseVector::all_ones(0), x0, cfg)?;
    Ok(trace.final_cs())
}

/// Covariance-only optimization with phases frozen at a seeded uniform draw.
pub fn baseline_random_phase(
    ch: &ChannelSet,
    p0: f64,
    seed: &Seed,
    cfg: &BsmConfig,
) -> Result<f64> {
    let mut rng = seed.stream(StreamPurpose::PhaseInit);
    let theta = PhaseVector::uniform_random(ch.n(), &mut rng);
    let x0 = InputCovariance::scaled_identity(p0, ch.nt());
    let trace = run_covariance_only(ch, theta, x0, cfg)?;
    Ok(trace.final_cs())
}

fn run_trial(spec: &ExperimentSpec, geom: &GeometryConfig, p0: f64, trial: u64) -> TrialOutcome {
    let mut out = TrialOutcome {
        trial,
        cs_nats: None,
        c_b_nats: None,
        c_e_nats: None,
        iterations: None,
        converged: None,
        no_irs_cs_nats: None,
        random_phase_cs_nats: None,
        error: None,
        trace: None,
    };
    let seed = Seed::new(spec.master_seed, trial);
    let run = || -> Result<(IterationTrace, Option<f64>, Option<f64>)> {
        let ch = draw_channels(geom, &seed)?;

        let trace = if spec.kind == ExperimentKind::Convergence {
            // Cold start: the trace itself is the deliverable.
            run_bsm(&ch, p0, &spec.bsm, &seed)?
        } else {
            // Warm start from the covariance-only stationary point; the
            // monotone trace then dominates the random-phase baseline by
            // construction.
            let (theta0, x0) = init_point(&spec.bsm, &ch, p0, &seed);
            let warm = run_covariance_only(&ch, theta0.clone(), x0, &spec.bsm)?;
            let x_warm = InputCovariance::new(warm.final_x.clone(), p0)?;
            run_bsm_from(&ch, theta0, x_warm, &spec.bsm)?
        };

        let random_phase = if spec.baselines.random_phase {
            Some(baseline_random_phase(&ch, p0, &seed, &spec.bsm)?)
        } else {
            None
        };
        let no_irs = if spec.baselines.no_irs {
            Some(baseline_no_irs(&ch, p0, &spec.bsm)?)
        } else {
            None
        };
        Ok((trace, no_irs, random_phase))
    };
    match run() {
        Ok((trace, no_irs, random_phase)) => {
            let rep = trace.final_report();
            out.cs_nats = Some(rep.c_s);
            out.c_b_nats = Some(rep.c_b);
            out.c_e_nats = Some(rep.c_e);
            out.iterations = Some(trace.iterations.len().saturating_sub(1));
            out.converged = Some(trace.converged);
            out.no_irs_cs_nats = no_irs;
            out.random_phase_cs_nats = random_phase;
            if spec.record_traces {
                out.trace = Some(trace);
            }
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

fn optional_stats(values: Vec<f64>, enabled: bool) -> (Option<f64>, Option<f64>) {
    if !enabled || values.is_empty() {
        return (None, None);
    }
    let (m, s) = mean_stderr(&values);
    (Some(m), Some(s))
}

/// Run every sweep point of the experiment.
///
/// Trials execute in parallel; each derives its own RNG streams from
/// `(master seed, trial index)`, so results are independent of scheduling
/// and any recorded trial can be replayed in isolation.
pub fn run_monte_carlo(spec: &ExperimentSpec) -> Result<Vec<ResultRecord>> {
    spec.validate()?;
    let mut records = Vec::new();
    for point in spec.points() {
        let started = std::time::Instant::now();
        let geom = spec.geometry.with_counts(point.n, point.ne);
        geom.validate()?;
        let outcomes: Vec<TrialOutcome> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| run_trial(spec, &geom, point.p0_watts, trial))
            .collect();

        let cs: Vec<f64> = outcomes.iter().filter_map(|o| o.cs_nats).collect();
        let failures = outcomes.iter().filter(|o| o.error.is_some()).count() as u64;
        let (mean, stderr) = mean_stderr(&cs);
        let (mean_no_irs, stderr_no_irs) = optional_stats(
            outcomes.iter().filter_map(|o| o.no_irs_cs_nats).collect(),
            spec.baselines.no_irs,
        );
        let (mean_rp, stderr_rp) = optional_stats(
            outcomes
                .iter()
                .filter_map(|o| o.random_phase_cs_nats)
                .collect(),
            spec.baselines.random_phase,
        );
        records.push(ResultRecord {
            point,
            trials: spec.trials,
            failures,
            mean_cs_nats: mean,
            stderr_cs_nats: stderr,
            mean_cs_bits: crate::rates::nats_to_bits(mean),
            mean_no_irs_cs_nats: mean_no_irs,
            stderr_no_irs_cs_nats: stderr_no_irs,
            mean_random_phase_cs_nats: mean_rp,
            stderr_random_phase_cs_nats: stderr_rp,
            per_trial: outcomes,
            elapsed_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok(records)
}
