//! Command-line front end for the secrecy-rate experiments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use irs_mimome::bsm::BsmConfig;
use irs_mimome::channel::{dbm_to_watts, GeometryConfig};
use irs_mimome::harness::{
    emit_results, run_monte_carlo, BaselineToggles, ExperimentKind, ExperimentSpec, ResultRecord,
};
use irs_mimome::rates::nats_to_bits;
use irs_mimome::{Error, Result};

#[derive(Parser)]
#[command(
    name = "irs-mimome",
    version,
    about = "Secrecy-rate maximization for IRS-assisted MIMOME wiretap channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one configuration point.
    Single(RunArgs),
    /// Record per-iteration convergence traces.
    Convergence(RunArgs),
    /// Sweep the number of reflecting elements N.
    SweepN(RunArgs),
    /// Sweep the number of eavesdropper antennas Ne.
    SweepNe(RunArgs),
    /// Sweep the transmit power budget P0.
    SweepPower(RunArgs),
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Single(_) => ExperimentKind::Single,
            Command::Convergence(_) => ExperimentKind::Convergence,
            Command::SweepN(_) => ExperimentKind::SweepN,
            Command::SweepNe(_) => ExperimentKind::SweepNe,
            Command::SweepPower(_) => ExperimentKind::SweepPower,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Single(a)
            | Command::Convergence(a)
            | Command::SweepN(a)
            | Command::SweepNe(a)
            | Command::SweepPower(a) => a,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file with [geometry] and [bsm] tables.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Channel realizations per sweep point.
    #[arg(long)]
    trials: Option<u64>,

    /// Master seed; trial k replays as (seed, k).
    #[arg(long)]
    seed: Option<u64>,

    /// Power budgets in dBm (comma-separated); stored internally in watts.
    #[arg(long = "p0-dbm", value_delimiter = ',')]
    p0_dbm: Vec<f64>,

    /// IRS element counts (comma-separated).
    #[arg(long = "n", value_delimiter = ',')]
    n: Vec<usize>,

    /// Eve antenna counts (comma-separated).
    #[arg(long = "ne", value_delimiter = ',')]
    ne: Vec<usize>,

    /// Output directory for results.csv and results.json.
    #[arg(long, default_value = "results")]
    out: PathBuf,

    /// Extra per-trial comparison runs.
    #[arg(long, value_delimiter = ',')]
    baselines: Vec<BaselineArg>,

    /// Also print rates in bits/s/Hz.
    #[arg(long)]
    bits: bool,

    /// Embed per-trial traces in results.json.
    #[arg(long)]
    traces: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineArg {
    /// Covariance-only optimization with the IRS removed.
    NoIrs,
    /// Covariance-only optimization with phases frozen at a random draw.
    RandomPhase,
}

/// On-disk configuration: both tables optional, defaults otherwise.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    geometry: GeometryConfig,
    bsm: BsmConfig,
}

impl FileConfig {
    fn load(path: &PathBuf) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        let cfg: FileConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.geometry.validate()?;
        cfg.bsm.validate()?;
        Ok(cfg)
    }
}

fn build_spec(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentSpec> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut spec = ExperimentSpec::new(kind, file.geometry, file.bsm);
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(seed) = args.seed {
        spec.master_seed = seed;
    }
    if !args.p0_dbm.is_empty() {
        spec.p0_watts = args.p0_dbm.iter().map(|&d| dbm_to_watts(d)).collect();
    }
    if !args.n.is_empty() {
        spec.n_values = args.n.clone();
    }
    if !args.ne.is_empty() {
        spec.ne_values = args.ne.clone();
    }
    spec.baselines = BaselineToggles {
        no_irs: args.baselines.contains(&BaselineArg::NoIrs),
        random_phase: args.baselines.contains(&BaselineArg::RandomPhase),
    };
    if args.traces {
        spec.record_traces = true;
    }
    spec.validate()?;
    Ok(spec)
}

fn print_summary(spec: &ExperimentSpec, records: &[ResultRecord], bits: bool) {
    println!(
        "experiment: {}   trials/point: {}   master seed: {}",
        spec.kind.name(),
        spec.trials,
        spec.master_seed
    );
    for r in records {
        let mut line = format!(
            "  N={:<3} Ne={:<2} P0={:.6} W  mean C_s = {:.6} nats",
            r.point.n, r.point.ne, r.point.p0_watts, r.mean_cs_nats
        );
        if bits {
            line.push_str(&format!(" ({:.6} bits)", r.mean_cs_bits));
        }
        line.push_str(&format!(" +/- {:.6}", r.stderr_cs_nats));
        if let Some(v) = r.mean_no_irs_cs_nats {
            if bits {
                line.push_str(&format!("  no-IRS {:.6} ({:.6} bits)", v, nats_to_bits(v)));
            } else {
                line.push_str(&format!("  no-IRS {v:.6}"));
            }
        }
        if let Some(v) = r.mean_random_phase_cs_nats {
            line.push_str(&format!("  random-phase {v:.6}"));
        }
        if r.failures > 0 {
            line.push_str(&format!("  [{} failed trials]", r.failures));
        }
        line.push_str(&format!("  ({:.1} s)", r.elapsed_s));
        println!("{line}");
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let kind = cli.command.kind();
    let args = cli.command.args();
    let spec = build_spec(kind, args)?;

    let started = std::time::Instant::now();
    let records = run_monte_carlo(&spec)?;
    let files = emit_results(&spec, &records, &args.out)?;

    print_summary(&spec, &records, args.bits);
    println!(
        "wrote {} and {} in {:.1} s",
        files.csv.display(),
        files.json.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn main() {
    env_logger::init();
    if let Err(e) = run() {
        // machine-readable failure report
        eprintln!("{}", serde_json::json!({ "error": e.to_string() }));
        std::process::exit(1);
    }
}
