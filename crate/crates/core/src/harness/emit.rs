//! Plot-ready persistence: a flat CSV table and a replayable JSON document.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ExperimentSpec, ResultRecord};

/// Paths written by [`emit_results`].
#[derive(Debug, Clone)]
pub struct EmittedFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Top-level JSON document embedding the spec for exact replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub version: String,
    pub spec: ExperimentSpec,
    pub records: Vec<ResultRecord>,
}

const CSV_HEADER: &str = "experiment,N,Ne,P0_watts,trial_count,mean_Cs_nats,stderr_Cs_nats,\
mean_Cs_bits,mean_no_irs_Cs_nats,stderr_no_irs_Cs_nats,mean_random_phase_Cs_nats,\
stderr_random_phase_Cs_nats,failures";

fn push_opt(line: &mut String, v: Option<f64>) {
    match v {
        Some(x) => {
            let _ = write!(line, ",{x}");
        }
        None => line.push(','),
    }
}

/// Render the per-point table. Baseline columns are present but empty when
/// the corresponding baseline was not requested.
pub fn render_csv(spec: &ExperimentSpec, records: &[ResultRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let mut line = format!(
            "{},{},{},{},{},{},{},{}",
            spec.kind.name(),
            r.point.n,
            r.point.ne,
            r.point.p0_watts,
            r.trials,
            r.mean_cs_nats,
            r.stderr_cs_nats,
            r.mean_cs_bits
        );
        push_opt(&mut line, r.mean_no_irs_cs_nats);
        push_opt(&mut line, r.stderr_no_irs_cs_nats);
        push_opt(&mut line, r.mean_random_phase_cs_nats);
        push_opt(&mut line, r.stderr_random_phase_cs_nats);
        let _ = write!(line, ",{}", r.failures);
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Render the JSON document with the software version and the full spec.
pub fn render_json(spec: &ExperimentSpec, records: &[ResultRecord]) -> Result<String> {
    let doc = ResultsDocument {
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        records: records.to_vec(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Io {
        path: "<json>".to_string(),
        detail: e.to_string(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::Io {
                path: parent.display().to_string(),
                detail: e.to_string(),
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// Write `results.csv` and `results.json` under `out_dir`.
///
/// Outputs contain no timing information, so re-running the same spec
/// produces byte-identical files.
pub fn emit_results(
    spec: &ExperimentSpec,
    records: &[ResultRecord],
    out_dir: &Path,
) -> Result<EmittedFiles> {
    if records.is_empty() {
        return Err(Error::Config("no records to emit".into()));
    }
    let csv = out_dir.join("results.csv");
    let json = out_dir.join("results.json");
    write_file(&csv, &render_csv(spec, records))?;
    write_file(&json, &render_json(spec, records)?)?;
    Ok(EmittedFiles { csv, json })
}
