use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::OutputConfig;
use super::experiments::{MonteCarloReport, TrialResult};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

pub const TRIALS_HEADER: [&str; 7] = [
    "trial",
    "seed",
    "reason",
    "final_potential",
    "final_consensus_distance",
    "iterations",
    "wall_ms",
];

pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "U", "max_grad_norm", "max_edge_distance"];

/// Scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Resolved file locations for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub trials_csv: PathBuf,
    pub summary_json: PathBuf,
    pub trajectory_dir: PathBuf,
}

impl OutputPaths {
    pub fn from_config(out: &OutputConfig) -> Self {
        Self {
            dir: out.dir.clone(),
            trials_csv: out.dir.join(&out.trials_csv),
            summary_json: out.dir.join(&out.summary_json),
            trajectory_dir: out.dir.join(&out.trajectory_dir),
        }
    }

    pub fn trajectory_csv(&self, trial: usize) -> PathBuf {
        self.trajectory_dir.join(format!("trial_{trial:05}.csv"))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_owned(),
        source,
    })
}

pub fn write_trials_csv(path: &Path, trials: &[TrialResult]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(TRIALS_HEADER).map_err(csv_err)?;
    for t in trials {
        w.write_record([
            t.trial.to_string(),
            t.seed.to_string(),
            t.reason.as_str().to_string(),
            format_float(t.final_potential),
            format_float(t.final_consensus_distance),
            t.iterations.to_string(),
            t.wall_ms.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
    for k in 0..traj.len() {
        w.write_record([
            format_float(traj.times[k]),
            format_float(traj.potentials[k]),
            format_float(traj.grad_norms[k]),
            format_float(traj.edge_distances[k]),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct MonteCarloSummaryFile<'a> {
    config: &'a super::config::ExperimentConfig,
    summary: &'a super::experiments::MonteCarloSummary,
}

/// Writes the trial CSV, per-trial trajectory CSVs (when recorded) and the
/// summary JSON. Returns every file written.
pub fn emit_results(report: &MonteCarloReport, paths: &OutputPaths) -> Result<Vec<PathBuf>> {
    create_dir(&paths.dir)?;
    let mut written = Vec::new();
    write_trials_csv(&paths.trials_csv, &report.trials)?;
    written.push(paths.trials_csv.clone());
    if report.trials.iter().any(|t| t.trajectory.is_some()) {
        create_dir(&paths.trajectory_dir)?;
        for t in &report.trials {
            if let Some(traj) = &t.trajectory {
                let path = paths.trajectory_csv(t.trial);
                write_trajectory_csv(&path, traj)?;
                written.push(path);
            }
        }
    }
    write_json(
        &paths.summary_json,
        &MonteCarloSummaryFile {
            config: &report.config,
            summary: &report.summary,
        },
    )?;
    written.push(paths.summary_json.clone());
    Ok(written)
}
