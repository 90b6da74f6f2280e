use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::MaximizeConfig;
use crate::dynamics::FlowConfig;
use crate::error::{Error, Result};
use crate::graph::GraphSpec;
use crate::manifold::check_dims;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    MonteCarlo,
    Counterexample,
    Certify,
    MaximizeF,
    IntegerPrograms,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub n: usize,
    pub p: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub trials_csv: String,
    pub summary_json: String,
    /// Sub-directory for per-trial trajectory CSVs (written when
    /// `flow.record_every > 0`).
    pub trajectory_dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            trials_csv: "trials.csv".into(),
            summary_json: "summary.json".into(),
            trajectory_dir: "trajectories".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub sizes: Vec<usize>,
    pub winding: usize,
    /// Each angle is shifted by a uniform draw from `[-perturbation, perturbation]`.
    pub perturbation: f64,
    /// Distance to the twisted-state orbit counted as "returned".
    pub twisted_tol: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            sizes: vec![3, 4, 5, 6],
            winding: 1,
            perturbation: 1e-2,
            twisted_tol: 1e-3,
        }
    }
}

fn default_trials() -> usize {
    1
}

fn default_minlp_grid() -> usize {
    1001
}

/// One experiment, read from a single JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub manifold: ManifoldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` uses every logical core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub flow: FlowConfig,
    /// Write measured wall time into the trial CSV. Off by default so
    /// repeated runs produce identical files.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub maximize: MaximizeConfig,
    #[serde(default = "default_minlp_grid")]
    pub minlp_grid: usize,
    #[serde(default)]
    pub counterexample: CounterexampleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(d) = &o.out_dir {
            self.output.dir = d.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let ManifoldSpec { n, p } = self.manifold;
        check_dims(n, p).map_err(|e| Error::Config(e.to_string()))?;
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.flow.validate()?;
        match self.mode {
            Mode::MonteCarlo if self.graph.is_none() => {
                return Err(Error::Config("monte_carlo mode needs a `graph`".into()));
            }
            Mode::Counterexample => {
                let c = &self.counterexample;
                if c.sizes.is_empty() || c.sizes.iter().any(|&s| s < 3) {
                    return Err(Error::Config(
                        "counterexample sizes must be non-empty and >= 3".into(),
                    ));
                }
                if !(c.perturbation >= 0.0 && c.twisted_tol > 0.0) {
                    return Err(Error::Config("invalid counterexample tolerances".into()));
                }
            }
            Mode::MaximizeF | Mode::Certify if self.maximize.multistarts == 0 => {
                return Err(Error::Config(
                    "maximize.multistarts must be at least 1".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
