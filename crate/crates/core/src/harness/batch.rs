//! Sweeps a task matrix over a seed range. Runs are independent and execute
//! in parallel; results come back in matrix order.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{Config, ConfigError, ScenarioConfig, ScenarioKind, Turn};
use super::export::{self, ExportError};
use super::metrics::{compute_metrics, MetricsReport};
use super::scenario::ScenarioError;
use super::sim::run;
use crate::behavior::BehaviorMode;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("cannot read matrix {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid matrix: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{label}: {source}")]
    Run {
        label: String,
        #[source]
        source: ScenarioError,
    },
    #[error(transparent)]
    Export(#[from] ExportError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub turn: Option<Turn>,
    pub behavior: BehaviorMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matrix {
    /// Config file, relative to the matrix file.
    #[serde(default)]
    pub config: Option<PathBuf>,
    /// Output directory, relative to the matrix file.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed_start: u64,
    #[serde(default = "default_seed_count")]
    pub seed_count: u64,
    #[serde(rename = "task")]
    pub tasks: Vec<Task>,
}

fn default_out() -> PathBuf {
    PathBuf::from("batch_out")
}

fn default_seed_count() -> u64 {
    20
}

impl Matrix {
    pub fn from_toml(text: &str) -> Result<Self, BatchError> {
        Ok(toml::from_str(text)?)
    }

    /// Expands tasks x seeds into run configs, task-major.
    pub fn expand(&self, config: &Config) -> Vec<ScenarioConfig> {
        self.tasks
            .iter()
            .flat_map(|t| {
                (self.seed_start..self.seed_start + self.seed_count)
                    .map(move |s| ScenarioConfig::new(t.scenario, t.turn, t.behavior, s).with_config(*config))
            })
            .collect()
    }
}

/// Runs every config; `out` receives one directory per run plus `summary.csv`.
pub fn run_all(runs: &[ScenarioConfig], out: Option<&Path>) -> Result<Vec<MetricsReport>, BatchError> {
    for r in runs {
        r.validate()?;
    }
    let results: Vec<Result<MetricsReport, BatchError>> = runs
        .par_iter()
        .map(|cfg| {
            let (sc, log) = run(cfg).map_err(|source| BatchError::Run {
                label: cfg.label(),
                source,
            })?;
            let m = compute_metrics(&log, cfg);
            if let Some(dir) = out {
                export::write_run(&dir.join(cfg.label()), &sc.grid, &log, &m)?;
            }
            Ok(m)
        })
        .collect();
    let metrics = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = out {
        export::write_text(&dir.join("summary.csv"), &summary_csv(&metrics))?;
    }
    Ok(metrics)
}

pub fn run_matrix_file(path: &Path) -> Result<(PathBuf, Vec<MetricsReport>), BatchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BatchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let m = Matrix::from_toml(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let config = match &m.config {
        Some(p) => Config::load(&base.join(p))?,
        None => Config::default(),
    };
    let out = base.join(&m.out);
    let metrics = run_all(&m.expand(&config), Some(&out))?;
    Ok((out, metrics))
}

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6}"))
}

pub fn summary_csv(ms: &[MetricsReport]) -> String {
    let mut s = String::from(
        "scenario,turn,behavior,seed,termination,human_efficiency,min_separation,activation_separation,lane_change_complete_separation,robot_time,collisions\n",
    );
    for m in ms {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            m.scenario,
            m.turn.as_deref().unwrap_or(""),
            m.behavior,
            m.seed,
            m.termination,
            cell(m.human_efficiency),
            cell(m.min_separation),
            cell(m.activation_separation),
            cell(m.lane_change_complete_separation),
            cell(m.robot_time),
            m.collisions
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_expansion_order() {
        let m = Matrix::from_toml(
            "seed_start = 3\nseed_count = 2\n[[task]]\nscenario = \"frontal\"\nbehavior = \"stop\"\n[[task]]\nscenario = \"blind\"\nturn = \"aprime\"\nbehavior = \"plc\"\n",
        )
        .unwrap();
        let runs = m.expand(&Config::default());
        let labels: Vec<String> = runs.iter().map(|r| r.label()).collect();
        assert_eq!(
            labels,
            ["frontal-stop-s3", "frontal-stop-s4", "blind-aprime-plc-s3", "blind-aprime-plc-s4"]
        );
    }
}
