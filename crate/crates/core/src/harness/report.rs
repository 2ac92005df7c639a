//! Experiment reports and their JSON/CSV emission.

use super::config::{ExperimentConfig, Seeds};
use super::stats::{LineFit, Summary};
use crate::dynamics::Trajectory;
use crate::error::Result;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// One inequality `lhs ≤ rhs` judged on confidence bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub inequality: String,
    /// Point estimate of the left-hand side.
    pub lhs: f64,
    /// Value compared against `rhs` (upper 95% bound for Monte Carlo sides).
    pub lhs_bound: f64,
    pub rhs: f64,
    pub constants: BTreeMap<String, f64>,
    pub passed: bool,
    /// Passed, but within two standard errors of the threshold.
    pub marginal: bool,
}

impl InequalityCheck {
    pub fn new(name: impl Into<String>, inequality: impl Into<String>, lhs: f64, lhs_bound: f64, rhs: f64) -> Self {
        InequalityCheck {
            name: name.into(),
            inequality: inequality.into(),
            lhs,
            lhs_bound,
            rhs,
            constants: BTreeMap::new(),
            passed: lhs_bound <= rhs,
            marginal: false,
        }
    }

    /// Flag as marginal when the point estimate is within `2 · stderr` of
    /// the threshold.
    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.marginal = self.passed && self.rhs - self.lhs < 2.0 * stderr;
        self
    }

    pub fn with_constant(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    /// A check that holds when `lhs ≥ rhs` instead.
    pub fn at_least(name: impl Into<String>, inequality: impl Into<String>, lhs: f64, lhs_bound: f64, rhs: f64) -> Self {
        InequalityCheck {
            passed: lhs_bound >= rhs,
            ..InequalityCheck::new(name, inequality, lhs, lhs_bound, rhs)
        }
    }

    /// A boolean property.
    pub fn holds(name: impl Into<String>, description: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        InequalityCheck {
            passed: ok,
            ..InequalityCheck::new(name, description, v, v, 1.0)
        }
    }
}

/// Replica statistics at one particle count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerN {
    pub n: usize,
    pub stats: BTreeMap<String, Summary>,
    /// Theoretical rate curve scaled to the data, when there is one.
    pub overlay: Option<f64>,
}

impl PerN {
    pub fn new(n: usize) -> Self {
        PerN {
            n,
            stats: BTreeMap::new(),
            overlay: None,
        }
    }

    pub fn stat(&self, key: &str) -> Option<&Summary> {
        self.stats.get(key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Runtime {
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub parallel: bool,
    pub version: String,
}

impl Runtime {
    pub fn since(start: std::time::Instant, exec: crate::exec::Exec) -> Self {
        let parallel = exec != crate::exec::Exec::Sequential;
        Runtime {
            elapsed_seconds: start.elapsed().as_secs_f64(),
            threads: if parallel { crate::exec::available_threads() } else { 1 },
            parallel,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    /// Key of the statistic written to `curves.csv`.
    pub curve_key: Option<String>,
    pub per_n: Vec<PerN>,
    pub fit: Option<LineFit>,
    pub overlay_formula: Option<String>,
    pub checks: Vec<InequalityCheck>,
    /// Experiment-specific scalars and tables.
    pub extra: serde_json::Value,
    pub runtime: Runtime,
    /// Runs kept for dumping (`output.trajectories`); never serialized.
    #[serde(skip)]
    pub trajectories: Vec<(String, Trajectory)>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            config: config.clone(),
            seeds: config.seeds,
            curve_key: None,
            per_n: Vec::new(),
            fit: None,
            overlay_formula: None,
            checks: Vec::new(),
            extra: serde_json::Value::Object(Default::default()),
            runtime: Runtime {
                elapsed_seconds: 0.0,
                threads: 1,
                parallel: false,
                version: String::new(),
            },
            trajectories: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&InequalityCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn set_extra(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        if let serde_json::Value::Object(map) = &mut self.extra {
            map.insert(key.to_string(), v);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `N, mean, stderr, overlay` rows for `curve_key`.
    pub fn write_curves(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["N", "mean", "stderr", "overlay"])?;
        if let Some(key) = &self.curve_key {
            for row in &self.per_n {
                if let Some(s) = row.stats.get(key) {
                    out.write_record([
                        row.n.to_string(),
                        s.mean.to_string(),
                        s.stderr.to_string(),
                        row.overlay.map(|v| v.to_string()).unwrap_or_default(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    /// `report.json`, `curves.csv` and, when configured, trajectory dumps
    /// under `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        self.write_curves(std::fs::File::create(dir.join("curves.csv"))?)?;
        for (name, traj) in &self.trajectories {
            super::io::dump_trajectory(traj, dir, name, self.config.output.trajectories)?;
        }
        Ok(())
    }
}
