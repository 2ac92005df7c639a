//! TOML experiment configuration.
//!
//! ```toml
//! n_grid = [64, 128, 256, 512, 1024]
//! m_ref = 8192
//! replicas = 16
//!
//! [sim]
//! N = 256
//! d = 2
//! T = 1.0
//! dt = 0.00390625
//! kernel = { kind = "linear" }
//!
//! [noise]
//! dim = 2
//! spectrum = { name = "gaussian", scale = 1.0 }
//! num_shells = 2
//! modes_per_shell = 8
//!
//! [seeds]
//! noise = 1
//! initial_base = 1000
//! ```

use crate::bounds::{DEFAULT_C1, DEFAULT_C2};
use crate::cloud::PointCloud;
use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::noise::{NoiseSpec, Spectrum};
use crate::observable::Observable;
use crate::rng;
use crate::transport::TransportOptions;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Law `μ₀` of the initial positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum InitialLaw {
    /// Isotropic normal `N(mean, std² Id)`; `mean` defaults to the origin.
    Gaussian {
        #[serde(default)]
        mean: Option<Vec<f64>>,
        #[serde(default = "one")]
        std: f64,
    },
    /// Uniform on the cube `[-half_width, half_width]^d`.
    UniformBox { half_width: f64 },
    /// Every particle at the same point.
    Dirac { point: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl Default for InitialLaw {
    fn default() -> Self {
        InitialLaw::Gaussian { mean: None, std: 1.0 }
    }
}

impl InitialLaw {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            InitialLaw::Gaussian { mean, std } => {
                if mean.as_ref().is_some_and(|m| m.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: mean.as_ref().unwrap().len(),
                    });
                }
                if !(*std >= 0.0 && std.is_finite()) {
                    return Err(Error::invalid("initial std must be finite and >= 0"));
                }
            }
            InitialLaw::UniformBox { half_width } => {
                if !(*half_width >= 0.0 && half_width.is_finite()) {
                    return Err(Error::invalid("initial half_width must be finite and >= 0"));
                }
            }
            InitialLaw::Dirac { point } => {
                if point.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: point.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `n` i.i.d. draws. Row `i` depends only on `(seed, i)`, so a prefix of
    /// a larger sample is the smaller sample.
    pub fn sample(&self, n: usize, dim: usize, seed: u64) -> Result<PointCloud> {
        self.validate(dim)?;
        let mut data = vec![0.0; n * dim];
        for (i, row) in data.chunks_exact_mut(dim).enumerate() {
            match self {
                InitialLaw::Gaussian { mean, std } => {
                    rng::fill_normals(seed, i as u64, 0, row);
                    for (k, v) in row.iter_mut().enumerate() {
                        *v = mean.as_ref().map_or(0.0, |m| m[k]) + std * *v;
                    }
                }
                InitialLaw::UniformBox { half_width } => {
                    let mut r = rng::sequential(rng::derive_seed(seed, i as u64));
                    for v in row.iter_mut() {
                        *v = half_width * (2.0 * rand::Rng::random::<f64>(&mut r) - 1.0);
                    }
                }
                InitialLaw::Dirac { point } => row.copy_from_slice(point),
            }
        }
        PointCloud::new(dim, data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub noise: u64,
    pub initial_base: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            noise: 1,
            initial_base: 1000,
        }
    }
}

impl Seeds {
    /// Initial-condition seed of replica `r`.
    pub fn initial(&self, replica: usize) -> u64 {
        rng::derive_seed(self.initial_base, replica as u64)
    }

    /// Brownian seed of noise realization `k` (`k = 0` is `noise` itself).
    pub fn noise_at(&self, k: usize) -> u64 {
        if k == 0 {
            self.noise
        } else {
            rng::derive_seed(self.noise, k as u64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DumpFormat {
    #[default]
    None,
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default)]
    pub trajectories: DumpFormat,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out(),
            trajectories: DumpFormat::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    #[serde(default = "default_exact_limit")]
    pub exact_limit: usize,
    #[serde(default)]
    pub entropic: Option<f64>,
}

fn default_exact_limit() -> usize {
    // The reference cloud must fit the exact solver.
    8192
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            exact_limit: default_exact_limit(),
            entropic: None,
        }
    }
}

impl TransportConfig {
    pub fn options(&self, exec: Exec) -> TransportOptions {
        TransportOptions {
            exact_limit: self.exact_limit,
            entropic: self.entropic,
            ..TransportOptions::default()
        }
        .with_exec(exec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
}

fn default_c1() -> f64 {
    DEFAULT_C1
}

fn default_c2() -> f64 {
    DEFAULT_C2
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
        }
    }
}

/// Knobs of the convergence run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Steps between the times at which `W₁` is evaluated.
    #[serde(default = "default_w1_stride")]
    pub w1_stride: usize,
    /// Re-evaluate the largest `N` against a second reference of this many
    /// times its size (0, or a size equal to `m_ref`, disables).
    #[serde(default = "default_sensitivity")]
    pub sensitivity_factor: usize,
    #[serde(default = "default_slope_target")]
    pub slope_upper: f64,
}

fn default_w1_stride() -> usize {
    64
}

fn default_sensitivity() -> usize {
    4
}

fn default_slope_target() -> f64 {
    -0.2
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            w1_stride: default_w1_stride(),
            sensitivity_factor: default_sensitivity(),
            slope_upper: default_slope_target(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaosConfig {
    pub phi1: Observable,
    pub phi2: Observable,
    /// Initial-condition resamples per `N`; `None` means `replicas`. Chaos
    /// runs need no transport solves, so the default is a generous 64.
    #[serde(default = "default_chaos_replicas")]
    pub replicas: Option<usize>,
    /// Required ratio between the factorization gaps at the smallest and the
    /// largest `N`.
    #[serde(default = "default_gap_factor")]
    pub gap_factor: f64,
}

fn default_chaos_replicas() -> Option<usize> {
    Some(64)
}

fn default_gap_factor() -> f64 {
    2.0
}

impl Default for ChaosConfig {
    fn default() -> Self {
        ChaosConfig {
            phi1: Observable::tanh(0),
            phi2: Observable::tanh(1),
            replicas: default_chaos_replicas(),
            gap_factor: default_gap_factor(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DichotomyConfig {
    pub phi: Observable,
    /// Particle count; defaults to the largest entry of `n_grid`.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_noise_seeds")]
    pub noise_seeds: usize,
    #[serde(default = "default_factor")]
    pub factor: f64,
    /// Arms compared: first is the "stochastic" arm.
    #[serde(default = "default_arms")]
    pub arms: (crate::dynamics::NoiseMode, crate::dynamics::NoiseMode),
}

fn default_noise_seeds() -> usize {
    32
}

fn default_factor() -> f64 {
    5.0
}

fn default_arms() -> (crate::dynamics::NoiseMode, crate::dynamics::NoiseMode) {
    (crate::dynamics::NoiseMode::Common, crate::dynamics::NoiseMode::Independent)
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        DichotomyConfig {
            phi: Observable::tanh(0),
            n: None,
            noise_seeds: default_noise_seeds(),
            factor: default_factor(),
            arms: default_arms(),
        }
    }
}

/// Knobs of the bound suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSuiteConfig {
    /// Size of the clouds standing in for `μ` and `ν`.
    #[serde(default = "default_suite_m")]
    pub m: usize,
    /// Steps between frozen-drift snapshots.
    #[serde(default = "default_suite_stride")]
    pub stride: usize,
    /// Separation `|x − x'|` of the flow-stability pairs.
    #[serde(default = "default_pair_sep")]
    pub pair_separation: f64,
    /// Shift of `ν₀` relative to `μ₀`.
    #[serde(default = "default_shift")]
    pub shift: f64,
}

fn default_suite_m() -> usize {
    256
}

fn default_suite_stride() -> usize {
    8
}

fn default_pair_sep() -> f64 {
    0.1
}

fn default_shift() -> f64 {
    0.25
}

impl Default for BoundSuiteConfig {
    fn default() -> Self {
        BoundSuiteConfig {
            m: default_suite_m(),
            stride: default_suite_stride(),
            pair_separation: default_pair_sep(),
            shift: default_shift(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    #[serde(default = "default_picard_m")]
    pub m: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_picard_m() -> usize {
    1024
}

fn default_tol() -> f64 {
    1e-4
}

fn default_max_iter() -> usize {
    50
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            m: default_picard_m(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

fn default_sim() -> SimConfig {
    SimConfig::new(256, 2, 1.0, 1.0 / 256.0)
}

fn default_noise() -> NoiseSpec {
    NoiseSpec::isotropic(2, Spectrum::Gaussian { scale: 1.0 }, 2, 8, 0)
}

fn default_grid() -> Vec<usize> {
    vec![64, 128, 256, 512, 1024]
}

fn default_m_ref() -> usize {
    8192
}

fn default_replicas() -> usize {
    16
}

fn default_observables() -> Vec<Observable> {
    vec![
        Observable::tanh(0),
        Observable::Gaussian {
            center: vec![0.0, 0.0],
            width: 1.0,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_sim")]
    pub sim: SimConfig,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub initial: InitialLaw,
    #[serde(default = "default_grid", alias = "N_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_m_ref", alias = "M_ref")]
    pub m_ref: usize,
    #[serde(default = "default_replicas", alias = "R")]
    pub replicas: usize,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub transport: TransportConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub chaos: ChaosConfig,
    #[serde(default)]
    pub dichotomy: DichotomyConfig,
    #[serde(default)]
    pub bound_suite: BoundSuiteConfig,
    #[serde(default)]
    pub picard: PicardConfig,
}

impl Default for ExperimentConfig {
    /// The desk-scale configuration: `d = 2`, linear kernel, `T = 1`,
    /// `dt = 1/256`, `N ∈ {64, …, 1024}`, `M_ref = 8192`, `R = 16`, 32
    /// noise modes.
    fn default() -> Self {
        ExperimentConfig {
            sim: default_sim(),
            noise: default_noise(),
            initial: InitialLaw::default(),
            n_grid: default_grid(),
            m_ref: default_m_ref(),
            replicas: default_replicas(),
            seeds: Seeds::default(),
            observables: default_observables(),
            output: OutputConfig::default(),
            transport: TransportConfig::default(),
            bounds: BoundsConfig::default(),
            convergence: ConvergenceConfig::default(),
            chaos: ChaosConfig::default(),
            dichotomy: DichotomyConfig::default(),
            bound_suite: BoundSuiteConfig::default(),
            picard: PicardConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.noise.dim != self.sim.dim {
            return Err(Error::Config(format!(
                "noise dimension {} differs from simulation dimension {}",
                self.noise.dim, self.sim.dim
            )));
        }
        self.initial.validate(self.sim.dim)?;
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::Config("n_grid must be non-empty with positive entries".into()));
        }
        let max_n = self.max_n();
        if self.m_ref < 4 * max_n {
            return Err(Error::Config(format!("m_ref = {} must be at least 4 max(n_grid) = {}", self.m_ref, 4 * max_n)));
        }
        if self.replicas < 2 {
            return Err(Error::Config("replicas must be at least 2".into()));
        }
        for phi in self.observables.iter().chain([&self.chaos.phi1, &self.chaos.phi2, &self.dichotomy.phi]) {
            phi.validate(self.sim.dim)?;
        }
        if self.convergence.w1_stride == 0 || self.bound_suite.stride == 0 {
            return Err(Error::Config("strides must be positive".into()));
        }
        if self.chaos.replicas.is_some_and(|r| r < 2) || self.dichotomy.noise_seeds < 2 {
            return Err(Error::Config("chaos replicas and dichotomy seeds must be at least 2".into()));
        }
        if !(self.bounds.c1 > 0.0 && self.bounds.c2 > 0.0) {
            return Err(Error::Config("BDG constants must be positive".into()));
        }
        Ok(())
    }

    pub fn max_n(&self) -> usize {
        self.n_grid.iter().copied().max().unwrap_or(0)
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.sim.exec = exec;
        self
    }

    pub fn transport_options(&self) -> TransportOptions {
        self.transport.options(self.sim.exec)
    }

    pub fn sample_initial(&self, n: usize, seed: u64) -> Result<PointCloud> {
        self.initial.sample(n, self.sim.dim, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn empty_file_is_the_desk_config() {
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn partial_sections_keep_their_defaults() {
        let cfg = ExperimentConfig::from_toml_str("[chaos]\nreplicas = 4\n[seeds]\nnoise = 9\n").unwrap();
        assert_eq!(cfg.chaos.replicas, Some(4));
        assert_eq!(cfg.chaos.phi2, ExperimentConfig::default().chaos.phi2);
        assert_eq!(cfg.seeds.initial_base, ExperimentConfig::default().seeds.initial_base);
    }

    #[test]
    fn reference_must_dominate_grid() {
        let err = ExperimentConfig::from_toml_str("m_ref = 1024").unwrap_err();
        assert!(err.to_string().contains("m_ref"));
        assert!(ExperimentConfig::from_toml_str("replicas = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn samples_are_prefix_stable() {
        let law = InitialLaw::default();
        let big = law.sample(100, 2, 7).unwrap();
        assert_eq!(law.sample(10, 2, 7).unwrap(), big.head(10));
        let b = InitialLaw::UniformBox { half_width: 2.0 }.sample(50, 3, 1).unwrap();
        assert!(b.as_slice().iter().all(|v| v.abs() <= 2.0));
    }
}
