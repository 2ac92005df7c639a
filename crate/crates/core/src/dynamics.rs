//! Euler–Maruyama integration of the `N`-particle system
//!
//! ```text
//! dX^i = (1/N) Σ_j K(X^i − X^j) dt + Σ_k σ_k(X^i) dB^k
//! ```
//!
//! and its independent-noise, deterministic-environment and noiseless
//! variants. Each step maps particles in parallel against an immutable
//! snapshot; per-particle sums run in a fixed index order, so results do not
//! depend on the worker count.

use crate::brownian::{BrownianPath, PathLayout};
use crate::cloud::{norm, PointCloud};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kernel::{DriftField, InteractionKernel};
use crate::noise::NoiseModel;
use crate::observable::Observable;
use crate::transport::MeasurePath;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Shared increments `dB^k` through the fields `σ_k`.
    #[default]
    Common,
    /// Per-particle `ℝ^d` Brownian motions with identity diffusion.
    Independent,
    /// Deterministic velocity field `v(t, x)` added to the drift.
    DeterministicEnv,
    None,
}

/// Built-in deterministic environments `v(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentField {
    /// `v = (rate · x₂, 0, …)`.
    Shear { rate: f64 },
    /// 2-D cellular flow `v = A (sin kx cos ky, −cos kx sin ky) cos(ωt)`.
    Cellular {
        amplitude: f64,
        wavenumber: f64,
        #[serde(default)]
        omega: f64,
    },
}

impl EnvironmentField {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            EnvironmentField::Shear { .. } if dim < 2 => Err(Error::invalid("shear environment needs d >= 2")),
            EnvironmentField::Cellular { .. } if dim != 2 => Err(Error::invalid("cellular environment is 2-D")),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn add_velocity(&self, t: f64, x: &[f64], scale: f64, out: &mut [f64]) {
        match *self {
            EnvironmentField::Shear { rate } => out[0] += scale * rate * x[1],
            EnvironmentField::Cellular {
                amplitude,
                wavenumber,
                omega,
            } => {
                let a = amplitude * (omega * t).cos();
                let (sx, cx) = (wavenumber * x[0]).sin_cos();
                let (sy, cy) = (wavenumber * x[1]).sin_cos();
                out[0] += scale * a * sx * cy;
                out[1] -= scale * a * cx * sy;
            }
        }
    }
}

fn default_n() -> usize {
    256
}

fn default_stride() -> usize {
    1
}

fn default_guard() -> f64 {
    1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Ignored where the particle count comes from an initial cloud.
    #[serde(alias = "N", default = "default_n")]
    pub n: usize,
    #[serde(alias = "d")]
    pub dim: usize,
    #[serde(alias = "T")]
    pub t_final: f64,
    pub dt: f64,
    #[serde(default)]
    pub kernel: InteractionKernel,
    #[serde(default)]
    pub noise_mode: NoiseMode,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_guard")]
    pub divergence_bound: f64,
    #[serde(default)]
    pub environment: Option<EnvironmentField>,
    #[serde(skip)]
    pub exec: Exec,
}

impl SimConfig {
    pub fn new(n: usize, dim: usize, t_final: f64, dt: f64) -> Self {
        SimConfig {
            n,
            dim,
            t_final,
            dt,
            kernel: InteractionKernel::Linear,
            noise_mode: NoiseMode::Common,
            snapshot_stride: 1,
            divergence_bound: 1e6,
            environment: None,
            exec: Exec::default(),
        }
    }

    pub fn with_kernel(mut self, kernel: InteractionKernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_mode(mut self, mode: NoiseMode) -> Self {
        self.noise_mode = mode;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    /// `T / dt`, which must be an integer.
    pub fn num_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid(format!("need dt > 0 and T >= 0 (dt = {}, T = {})", self.dt, self.t_final)));
        }
        let steps = (self.t_final / self.dt).round();
        if (steps * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(self.dt) {
            return Err(Error::invalid(format!("T = {} is not a multiple of dt = {}", self.t_final, self.dt)));
        }
        Ok(steps as usize)
    }

    /// Step indices at which snapshots are stored (always includes 0 and the last step).
    pub fn snapshot_steps(&self) -> Result<Vec<usize>> {
        let steps = self.num_steps()?;
        let stride = self.snapshot_stride.max(1);
        let mut v: Vec<usize> = (0..=steps).step_by(stride).collect();
        if *v.last().unwrap() != steps {
            v.push(steps);
        }
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(Error::invalid("need N >= 1 and d >= 1"));
        }
        self.num_steps()?;
        self.kernel.validate(self.dim)?;
        if self.noise_mode == NoiseMode::DeterministicEnv {
            match &self.environment {
                Some(env) => env.validate(self.dim)?,
                None => return Err(Error::invalid("deterministic_env mode needs an environment field")),
            }
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::invalid("divergence bound must be positive"));
        }
        Ok(())
    }

    /// Brownian layout this configuration consumes.
    pub fn layout(&self, noise: &NoiseModel) -> PathLayout {
        match self.noise_mode {
            NoiseMode::Independent => PathLayout::PerParticle {
                particles: self.n,
                dim: self.dim,
            },
            _ => PathLayout::PerMode {
                modes: noise.num_modes(),
            },
        }
    }

    pub fn brownian_path(&self, noise: &NoiseModel, seed: u64) -> Result<BrownianPath> {
        BrownianPath::new(seed, self.dt, self.num_steps()?, self.layout(noise))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    pub positions: PointCloud,
    pub time: f64,
    pub noise_mode: NoiseMode,
}

/// Snapshots of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub steps: Vec<usize>,
    pub snapshots: Vec<PointCloud>,
    pub noise_mode: NoiseMode,
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> &PointCloud {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }

    pub fn ensemble(&self, k: usize) -> ParticleEnsemble {
        ParticleEnsemble {
            positions: self.snapshots[k].clone(),
            time: self.times[k],
            noise_mode: self.noise_mode,
        }
    }

    /// Uniform empirical measures along the snapshots.
    pub fn measure_path(&self) -> Result<MeasurePath> {
        MeasurePath::from_clouds(self.times.clone(), self.snapshots.clone())
    }

    /// Rows `0..n` of every snapshot.
    pub fn head(&self, n: usize) -> Trajectory {
        Trajectory {
            snapshots: self.snapshots.iter().map(|s| s.head(n)).collect(),
            ..self.clone()
        }
    }

    /// Row `i` of every snapshot as a one-point cloud sequence.
    pub fn particle(&self, i: usize) -> Vec<Vec<f64>> {
        self.snapshots.iter().map(|s| s.row(i).to_vec()).collect()
    }
}

fn check_path(cfg: &SimConfig, noise: &NoiseModel, path: &BrownianPath, steps: usize) -> Result<()> {
    if (path.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::LayoutMismatch(format!("path dt {} vs config dt {}", path.dt(), cfg.dt)));
    }
    if path.num_steps() < steps {
        return Err(Error::LayoutMismatch(format!("path has {} steps, run needs {steps}", path.num_steps())));
    }
    match (cfg.noise_mode, path.layout()) {
        (NoiseMode::Common, PathLayout::PerMode { modes }) => {
            if modes != noise.num_modes() {
                return Err(Error::LayoutMismatch(format!("path has {modes} modes, noise model {}", noise.num_modes())));
            }
            if noise.dim() != cfg.dim {
                return Err(Error::DimensionMismatch {
                    expected: cfg.dim,
                    got: noise.dim(),
                });
            }
        }
        (NoiseMode::Common, l) => return Err(Error::LayoutMismatch(format!("common noise needs a per-mode path, got {l:?}"))),
        (NoiseMode::Independent, PathLayout::PerParticle { particles, dim }) => {
            if particles < cfg.n || dim != cfg.dim {
                return Err(Error::LayoutMismatch(format!(
                    "independent noise for {} particles in d = {} needs a matching per-particle path, got {particles} x {dim}",
                    cfg.n, cfg.dim
                )));
            }
        }
        (NoiseMode::Independent, l) => {
            return Err(Error::LayoutMismatch(format!("independent noise needs a per-particle path, got {l:?}")))
        }
        _ => {}
    }
    Ok(())
}

/// Where the drift comes from at each step.
#[derive(Clone, Copy)]
enum DriftSource<'a> {
    /// `b_{S_t^N}` from the current positions.
    SelfConsistent,
    /// `b_{μ_t}` from a given path, piecewise constant between its times:
    /// step `s` uses the measure at index `s / stride`.
    Frozen { path: &'a MeasurePath, stride: usize },
}

struct Integrator<'a> {
    cfg: &'a SimConfig,
    noise: &'a NoiseModel,
    path: &'a BrownianPath,
    increments: Vec<f64>,
}

impl<'a> Integrator<'a> {
    fn new(cfg: &'a SimConfig, noise: &'a NoiseModel, path: &'a BrownianPath) -> Self {
        let width = match cfg.noise_mode {
            NoiseMode::Common | NoiseMode::Independent => path.width(),
            _ => 0,
        };
        Integrator {
            cfg,
            noise,
            path,
            increments: vec![0.0; width],
        }
    }

    /// `X ← X + b(X) dt + noise`, with `field` the frozen drift.
    fn advance(&mut self, x: &PointCloud, field: &DriftField<'_>, step: usize) -> Result<PointCloud> {
        let cfg = self.cfg;
        if matches!(cfg.noise_mode, NoiseMode::Common | NoiseMode::Independent) {
            self.path.fill_step(step, &mut self.increments);
        }
        let d = x.dim();
        let dt = cfg.dt;
        let t = step as f64 * dt;
        let inc = &self.increments;
        let noise = self.noise;
        let mut out = PointCloud::zeros(x.len(), d);
        cfg.exec.fill_chunks(out.as_mut_slice(), d, |i, o| {
            let xi = x.row(i);
            field.eval_into(xi, o);
            for c in 0..d {
                o[c] = xi[c] + o[c] * dt;
            }
            match cfg.noise_mode {
                NoiseMode::Common => noise.add_noise_displacement(xi, inc, o),
                NoiseMode::Independent => {
                    for c in 0..d {
                        o[c] += inc[i * d + c];
                    }
                }
                NoiseMode::DeterministicEnv => {
                    if let Some(env) = &cfg.environment {
                        env.add_velocity(t, xi, dt, o);
                    }
                }
                NoiseMode::None => {}
            }
        });
        for (i, r) in out.rows().enumerate() {
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { particle: i });
            }
            let nr = norm(r);
            if nr > cfg.divergence_bound {
                return Err(Error::Diverged {
                    step,
                    particle: i,
                    norm: nr,
                    bound: cfg.divergence_bound,
                });
            }
        }
        Ok(out)
    }
}

fn run(
    cfg: &SimConfig,
    noise: &NoiseModel,
    initial: &PointCloud,
    path: &BrownianPath,
    drift: DriftSource<'_>,
    window: Option<(usize, usize)>,
) -> Result<Trajectory> {
    cfg.validate()?;
    if initial.dim() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            got: initial.dim(),
        });
    }
    if let Some(i) = initial.first_non_finite_row() {
        return Err(Error::NonFinite { particle: i });
    }
    // A window runs steps step0..step0+steps with every step stored.
    let (step0, steps, snaps) = match window {
        None => (0, cfg.num_steps()?, cfg.snapshot_steps()?),
        Some((step0, steps)) => (step0, steps, (0..=steps).collect()),
    };
    let run_cfg = SimConfig {
        n: initial.len(),
        ..cfg.clone()
    };
    check_path(&run_cfg, noise, path, step0 + steps)?;
    let mut times = vec![step0 as f64 * cfg.dt];
    let mut kept = vec![step0];
    let mut snapshots = vec![initial.clone()];
    let mut integ = Integrator::new(&run_cfg, noise, path);
    let mut x = initial.clone();
    let mut next = 1;
    for s in 0..steps {
        let field = match drift {
            DriftSource::SelfConsistent => DriftField::new(cfg.kernel, &x, None),
            DriftSource::Frozen { path: mp, stride } => DriftField::from_measure(cfg.kernel, mp.at(s / stride)),
        };
        x = integ.advance(&x, &field, step0 + s)?;
        if next < snaps.len() && snaps[next] == s + 1 {
            times.push((step0 + s + 1) as f64 * cfg.dt);
            kept.push(step0 + s + 1);
            snapshots.push(x.clone());
            next += 1;
        }
    }
    Ok(Trajectory {
        times,
        steps: kept,
        snapshots,
        noise_mode: cfg.noise_mode,
        dt: cfg.dt,
    })
}

/// Frozen-drift run over steps `step0..step0 + measures.len() - 1`, every
/// step stored; `measures` holds one measure per step of the window.
pub(crate) fn run_frozen_window(
    cfg: &SimConfig,
    noise: &NoiseModel,
    measures: &MeasurePath,
    initial: &PointCloud,
    path: &BrownianPath,
    step0: usize,
) -> Result<Trajectory> {
    let steps = measures.len() - 1;
    run(cfg, noise, initial, path, DriftSource::Frozen { path: measures, stride: 1 }, Some((step0, steps)))
}

/// Run the self-consistent particle system from `initial` (`N` is taken
/// from the cloud).
pub fn simulate(cfg: &SimConfig, noise: &NoiseModel, initial: &PointCloud, path: &BrownianPath) -> Result<Trajectory> {
    run(cfg, noise, initial, path, DriftSource::SelfConsistent, None)
}

/// Integrate `initial` under the frozen drift `b_{μ_t}` of `measures`, whose
/// grid must be the configuration's snapshot grid.
pub fn simulate_frozen(
    cfg: &SimConfig,
    noise: &NoiseModel,
    measures: &MeasurePath,
    initial: &PointCloud,
    path: &BrownianPath,
) -> Result<Trajectory> {
    let stride = cfg.snapshot_stride.max(1);
    let grid: Vec<f64> = cfg.snapshot_steps()?.iter().map(|&s| s as f64 * cfg.dt).collect();
    if grid.len() != measures.len() || grid.iter().zip(measures.times()).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + a.abs())) {
        return Err(Error::GridMismatch(format!(
            "frozen measure path has {} times, the run grid has {}",
            measures.len(),
            grid.len()
        )));
    }
    run(cfg, noise, initial, path, DriftSource::Frozen { path: measures, stride }, None)
}

/// One Euler–Maruyama step of `ensemble` at `step_index`.
pub fn step(
    ensemble: &ParticleEnsemble,
    cfg: &SimConfig,
    noise: &NoiseModel,
    path: &BrownianPath,
    step_index: usize,
) -> Result<ParticleEnsemble> {
    if ensemble.noise_mode != cfg.noise_mode {
        return Err(Error::LayoutMismatch(format!(
            "ensemble mode {:?} vs config mode {:?}",
            ensemble.noise_mode, cfg.noise_mode
        )));
    }
    if step_index >= path.num_steps() {
        return Err(Error::invalid(format!("step {step_index} beyond path length {}", path.num_steps())));
    }
    let run_cfg = SimConfig {
        n: ensemble.positions.len(),
        ..cfg.clone()
    };
    check_path(&run_cfg, noise, path, step_index + 1)?;
    let field = DriftField::new(cfg.kernel, &ensemble.positions, None);
    let mut integ = Integrator::new(&run_cfg, noise, path);
    let positions = integ.advance(&ensemble.positions, &field, step_index)?;
    Ok(ParticleEnsemble {
        positions,
        time: (step_index + 1) as f64 * cfg.dt,
        noise_mode: cfg.noise_mode,
    })
}

/// Drift rows `(1/N) Σ_j K(X_i − X_j)` (re-exported convenience).
pub use crate::kernel::pairwise_drift;

/// `max_t |⟨S_t,φ⟩ − ⟨S_0,φ⟩ − Σ (⟨S,∇φ·b⟩ + ½⟨S,Δφ⟩) dt − Σ ⟨S,∇φ·σ_k⟩ ΔB^k|`
/// along a stride-1 trajectory, using the increments that produced it.
pub fn weak_form_residual(
    traj: &Trajectory,
    cfg: &SimConfig,
    noise: &NoiseModel,
    path: &BrownianPath,
    phi: &Observable,
) -> Result<f64> {
    Ok(weak_form_residual_series(traj, cfg, noise, path, phi)?
        .into_iter()
        .fold(0.0, |m, r| m.max(r.abs())))
}

/// Signed residual at every stored time after the first (see
/// [`weak_form_residual`]). Compare step sizes on shared times: a maximum
/// over a finer grid sees more of the path.
pub fn weak_form_residual_series(
    traj: &Trajectory,
    cfg: &SimConfig,
    noise: &NoiseModel,
    path: &BrownianPath,
    phi: &Observable,
) -> Result<Vec<f64>> {
    if traj.steps.iter().enumerate().any(|(k, s)| *s != k) {
        return Err(Error::invalid("weak-form residual needs every step stored (snapshot stride 1)"));
    }
    let d = cfg.dim;
    phi.validate(d)?;
    let n = traj.snapshots[0].len();
    let run_cfg = SimConfig { n, ..cfg.clone() };
    let steps = traj.len() - 1;
    check_path(&run_cfg, noise, path, steps)?;
    let lap_factor = match cfg.noise_mode {
        NoiseMode::Common | NoiseMode::Independent => 1.0,
        _ => 0.0,
    };
    let mut inc = vec![0.0; path.width()];
    let phi0 = phi.mean_over(&traj.snapshots[0]);
    let mut predicted = phi0;
    let mut series = Vec::with_capacity(steps);
    for s in 0..steps {
        let x = &traj.snapshots[s];
        if matches!(cfg.noise_mode, NoiseMode::Common | NoiseMode::Independent) {
            path.fill_step(s, &mut inc);
        }
        let field = DriftField::new(cfg.kernel, x, None);
        let t = s as f64 * cfg.dt;
        let per = cfg.exec.map(n, |i| {
            let xi = x.row(i);
            let mut grad = vec![0.0; d];
            let lap = phi.gradient_laplacian(xi, &mut grad);
            let mut b = field.eval(xi);
            if let (NoiseMode::DeterministicEnv, Some(env)) = (cfg.noise_mode, &cfg.environment) {
                env.add_velocity(t, xi, 1.0, &mut b);
            }
            let drift: f64 = grad.iter().zip(&b).map(|(g, v)| g * v).sum();
            let mart = match cfg.noise_mode {
                NoiseMode::Common => {
                    let mut disp = vec![0.0; d];
                    noise.add_noise_displacement(xi, &inc, &mut disp);
                    grad.iter().zip(&disp).map(|(g, v)| g * v).sum()
                }
                NoiseMode::Independent => (0..d).map(|c| grad[c] * inc[i * d + c]).sum(),
                _ => 0.0,
            };
            (drift + 0.5 * lap_factor * lap) * cfg.dt + mart
        });
        predicted += per.iter().sum::<f64>() / n as f64;
        let actual = phi.mean_over(&traj.snapshots[s + 1]);
        series.push(actual - predicted);
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{NoiseSpec, Spectrum};
    use crate::rng;

    fn noise() -> NoiseModel {
        NoiseSpec::isotropic(2, Spectrum::Gaussian { scale: 1.0 }, 2, 8, 1).build().unwrap()
    }

    fn gaussian_cloud(n: usize, seed: u64) -> PointCloud {
        let mut r = rng::sequential(seed);
        PointCloud::new(2, (0..2 * n).map(|_| rng::standard_normal(&mut r)).collect()).unwrap()
    }

    #[test]
    fn zero_horizon_returns_initial() {
        let cfg = SimConfig::new(4, 2, 0.0, 0.01);
        let nm = noise();
        let path = cfg.brownian_path(&nm, 0).unwrap();
        let x = gaussian_cloud(4, 1);
        let tr = simulate(&cfg, &nm, &x, &path).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.snapshots[0], x);
    }

    #[test]
    fn relative_coordinate_contracts() {
        let cfg = SimConfig::new(2, 2, 1.0, 0.01).with_mode(NoiseMode::None);
        let nm = noise();
        let path = cfg.brownian_path(&nm, 0).unwrap();
        let x = PointCloud::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let tr = simulate(&cfg, &nm, &x, &path).unwrap();
        let gap = tr.last().row(0)[0] - tr.last().row(1)[0];
        // discrete factor (1 - dt)^100 against the ODE value e^{-1}
        assert!((gap / 2.0 - 0.99f64.powi(100)).abs() < 1e-12);
        assert!((gap / 2.0 / (-1.0f64).exp() - 1.0).abs() < 0.01);
    }

    #[test]
    fn layout_mismatch_is_reported() {
        let cfg = SimConfig::new(3, 2, 0.1, 0.01).with_mode(NoiseMode::Independent);
        let nm = noise();
        let wrong = BrownianPath::new(0, 0.01, 10, PathLayout::PerMode { modes: nm.num_modes() }).unwrap();
        let x = gaussian_cloud(3, 1);
        assert!(matches!(simulate(&cfg, &nm, &x, &wrong), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn divergence_guard_trips() {
        let mut cfg = SimConfig::new(2, 2, 1.0, 0.5)
            .with_mode(NoiseMode::DeterministicEnv)
            .with_kernel(InteractionKernel::Zero);
        cfg.environment = Some(EnvironmentField::Shear { rate: 1e3 });
        cfg.divergence_bound = 1e4;
        let nm = noise();
        let path = cfg.brownian_path(&nm, 0).unwrap();
        let x = PointCloud::from_rows(&[[0.0, 100.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(simulate(&cfg, &nm, &x, &path), Err(Error::Diverged { particle: 0, .. })));
    }

    #[test]
    fn single_step_matches_simulate() {
        let cfg = SimConfig::new(5, 2, 0.02, 0.01);
        let nm = noise();
        let path = cfg.brownian_path(&nm, 3).unwrap();
        let x = gaussian_cloud(5, 2);
        let tr = simulate(&cfg, &nm, &x, &path).unwrap();
        let e0 = tr.ensemble(0);
        let e1 = step(&e0, &cfg, &nm, &path, 0).unwrap();
        let e2 = step(&e1, &cfg, &nm, &path, 1).unwrap();
        assert_eq!(e2.positions, tr.snapshots[2]);
    }

    #[test]
    fn static_ensemble_has_zero_residual() {
        let cfg = SimConfig::new(6, 2, 0.1, 0.01)
            .with_mode(NoiseMode::None)
            .with_kernel(InteractionKernel::Zero);
        let nm = noise();
        let path = cfg.brownian_path(&nm, 0).unwrap();
        let x = gaussian_cloud(6, 4);
        let tr = simulate(&cfg, &nm, &x, &path).unwrap();
        let phi = Observable::Gaussian { center: vec![0.0, 0.0], width: 1.0 };
        assert_eq!(weak_form_residual(&tr, &cfg, &nm, &path, &phi).unwrap(), 0.0);
    }

    #[test]
    fn environment_moves_particles() {
        let mut cfg = SimConfig::new(1, 2, 0.1, 0.01)
            .with_mode(NoiseMode::DeterministicEnv)
            .with_kernel(InteractionKernel::Zero);
        cfg.environment = Some(EnvironmentField::Shear { rate: 2.0 });
        let nm = noise();
        let path = cfg.brownian_path(&nm, 0).unwrap();
        let x = PointCloud::from_rows(&[[0.0, 1.0]]).unwrap();
        let tr = simulate(&cfg, &nm, &x, &path).unwrap();
        assert!((tr.last().row(0)[0] - 0.2).abs() < 1e-12);
        assert_eq!(tr.last().row(0)[1], 1.0);
    }
}
