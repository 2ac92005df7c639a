//! The limit measure path as the fixed point of the frozen-drift push-forward
//! map `Φ(ν)_t = X^ν(t, ·)_# μ₀`, built by Picard iteration on short
//! subintervals where `Φ` is a contraction.

use crate::bounds::{compute_constants, BoundsInput, StabilityConstants, DEFAULT_C1};
use crate::brownian::BrownianPath;
use crate::cloud::PointCloud;
use crate::dynamics::{self, NoiseMode, SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::transport::{path_distance, EmpiricalMeasure, MeasurePath, TransportOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Subinterval length: largest `T / 2^k` with `γ ≤ gamma_target`.
    pub gamma_target: f64,
    pub c1: f64,
    #[serde(skip)]
    pub transport: TransportOptions,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-4,
            max_iter: 50,
            gamma_target: 0.5,
            c1: DEFAULT_C1,
            transport: TransportOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardLogEntry {
    pub subinterval: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// `m` in `gap = d(ν^{m+1}, ν^m)`.
    pub iteration: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardState {
    /// Total number of fixed-point iterations over all subintervals.
    pub iteration: usize,
    pub successive_gap: f64,
    pub t_star: f64,
    pub gamma_t_star: f64,
    pub subintervals: usize,
    pub steps_per_subinterval: usize,
    pub log: Vec<PicardLogEntry>,
    #[serde(skip)]
    pub measure_path: MeasurePath,
}

impl PicardState {
    /// Gaps of one subinterval in iteration order.
    pub fn gaps(&self, subinterval: usize) -> Vec<f64> {
        self.log.iter().filter(|e| e.subinterval == subinterval).map(|e| e.gap).collect()
    }
}

/// Lipschitz data of the frozen-drift flow for this configuration.
pub fn flow_constants(cfg: &SimConfig, noise: &NoiseModel, c1: f64) -> Result<StabilityConstants> {
    let l_sigma = match cfg.noise_mode {
        NoiseMode::Common => noise.lipschitz_bound(),
        _ => 0.0,
    };
    let mut input = BoundsInput::new(cfg.kernel.lipschitz_constant(), l_sigma, cfg.t_final.max(cfg.dt));
    input.c1 = c1;
    compute_constants(&input)
}

/// Push `initial` forward under the frozen drift of `measures` (one measure
/// per snapshot time of `cfg`) and the shared increments of `path`.
pub fn frozen_drift_flow(
    measures: &MeasurePath,
    cfg: &SimConfig,
    noise: &NoiseModel,
    path: &BrownianPath,
    initial: &PointCloud,
) -> Result<Trajectory> {
    dynamics::simulate_frozen(cfg, noise, measures, initial, path)
}

/// Fixed point of `Φ` started from the constant path at `mu0`, on the full
/// step grid of `cfg` (snapshot stride is forced to 1).
pub fn picard_fixed_point(
    mu0: &PointCloud,
    cfg: &SimConfig,
    noise: &NoiseModel,
    path: &BrownianPath,
    opts: &PicardOptions,
) -> Result<(MeasurePath, PicardState)> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::invalid("Picard needs tol > 0 and max_iter >= 1"));
    }
    if mu0.is_empty() {
        return Err(Error::invalid("Picard needs a non-empty initial cloud"));
    }
    let cfg = SimConfig {
        snapshot_stride: 1,
        n: mu0.len(),
        ..cfg.clone()
    };
    cfg.validate()?;
    let total_steps = cfg.num_steps()?;
    let constants = flow_constants(&cfg, noise, opts.c1)?;
    let (mut t_star, mut gamma_star) = constants.picard_subinterval(opts.gamma_target);
    let mut sub_steps = ((t_star / cfg.dt).round() as usize).max(1);
    if total_steps > 0 && sub_steps > total_steps {
        sub_steps = total_steps;
    }
    if (sub_steps as f64 * cfg.dt - t_star).abs() > 1e-9 {
        t_star = sub_steps as f64 * cfg.dt;
        gamma_star = constants.gamma_at(t_star);
    }

    let mut times = vec![0.0];
    let mut clouds = vec![mu0.clone()];
    let mut log = Vec::new();
    let mut total_iter = 0;
    let mut last_gap = 0.0;
    let mut start = mu0.clone();
    let mut step0 = 0;
    let mut sub = 0;
    while step0 < total_steps {
        let steps = sub_steps.min(total_steps - step0);
        let window_times: Vec<f64> = (0..=steps).map(|s| (step0 + s) as f64 * cfg.dt).collect();
        let mut nu = MeasurePath::constant(window_times.clone(), EmpiricalMeasure::uniform(start.clone())?)?;
        let mut nu_traj: Option<Trajectory> = None;
        let mut converged = false;
        for m in 0..opts.max_iter + 1 {
            let traj = dynamics::run_frozen_window(&cfg, noise, &nu, &start, path, step0)?;
            let next = MeasurePath::from_clouds(window_times.clone(), traj.snapshots.clone())?;
            let gap = path_distance(&next, &nu, &opts.transport)?;
            log.push(PicardLogEntry {
                subinterval: sub,
                t_start: window_times[0],
                t_end: *window_times.last().unwrap(),
                iteration: m,
                gap,
            });
            last_gap = gap;
            nu = next;
            nu_traj = Some(traj);
            if gap < opts.tol && m > 0 {
                // ν^m reproduced itself within tol; keep the fresher Φ(ν^m).
                total_iter += m;
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::PicardNotConverged {
                subinterval: sub,
                iterations: opts.max_iter,
                last_gap,
                gamma: gamma_star,
            });
        }
        let traj = nu_traj.expect("at least one iteration");
        for (k, c) in traj.snapshots.into_iter().enumerate().skip(1) {
            times.push(window_times[k]);
            clouds.push(c);
        }
        start = clouds.last().unwrap().clone();
        step0 += steps;
        sub += 1;
    }
    let measure_path = MeasurePath::from_clouds(times, clouds)?;
    let state = PicardState {
        iteration: total_iter,
        successive_gap: last_gap,
        t_star,
        gamma_t_star: gamma_star,
        subintervals: sub,
        steps_per_subinterval: sub_steps,
        log,
        measure_path: measure_path.clone(),
    };
    Ok((measure_path, state))
}

/// One particle driven by the frozen drift of `mu_path` and the common noise.
pub fn limit_sde_solve(
    mu_path: &MeasurePath,
    cfg: &SimConfig,
    noise: &NoiseModel,
    path: &BrownianPath,
    x0: &[f64],
) -> Result<Trajectory> {
    let x = PointCloud::new(x0.len(), x0.to_vec())?;
    let cfg = SimConfig { n: 1, ..cfg.clone() };
    dynamics::simulate_frozen(&cfg, noise, mu_path, &x, path)
}
