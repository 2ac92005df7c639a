//! The four statistical experiments plus the Picard driver.
//!
//! Conditioning on the noise is realized by fixing the Brownian seed and
//! resampling initial conditions. The limit path `μ_t` is represented by a
//! directly simulated `M_ref`-particle cloud sharing the noise path with the
//! `N`-particle systems (the empirical measure is itself a solution, so the
//! large cloud is a consistent stand-in for the fixed point).

use super::config::{DumpFormat, ExperimentConfig};
use super::report::{ExperimentReport, InequalityCheck, PerN, Runtime};
use super::stats::{log_stderr, mean_ratio_lower, variance_ratio_lower, weighted_line_fit, Summary};
use crate::bounds::{compute_constants, theoretical_rate, BoundsInput, RateFamily, StabilityConstants};
use crate::brownian::BrownianPath;
use crate::cloud::{dist, PointCloud};
use crate::dynamics::{simulate, simulate_frozen, NoiseMode, SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::meanfield::{picard_fixed_point, PicardOptions, PicardState};
use crate::noise::NoiseModel;
use crate::observable::Observable;
use crate::rng;
use crate::transport::{self, EmpiricalMeasure, MeasurePath};
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Instant;

const LEVEL: f64 = 0.95;

/// Lipschitz data of `cfg` with BDG constant for exponent `p`.
pub fn stability_constants(cfg: &ExperimentConfig, noise: &NoiseModel, p: f64) -> Result<StabilityConstants> {
    let l_sigma = match cfg.sim.noise_mode {
        NoiseMode::Common => noise.lipschitz_bound(),
        _ => 0.0,
    };
    let input = BoundsInput {
        p,
        c1: cfg.bounds.c1,
        c2: cfg.bounds.c2,
        ..BoundsInput::new(cfg.sim.kernel.lipschitz_constant(), l_sigma, cfg.sim.t_final)
    };
    compute_constants(&input)
}

fn sim_with(cfg: &ExperimentConfig, n: usize, stride: usize) -> SimConfig {
    SimConfig {
        n,
        snapshot_stride: stride,
        ..cfg.sim.clone()
    }
}

/// Brownian path wide enough for `n` particles in every noise mode.
fn path_for(cfg: &ExperimentConfig, noise: &NoiseModel, n: usize, seed: u64) -> Result<BrownianPath> {
    sim_with(cfg, n, 1).brownian_path(noise, seed)
}

fn w1(a: &PointCloud, b: &PointCloud, opts: &transport::TransportOptions) -> Result<f64> {
    transport::w1_clouds(a, b, opts)
}

fn summarize(values: &[f64]) -> Result<Summary> {
    Summary::of(values)
}

fn finish(mut report: ExperimentReport, start: Instant, cfg: &ExperimentConfig) -> ExperimentReport {
    report.runtime = Runtime::since(start, cfg.sim.exec);
    report
}

/// Upper one-sided bound on `mean_a / mean_b` (delta method, ignoring the
/// positive correlation of paired replicas, which only widens it).
fn mean_ratio_upper(a: &Summary, b: &Summary) -> f64 {
    if !(b.mean > 0.0) {
        return f64::INFINITY;
    }
    if a.mean <= 0.0 {
        return 0.0;
    }
    let se = ((a.stderr / a.mean).powi(2) + (b.stderr / b.mean).powi(2)).sqrt();
    a.mean / b.mean * (super::stats::normal_quantile(LEVEL) * se).exp()
}

#[derive(Debug, Clone, Default)]
struct ConvergenceReplica {
    sup_w1: Vec<f64>,
    initial_w1: Vec<f64>,
    final_w1: Vec<f64>,
    /// `[observable][N]`: sup over the grid of `|⟨S^N, φ⟩ − ⟨μ, φ⟩|`.
    phi_gap: Vec<Vec<f64>>,
    sensitivity: Option<(f64, f64)>,
    dumps: Vec<(String, Trajectory)>,
}

/// `E[sup_t W₁(S_t^N, μ_t)]` against `N`, the `C̃_T` inequality and the
/// log-log slope.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let noise = cfg.noise.build()?;
    let opts = cfg.transport_options();
    let max_n = cfg.max_n();
    if opts.entropic.is_none() && cfg.m_ref > opts.exact_limit {
        return Err(Error::TooLargeForExact {
            n: max_n,
            m: cfg.m_ref,
            limit: opts.exact_limit,
        });
    }
    let stride = cfg.convergence.w1_stride;
    let factor = cfg.convergence.sensitivity_factor;
    let sens_size = (factor > 0 && factor * max_n != cfg.m_ref && factor * max_n <= opts.exact_limit)
        .then_some(factor * max_n);
    let sample_size = cfg.m_ref.max(sens_size.unwrap_or(0));
    let path = path_for(cfg, &noise, sample_size, cfg.seeds.noise)?;
    let constants = stability_constants(cfg, &noise, 1.0)?;
    let grid = cfg.n_grid.clone();
    let dump = cfg.output.trajectories != DumpFormat::None;

    let replicas: Vec<Result<ConvergenceReplica>> = cfg.sim.exec.map(cfg.replicas, |r| {
        let x0 = cfg.sample_initial(sample_size, cfg.seeds.initial(r))?;
        let reference = simulate(&sim_with(cfg, cfg.m_ref, stride), &noise, &x0.head(cfg.m_ref), &path)?;
        let mu_phi: Vec<Vec<f64>> = cfg
            .observables
            .iter()
            .map(|phi| reference.snapshots.iter().map(|c| phi.mean_over(c)).collect())
            .collect();
        let mut out = ConvergenceReplica {
            phi_gap: vec![Vec::new(); cfg.observables.len()],
            ..Default::default()
        };
        let mut max_traj = None;
        for &n in &grid {
            let traj = simulate(&sim_with(cfg, n, stride), &noise, &x0.head(n), &path)?;
            let series: Vec<f64> = traj
                .snapshots
                .iter()
                .zip(&reference.snapshots)
                .map(|(a, b)| w1(a, b, &opts))
                .collect::<Result<_>>()?;
            out.initial_w1.push(series[0]);
            out.final_w1.push(*series.last().unwrap());
            out.sup_w1.push(series.iter().cloned().fold(0.0, f64::max));
            for (j, phi) in cfg.observables.iter().enumerate() {
                let gap = traj
                    .snapshots
                    .iter()
                    .zip(&mu_phi[j])
                    .map(|(c, m)| (phi.mean_over(c) - m).abs())
                    .fold(0.0, f64::max);
                out.phi_gap[j].push(gap);
            }
            if n == max_n {
                max_traj = Some(traj);
            }
        }
        let max_traj = max_traj.expect("max N is in the grid");
        if let Some(size) = sens_size {
            let alt = simulate(&sim_with(cfg, size, stride), &noise, &x0.head(size), &path)?;
            let sup = |reference: &Trajectory| -> Result<f64> {
                let mut s = 0.0f64;
                for (a, b) in max_traj.snapshots.iter().zip(&reference.snapshots) {
                    s = s.max(w1(a, b, &opts)?);
                }
                Ok(s)
            };
            out.sensitivity = Some((*out.sup_w1.last().unwrap(), sup(&alt)?));
        }
        if dump && r == 0 {
            out.dumps.push(("reference_r0".into(), reference));
            out.dumps.push((format!("particles_n{max_n}_r0"), max_traj));
        }
        Ok(out)
    });
    let replicas: Vec<ConvergenceReplica> = replicas.into_iter().collect::<Result<_>>()?;

    let mut report = ExperimentReport::new("converge", cfg);
    report.curve_key = Some("sup_w1".into());
    for (k, &n) in grid.iter().enumerate() {
        let mut row = PerN::new(n);
        let col = |f: &dyn Fn(&ConvergenceReplica) -> f64| -> Vec<f64> { replicas.iter().map(f).collect() };
        row.stats.insert("sup_w1".into(), summarize(&col(&|r| r.sup_w1[k]))?);
        row.stats.insert("initial_w1".into(), summarize(&col(&|r| r.initial_w1[k]))?);
        row.stats.insert("final_w1".into(), summarize(&col(&|r| r.final_w1[k]))?);
        for j in 0..cfg.observables.len() {
            row.stats.insert(format!("phi{j}_gap"), summarize(&col(&|r| r.phi_gap[j][k]))?);
        }
        report.per_n.push(row);
    }

    // C̃_T inequality on the ratio of expectations, for every N.
    for row in &report.per_n {
        let (sup, init) = (row.stat("sup_w1").unwrap(), row.stat("initial_w1").unwrap());
        report.checks.push(
            InequalityCheck::new(
                format!("c_tilde_ratio_n{}", row.n),
                "E[sup_t W1(S_t^N, mu_t)] / E[W1(S_0^N, mu_0)] <= C~_T",
                sup.mean / init.mean,
                mean_ratio_upper(sup, init),
                constants.c_tilde_t,
            )
            .with_constant("C_tilde_T", constants.c_tilde_t)
            .with_constant("ln_C_tilde_T", constants.ln_c_tilde_t)
            .with_constant("n_tilde", constants.n_tilde as f64),
        );
    }

    // log-log slope of E[sup W₁] against N.
    let xs: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let sups: Vec<&Summary> = report.per_n.iter().map(|r| r.stat("sup_w1").unwrap()).collect();
    let ys: Vec<f64> = sups.iter().map(|s| s.mean.ln()).collect();
    let sig: Vec<f64> = sups.iter().map(|s| log_stderr(s).max(1e-12)).collect();
    if grid.len() >= 3 {
        let fit = weighted_line_fit(&xs, &ys, &sig, LEVEL)?;
        report.checks.push(
            InequalityCheck::new(
                "slope",
                "upper 95% CI bound of the log-log slope of E[sup_t W1] vs N below target",
                fit.slope,
                fit.slope_upper,
                cfg.convergence.slope_upper,
            )
            .with_stderr(fit.slope_stderr),
        );
        report.fit = Some(fit);
    }
    if let Ok(rate) = theoretical_rate(cfg.sim.dim, f64::INFINITY, RateFamily::FournierGuillin) {
        let w: Vec<f64> = sig.iter().map(|s| 1.0 / (s * s)).collect();
        let ln_c = (0..grid.len()).map(|i| w[i] * (ys[i] - rate.eval(grid[i] as f64).ln())).sum::<f64>()
            / w.iter().sum::<f64>();
        for row in report.per_n.iter_mut() {
            row.overlay = Some(ln_c.exp() * rate.eval(row.n as f64));
        }
        report.overlay_formula = Some(format!("{:.6e} * ({})", ln_c.exp(), rate.formula));
    }

    if let Some(size) = sens_size {
        let base: Vec<f64> = replicas.iter().map(|r| r.sensitivity.unwrap().0).collect();
        let alt: Vec<f64> = replicas.iter().map(|r| r.sensitivity.unwrap().1).collect();
        let (b, a) = (summarize(&base)?, summarize(&alt)?);
        #[derive(Serialize)]
        struct Sensitivity {
            n: usize,
            m_ref: usize,
            m_alt: usize,
            sup_w1_ref: Summary,
            sup_w1_alt: Summary,
            relative_change: f64,
        }
        report.set_extra(
            "reference_sensitivity",
            Sensitivity {
                n: max_n,
                m_ref: cfg.m_ref,
                m_alt: size,
                relative_change: (a.mean - b.mean) / b.mean,
                sup_w1_ref: b,
                sup_w1_alt: a,
            },
        );
    }
    report.set_extra("constants", &constants);
    report.set_extra("w1_times", sim_with(cfg, 1, stride).snapshot_steps()?.iter().map(|&s| s as f64 * cfg.sim.dt).collect::<Vec<_>>());
    report.trajectories = replicas.into_iter().flat_map(|r| r.dumps).collect();
    Ok(finish(report, start, cfg))
}

fn phi_bound(phi: &Observable) -> Result<f64> {
    let m = phi.bound();
    if !m.is_finite() {
        return Err(Error::invalid("observables must be bounded"));
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy)]
struct ChaosSample {
    /// Off-diagonal pair average, the estimator of `E[φ₁(X¹)φ₂(X²) | F^B]`.
    pair: f64,
    /// `⟨S, φ₁⟩⟨S, φ₂⟩`.
    product: f64,
    s_phi1: f64,
    tagged_l1_mean: f64,
    tagged_l1_first: f64,
}

/// Conditional propagation of chaos at one frozen noise path.
pub fn run_chaos(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let noise = cfg.noise.build()?;
    let (phi1, phi2) = (&cfg.chaos.phi1, &cfg.chaos.phi2);
    let m_phi = phi_bound(phi1)?.max(phi_bound(phi2)?);
    let rc = cfg.chaos.replicas.unwrap_or(cfg.replicas);
    let max_n = cfg.max_n();
    let path = path_for(cfg, &noise, cfg.m_ref.max(max_n), cfg.seeds.noise)?;
    let constants = stability_constants(cfg, &noise, 1.0)?;

    // Reference μ with its own initial sample, independent of every replica.
    let ref_seed = rng::derive_seed(cfg.seeds.initial_base, u64::MAX);
    let full = sim_with(cfg, cfg.m_ref, 1);
    let reference = simulate(&full, &noise, &cfg.sample_initial(cfg.m_ref, ref_seed)?, &path)?;
    let mu_path = reference.measure_path()?;
    let mu_t = reference.last();
    let (mu1, mu2) = (phi1.mean_over(mu_t), phi2.mean_over(mu_t));
    let final_only = cfg.sim.num_steps()?.max(1);

    // Frozen flows move each particle on its own and samples are prefix
    // stable, so one limit flow per replica at max N serves every N.
    let per_replica: Vec<Result<Vec<ChaosSample>>> = cfg.sim.exec.map(rc, |r| {
        let x0_max = cfg.sample_initial(max_n, cfg.seeds.initial(r))?;
        let lim = simulate_frozen(&sim_with(cfg, max_n, 1), &noise, &mu_path, &x0_max, &path)?;
        cfg.n_grid
            .iter()
            .map(|&n| {
                let x0 = x0_max.head(n);
                let traj = simulate(&sim_with(cfg, n, final_only), &noise, &x0, &path)?;
                let xs = traj.last();
                let (s1, s2) = (phi1.mean_over(xs), phi2.mean_over(xs));
                let diag = xs.rows().map(|x| phi1.value(x) * phi2.value(x)).sum::<f64>() / n as f64;
                let nf = n as f64;
                let pair = if n > 1 { (nf * s1 * s2 - diag) / (nf - 1.0) } else { diag };
                let ys = lim.last().head(n);
                let l1: Vec<f64> = xs.rows().zip(ys.rows()).map(|(a, b)| dist(a, b)).collect();
                Ok(ChaosSample {
                    pair,
                    product: s1 * s2,
                    s_phi1: s1,
                    tagged_l1_mean: l1.iter().sum::<f64>() / nf,
                    tagged_l1_first: l1[0],
                })
            })
            .collect()
    });
    let per_replica: Vec<Vec<ChaosSample>> = per_replica.into_iter().collect::<Result<_>>()?;
    // N-major, replicas inside
    let samples: Vec<ChaosSample> = (0..cfg.n_grid.len()).flat_map(|k| per_replica.iter().map(move |v| v[k])).collect();

    let mut report = ExperimentReport::new("chaos", cfg);
    report.curve_key = Some("factorization_gap".into());
    let mu_product = mu1 * mu2;
    let mut l1_means = Vec::new();
    for (k, &n) in cfg.n_grid.iter().enumerate() {
        let block = &samples[k * rc..(k + 1) * rc];
        let col = |f: &dyn Fn(&ChaosSample) -> f64| -> Vec<f64> { block.iter().map(f).collect() };
        let algebraic = col(&|s| (s.pair - s.product).abs());
        let mut row = PerN::new(n);
        row.stats.insert("pair_mean".into(), summarize(&col(&|s| s.pair))?);
        row.stats.insert("product_mean".into(), summarize(&col(&|s| s.product))?);
        row.stats.insert("algebraic_gap".into(), summarize(&algebraic)?);
        row.stats.insert("factorization_gap".into(), summarize(&col(&|s| (s.pair - mu_product).abs()))?);
        row.stats.insert("factorization_signed".into(), summarize(&col(&|s| s.pair - mu_product))?);
        row.stats.insert("s_mu_gap".into(), summarize(&col(&|s| (s.s_phi1 - mu1).abs()))?);
        row.stats.insert("tagged_l1".into(), summarize(&col(&|s| s.tagged_l1_mean))?);
        row.stats.insert("tagged_l1_first".into(), summarize(&col(&|s| s.tagged_l1_first))?);
        let worst = algebraic.iter().cloned().fold(0.0, f64::max);
        let pair = row.stat("pair_mean").unwrap().mean;
        let prod = row.stat("product_mean").unwrap().mean;
        report.checks.push(
            InequalityCheck::new(
                format!("algebraic_n{n}"),
                "|E[phi1(X1) phi2(X2)|F^B] - E[<S,phi1><S,phi2>|F^B]| <= 2 M^2 / N, every replica",
                (pair - prod).abs(),
                worst,
                2.0 * m_phi * m_phi / n as f64,
            )
            .with_constant("M_phi", m_phi),
        );
        l1_means.push(row.stat("tagged_l1").unwrap().mean);
        report.per_n.push(row);
    }
    let (first, last) = (report.per_n.first().unwrap(), report.per_n.last().unwrap());
    if first.n != last.n {
        let (g0, g1) = (first.stat("factorization_gap").unwrap(), last.stat("factorization_gap").unwrap());
        report.checks.push(
            InequalityCheck::at_least(
                "factorization_gap_ratio",
                format!("gap(N={}) / gap(N={}) >= factor at 95% confidence", first.n, last.n),
                g0.mean / g1.mean,
                mean_ratio_lower(g0, g1, LEVEL),
                cfg.chaos.gap_factor,
            ),
        );
    }
    report.checks.push(InequalityCheck::holds(
        "tagged_l1_monotone",
        "E[|X^{i,N}_T - X^i_T|] strictly decreasing in N",
        l1_means.windows(2).all(|w| w[1] < w[0]),
    ));
    report.set_extra("mu_phi1", mu1);
    report.set_extra("mu_phi2", mu2);
    report.set_extra("m_phi", m_phi);
    report.set_extra("replicas", rc);
    report.set_extra("gamma_T", constants.gamma_t);
    Ok(finish(report, start, cfg))
}

/// Variance over noise seeds of `⟨S_T^N, φ⟩` in two noise modes.
pub fn run_dichotomy(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let noise = cfg.noise.build()?;
    let dc = &cfg.dichotomy;
    phi_bound(&dc.phi)?;
    let n = dc.n.unwrap_or(cfg.max_n());
    let final_only = cfg.sim.num_steps()?.max(1);
    let arms = [dc.arms.0, dc.arms.1];
    let values: Vec<Result<[f64; 2]>> = cfg.sim.exec.map(dc.noise_seeds, |k| {
        let x0 = cfg.sample_initial(n, cfg.seeds.initial(k))?;
        let mut out = [0.0; 2];
        for (a, mode) in arms.iter().enumerate() {
            let sim = SimConfig {
                noise_mode: *mode,
                ..sim_with(cfg, n, final_only)
            };
            let path = sim.brownian_path(&noise, cfg.seeds.noise_at(k))?;
            out[a] = dc.phi.mean_over(simulate(&sim, &noise, &x0, &path)?.last());
        }
        Ok(out)
    });
    let values: Vec<[f64; 2]> = values.into_iter().collect::<Result<_>>()?;
    let a = summarize(&values.iter().map(|v| v[0]).collect::<Vec<_>>())?;
    let b = summarize(&values.iter().map(|v| v[1]).collect::<Vec<_>>())?;
    let ratio = a.variance() / b.variance();
    let mut report = ExperimentReport::new("dichotomy", cfg);
    let mut row = PerN::new(n);
    row.stats.insert(format!("{:?}", dc.arms.0).to_lowercase(), a);
    row.stats.insert(format!("{:?}", dc.arms.1).to_lowercase(), b);
    report.per_n.push(row);
    report.checks.push(
        InequalityCheck::at_least(
            "variance_ratio",
            "Var_common(<S_T^N, phi>) / Var_independent(<S_T^N, phi>) >= factor (lower 95% F bound)",
            ratio,
            variance_ratio_lower(&a, &b, LEVEL),
            dc.factor,
        ),
    );
    #[derive(Serialize)]
    struct Arm {
        mode: NoiseMode,
        variance: f64,
        variance_ci95: (f64, f64),
        values: Vec<f64>,
    }
    report.set_extra(
        "arms",
        [(dc.arms.0, &a, 0), (dc.arms.1, &b, 1)]
            .iter()
            .map(|(mode, s, i)| Arm {
                mode: *mode,
                variance: s.variance(),
                variance_ci95: s.variance_interval(LEVEL),
                values: values.iter().map(|v| v[*i]).collect(),
            })
            .collect::<Vec<_>>(),
    );
    report.set_extra("variance_ratio", ratio);
    report.set_extra("n", n);
    Ok(finish(report, start, cfg))
}

#[derive(Debug, Clone)]
struct BoundSample {
    limsol: [f64; 2],
    drift: f64,
    existence: f64,
    sup_w1: f64,
    initial_w1: f64,
    w2_sq: Vec<f64>,
}

/// Monte Carlo sides of the stability inequalities against the constants
/// of the bounds module.
pub fn run_bound_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let noise = cfg.noise.build()?;
    let bs = cfg.bound_suite;
    let m = bs.m;
    if m == 0 || !(bs.pair_separation > 0.0) {
        return Err(Error::Config("bound_suite needs m >= 1 and a positive pair separation".into()));
    }
    let k1 = stability_constants(cfg, &noise, 1.0)?;
    let k2 = stability_constants(cfg, &noise, 2.0)?;
    let path = path_for(cfg, &noise, 2 * m, cfg.seeds.noise)?;
    let opts = cfg.transport_options();
    let sim = sim_with(cfg, m, 1);
    let steps = sim.num_steps()?;
    let grid: Vec<usize> = {
        let mut g: Vec<usize> = (0..=steps).step_by(bs.stride).collect();
        if *g.last().unwrap() != steps {
            g.push(steps);
        }
        g
    };
    let dim = cfg.sim.dim;

    let samples: Vec<Result<BoundSample>> = cfg.sim.exec.map(cfg.replicas, |r| {
        let seed = cfg.seeds.initial(r);
        let mu0 = cfg.sample_initial(m, seed)?;
        let mut shift = vec![0.0; dim];
        shift[0] = bs.shift;
        let nu0 = cfg.sample_initial(m, rng::derive_seed(seed, 1))?.translated(&shift);
        let mu = simulate(&sim, &noise, &mu0, &path)?;
        let nu = simulate(&sim, &noise, &nu0, &path)?;
        let (mup, nup) = (mu.measure_path()?, nu.measure_path()?);

        // x' = x + sep · u with u uniform on the sphere
        let mut pairs = mu0.as_slice().to_vec();
        let mut u = vec![0.0; dim];
        for i in 0..m {
            rng::fill_normals(rng::derive_seed(seed, 2), i as u64, 0, &mut u);
            let nrm = crate::cloud::norm(&u);
            pairs.extend(mu0.row(i).iter().zip(&u).map(|(x, v)| x + bs.pair_separation * v / nrm));
        }
        let pairs = PointCloud::new(dim, pairs)?;
        let fa = simulate_frozen(&sim_with(cfg, 2 * m, 1), &noise, &mup, &pairs, &path)?;
        let fb = simulate_frozen(&sim, &noise, &nup, &mu0, &path)?;

        let mut limsol = [0.0; 2];
        let mut drift = 0.0;
        for i in 0..m {
            let mut sup_pair = 0.0f64;
            let mut sup_drift = 0.0f64;
            for (a, b) in fa.snapshots.iter().zip(&fb.snapshots) {
                sup_pair = sup_pair.max(dist(a.row(i), a.row(m + i)));
                sup_drift = sup_drift.max(dist(a.row(i), b.row(i)));
            }
            let sep0 = dist(pairs.row(i), pairs.row(m + i));
            limsol[0] += sup_pair / sep0;
            limsol[1] += (sup_pair / sep0).powi(2);
            drift += sup_drift;
        }
        limsol.iter_mut().for_each(|v| *v /= m as f64);
        drift /= m as f64;

        let mut sup_w1 = 0.0f64;
        let mut existence = 0.0f64;
        let mut initial_w1 = 0.0;
        let mut w2_sq = Vec::with_capacity(grid.len());
        for (g, &s) in grid.iter().enumerate() {
            let (a, b) = (mup.at(s), nup.at(s));
            let d = transport::w1(a, b, &opts)?.value;
            if g == 0 {
                initial_w1 = d;
            }
            sup_w1 = sup_w1.max(d);
            w2_sq.push(transport::w2(a, b, &opts)?.value.powi(2));
            let pa = EmpiricalMeasure::uniform(fa.snapshots[s].head(m))?;
            let pb = EmpiricalMeasure::uniform(fb.snapshots[s].clone())?;
            existence = existence.max(transport::w1(&pa, &pb, &opts)?.value);
        }
        Ok(BoundSample {
            limsol,
            drift,
            existence,
            sup_w1,
            initial_w1,
            w2_sq,
        })
    });
    let samples: Vec<BoundSample> = samples.into_iter().collect::<Result<_>>()?;
    let col = |f: &dyn Fn(&BoundSample) -> f64| -> Result<Summary> { summarize(&samples.iter().map(f).collect::<Vec<_>>()) };

    let mut report = ExperimentReport::new("bound-suite", cfg);
    for (p, k) in [(1usize, &k1), (2, &k2)] {
        let s = col(&|b| b.limsol[p - 1])?;
        report.checks.push(
            InequalityCheck::new(
                format!("limsol_p{p}"),
                format!("E[sup_t |X(t,x) - X(t,x')|^{p}] / |x - x'|^{p} <= C_{{{p},T}}"),
                s.mean,
                s.upper(LEVEL),
                k.c_p_t,
            )
            .with_stderr(s.stderr)
            .with_constant("C_pT", k.c_p_t)
            .with_constant("ln_C_pT", k.ln_c_p_t)
            .with_constant("n_star", k.n_star as f64),
        );
    }
    // `E[L] <= c E[R]` is judged on the paired slacks `c R_r - L_r`: it holds
    // when their lower 95% bound is nonnegative.
    let paired = |name: &str, inequality: &str, l: &dyn Fn(&BoundSample) -> f64, r: &dyn Fn(&BoundSample) -> f64, c: f64| -> Result<InequalityCheck> {
        let (ls, rs) = (col(l)?, col(r)?);
        let slack = col(&|b| c * r(b) - l(b))?;
        let rhs = c * rs.mean;
        Ok(InequalityCheck::new(name, inequality, ls.mean, rhs - slack.lower(LEVEL), rhs)
            .with_stderr(slack.stderr)
            .with_constant("paired_slack_mean", slack.mean)
            .with_constant("paired_slack_lower", slack.lower(LEVEL)))
    };
    report.checks.push(
        paired(
            "drift_diverso",
            "E[sup_t |X^mu(t,x) - X^nu(t,x)|] <= gamma_T E[sup_t W1(mu_t, nu_t)]",
            &|b| b.drift,
            &|b| b.sup_w1,
            k1.gamma_t,
        )?
        .with_constant("gamma_T", k1.gamma_t),
    );
    report.checks.push(
        paired(
            "existence",
            "d_S(Phi mu, Phi nu) <= gamma_T d_S(mu, nu)",
            &|b| b.existence,
            &|b| b.sup_w1,
            k1.gamma_t,
        )?
        .with_constant("gamma_T", k1.gamma_t),
    );
    report.checks.push(
        paired(
            "initial_stability",
            "d_S(mu, nu) <= C~_T E[W1(mu_0, nu_0)]",
            &|b| b.sup_w1,
            &|b| b.initial_w1,
            k1.c_tilde_t,
        )?
        .with_constant("C_tilde_T", k1.c_tilde_t),
    );
    let d = col(&|b| b.sup_w1)?;
    let w0 = col(&|b| b.initial_w1)?;
    let w2_0 = col(&|b| b.w2_sq[0])?;
    let mut tightest: Option<(f64, InequalityCheck)> = None;
    let mut w2_rows = Vec::new();
    for (g, &s) in grid.iter().enumerate() {
        let t = s as f64 * cfg.sim.dt;
        let factor = k2.w2_factor(t);
        let check = paired(
            "w2_stability",
            "E[W2^2(mu_t, nu_t)] <= 4 exp(4t(2t L_K^2 + C_2 L_sigma^2)) E[W2^2(mu_0, nu_0)] at every grid t (tightest t shown)",
            &|b| b.w2_sq[g],
            &|b| b.w2_sq[0],
            factor,
        )?;
        w2_rows.push((t, check.lhs, check.lhs_bound, check.rhs));
        let margin = check.rhs - check.lhs_bound;
        if tightest.as_ref().is_none_or(|(m, _)| margin < *m) {
            tightest = Some((margin, check.with_constant("t", t).with_constant("C2", k2.c2)));
        }
    }
    report.checks.push(tightest.expect("grid has t = 0").1);
    report.set_extra("w2_curve", w2_rows);
    report.set_extra("constants_p1", &k1);
    report.set_extra("constants_p2", &k2);
    let mut sides = BTreeMap::new();
    sides.insert("sup_w1", d);
    sides.insert("initial_w1", w0);
    sides.insert("initial_w2_sq", w2_0);
    report.set_extra("summaries", sides);
    Ok(finish(report, start, cfg))
}

/// Picard construction of `μ` from a sample of `μ₀` (size `picard.m`).
pub fn run_meanfield(cfg: &ExperimentConfig) -> Result<(MeasurePath, PicardState)> {
    cfg.validate()?;
    let noise = cfg.noise.build()?;
    let m = cfg.picard.m;
    let x0 = cfg.sample_initial(m, cfg.seeds.initial(0))?;
    let path = path_for(cfg, &noise, m, cfg.seeds.noise)?;
    let opts = PicardOptions {
        tol: cfg.picard.tol,
        max_iter: cfg.picard.max_iter,
        c1: cfg.bounds.c1,
        transport: cfg.transport_options(),
        ..PicardOptions::default()
    };
    picard_fixed_point(&x0, &sim_with(cfg, m, 1), &noise, &path, &opts)
}
