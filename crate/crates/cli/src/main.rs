use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use commonnoise::bounds::{compute_constants, BoundsInput};
use commonnoise::harness::config::DumpFormat;
use commonnoise::harness::{self, io, ExperimentConfig, ExperimentReport};
use commonnoise::transport::{self, EmpiricalMeasure, TransportOptions};
use commonnoise::{simulate, Exec};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "commonnoise", version, about = "Particle systems under common environmental noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; the desk-scale defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed_noise: Option<u64>,
    #[arg(long)]
    seed_initial: Option<u64>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run every loop on the calling thread.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed_noise {
            cfg.seeds.noise = s;
        }
        if let Some(s) = self.seed_initial {
            cfg.seeds.initial_base = s;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        if self.sequential {
            cfg = cfg.with_exec(Exec::Sequential);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Dump {
    None,
    Csv,
    Binary,
}

#[derive(Args)]
struct PairArgs {
    a: PathBuf,
    b: PathBuf,
    /// Entropic regularization; also lifts the exact size limit.
    #[arg(long)]
    entropic: Option<f64>,
    /// Force Sinkhorn even for small inputs (needs --entropic).
    #[arg(long)]
    force_entropic: bool,
    #[arg(long, default_value_t = transport::DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the particle system of the config's `[sim]` block.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trajectory dump format (overrides `output.trajectories`).
        #[arg(long, value_enum)]
        dump: Option<Dump>,
    },
    /// Structural residuals of the noise model.
    NoiseCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// W1 between two CSV point clouds.
    W1(PairArgs),
    /// W2 between two CSV point clouds.
    W2(PairArgs),
    /// Stability constants as JSON.
    Bounds {
        /// Take L_K and L_sigma from a config instead of the flags.
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        l_k: f64,
        #[arg(long, default_value_t = 0.0)]
        l_sigma: f64,
        #[arg(long)]
        l_b: Option<f64>,
        #[arg(long = "t-final", short = 'T', default_value_t = 1.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        c_p: Option<f64>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
    },
    /// Picard construction of the limit measure path.
    Meanfield {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// E[sup_t W1(S^N, mu)] against N with the C~_T check and slope fit.
    Converge(Common),
    /// Conditional propagation of chaos at a frozen noise path.
    Chaos(Common),
    /// Common versus independent noise variance of <S_T, phi>.
    Dichotomy(Common),
    /// Monte Carlo checks of the stability inequalities.
    BoundSuite(Common),
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { common, dump } => cmd_simulate(&common, dump),
        Command::NoiseCheck { common, points } => cmd_noise_check(&common, points),
        Command::W1(args) => cmd_pair(&args, false),
        Command::W2(args) => cmd_pair(&args, true),
        Command::Bounds {
            config,
            l_k,
            l_sigma,
            l_b,
            t_final,
            p,
            c_p,
            c1,
            c2,
        } => {
            let mut input = match config {
                Some(path) => {
                    let cfg = ExperimentConfig::from_file(&path)?;
                    let noise = cfg.noise.build()?;
                    let k = harness::stability_constants(&cfg, &noise, p)?;
                    BoundsInput {
                        p,
                        c1: cfg.bounds.c1,
                        c2: cfg.bounds.c2,
                        ..BoundsInput::new(k.l_k, k.l_sigma, k.t_final)
                    }
                }
                None => BoundsInput {
                    p,
                    ..BoundsInput::new(l_k, l_sigma, t_final)
                },
            };
            input.l_b = l_b.or(input.l_b);
            input.c_p = c_p;
            input.c1 = c1.unwrap_or(input.c1);
            input.c2 = c2.unwrap_or(input.c2);
            let k = compute_constants(&input)?;
            println!("{}", serde_json::to_string_pretty(&json!({ "input": input, "constants": k }))?);
            Ok(())
        }
        Command::Meanfield { common, m, tol } => cmd_meanfield(&common, m, tol),
        Command::Converge(c) => experiment(&c, harness::run_convergence),
        Command::Chaos(c) => experiment(&c, harness::run_chaos),
        Command::Dichotomy(c) => experiment(&c, harness::run_dichotomy),
        Command::BoundSuite(c) => experiment(&c, harness::run_bound_suite),
    }
}

fn experiment(common: &Common, run: fn(&ExperimentConfig) -> commonnoise::Result<ExperimentReport>) -> Result<()> {
    let cfg = common.load()?;
    let report = run(&cfg)?;
    report.write_all(&cfg.output.dir)?;
    for c in &report.checks {
        println!(
            "{} {}: {:.6e} (bound {:.6e}) vs {:.6e}{}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.lhs,
            c.lhs_bound,
            c.rhs,
            if c.marginal { " [marginal]" } else { "" }
        );
    }
    println!("wrote {}", cfg.output.dir.join("report.json").display());
    if !report.passed() {
        std::process::exit(2);
    }
    Ok(())
}

fn cmd_simulate(common: &Common, dump: Option<Dump>) -> Result<()> {
    let mut cfg = common.load()?;
    if let Some(d) = dump {
        cfg.output.trajectories = match d {
            Dump::None => DumpFormat::None,
            Dump::Csv => DumpFormat::Csv,
            Dump::Binary => DumpFormat::Binary,
        };
    }
    let noise = cfg.noise.build()?;
    let x0 = cfg.sample_initial(cfg.sim.n, cfg.seeds.initial(0))?;
    let path = cfg.sim.brownian_path(&noise, cfg.seeds.noise)?;
    let traj = simulate(&cfg.sim, &noise, &x0, &path)?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let observables: Vec<Vec<f64>> = traj
        .snapshots
        .iter()
        .map(|c| cfg.observables.iter().map(|phi| phi.mean_over(c)).collect())
        .collect();
    let mut w = csv_writer(&dir.join("observables.csv"))?;
    let mut head = vec!["t".to_string()];
    head.extend((0..cfg.observables.len()).map(|j| format!("phi{j}")));
    w.write_record(&head)?;
    for (t, row) in traj.times.iter().zip(&observables) {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let report = json!({
        "experiment": "simulate",
        "config": cfg,
        "seeds": cfg.seeds,
        "times": traj.times,
        "mean_position": traj.snapshots.iter().map(|c| c.mean()).collect::<Vec<_>>(),
        "diameter": traj.snapshots.iter().map(|c| c.diameter()).collect::<Vec<_>>(),
        "observables": observables,
    });
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    if let Some(p) = io::dump_trajectory(&traj, dir, "trajectory", cfg.output.trajectories)? {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", dir.join("report.json").display());
    Ok(())
}

fn csv_writer(path: &Path) -> Result<commonnoise_csv::Writer> {
    commonnoise_csv::Writer::create(path)
}

/// Minimal CSV line writer so the binary does not need its own csv dependency.
mod commonnoise_csv {
    use std::io::Write;

    pub struct Writer(std::io::BufWriter<std::fs::File>);

    impl Writer {
        pub fn create(path: &std::path::Path) -> anyhow::Result<Self> {
            Ok(Writer(std::io::BufWriter::new(std::fs::File::create(path)?)))
        }

        pub fn write_record(&mut self, fields: &[String]) -> anyhow::Result<()> {
            writeln!(self.0, "{}", fields.join(","))?;
            Ok(())
        }

        pub fn flush(&mut self) -> anyhow::Result<()> {
            self.0.flush()?;
            Ok(())
        }
    }
}

fn cmd_noise_check(common: &Common, points: usize) -> Result<()> {
    let cfg = common.load()?;
    let noise = cfg.noise.build()?;
    let check = noise.check(points, cfg.seeds.noise);
    let limits = [
        ("q0_residual", check.q0_residual, 1e-12),
        ("divergence_analytic_max", check.divergence_analytic_max, 1e-12),
        ("divergence_fd_max", check.divergence_fd_max, 1e-6),
        ("correction_max", check.correction_max, 1e-12),
        ("covariance_residual", check.covariance_residual, 1e-12),
    ];
    let mut ok = true;
    for (name, v, lim) in limits {
        let pass = v < lim;
        ok &= pass;
        println!("{} {name}: {v:.3e} < {lim:.0e}", if pass { "PASS" } else { "FAIL" });
    }
    std::fs::create_dir_all(&cfg.output.dir)?;
    let path = cfg.output.dir.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&json!({ "noise": cfg.noise, "check": check }))?)?;
    println!("wrote {}", path.display());
    if !ok {
        std::process::exit(2);
    }
    Ok(())
}

fn cmd_pair(args: &PairArgs, squared: bool) -> Result<()> {
    let a = io::read_cloud_file(&args.a).with_context(|| format!("reading {}", args.a.display()))?;
    let b = io::read_cloud_file(&args.b).with_context(|| format!("reading {}", args.b.display()))?;
    if args.force_entropic && args.entropic.is_none() {
        bail!("--force-entropic needs --entropic <eps>");
    }
    let opts = TransportOptions {
        entropic: args.entropic,
        force_entropic: args.force_entropic,
        ..TransportOptions::default().with_exact_limit(args.exact_limit)
    };
    let (mu, nu) = (EmpiricalMeasure::uniform(a)?, EmpiricalMeasure::uniform(b)?);
    let res = if squared { transport::w2(&mu, &nu, &opts)? } else { transport::w1(&mu, &nu, &opts)? };
    println!("{}", serde_json::to_string_pretty(&res)?);
    Ok(())
}

fn cmd_meanfield(common: &Common, m: Option<usize>, tol: Option<f64>) -> Result<()> {
    let mut cfg = common.load()?;
    if let Some(m) = m {
        cfg.picard.m = m;
    }
    if let Some(t) = tol {
        cfg.picard.tol = t;
    }
    let (path, state) = harness::run_meanfield(&cfg)?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    io::write_measure_path_csv(&path, std::io::BufWriter::new(std::fs::File::create(dir.join("measure_path.csv"))?))?;
    let log: Vec<_> = state
        .log
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let prev = (k > 0 && state.log[k - 1].subinterval == e.subinterval).then(|| state.log[k - 1].gap);
            json!({
                "subinterval": e.subinterval,
                "t_start": e.t_start,
                "t_end": e.t_end,
                "iteration": e.iteration,
                "gap": e.gap,
                "gamma": state.gamma_t_star,
                "ratio": prev.map(|p| if p > 0.0 { e.gap / p } else { 0.0 }),
            })
        })
        .collect();
    let summary = json!({
        "m": cfg.picard.m,
        "tol": cfg.picard.tol,
        "t_star": state.t_star,
        "gamma_t_star": state.gamma_t_star,
        "subintervals": state.subintervals,
        "iterations": state.iteration,
        "final_gap": state.successive_gap,
        "seeds": cfg.seeds,
        "log": log,
    });
    std::fs::write(dir.join("convergence.json"), serde_json::to_string_pretty(&summary)?)?;
    println!(
        "Picard: {} subintervals of length {} (gamma {:.4}), {} iterations",
        state.subintervals, state.t_star, state.gamma_t_star, state.iteration
    );
    println!("wrote {} and {}", dir.join("measure_path.csv").display(), dir.join("convergence.json").display());
    Ok(())
}
