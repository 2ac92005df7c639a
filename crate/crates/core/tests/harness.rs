use commonnoise::harness::{self, ExperimentConfig};
use commonnoise::transport::{path_distance, TransportOptions};
use commonnoise::{simulate, NoiseMode};

/// Desk noise and law on a short horizon with small particle counts.
fn tiny() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.sim.t_final = 0.25;
    cfg.sim.dt = 1.0 / 32.0;
    cfg.n_grid = vec![8, 16, 32];
    cfg.m_ref = 128;
    cfg.replicas = 3;
    cfg.convergence.w1_stride = 2;
    cfg.chaos.replicas = Some(4);
    cfg.dichotomy.noise_seeds = 6;
    cfg.bound_suite.m = 16;
    cfg.bound_suite.stride = 2;
    cfg.picard.m = 32;
    cfg
}

#[test]
fn full_size_run_coincides_with_the_reference() {
    let cfg = tiny();
    let noise = cfg.noise.build().unwrap();
    let x0 = cfg.sample_initial(cfg.m_ref, 5).unwrap();
    let path = cfg.sim.brownian_path(&noise, 1).unwrap();
    let reference = simulate(&cfg.sim, &noise, &x0, &path).unwrap().measure_path().unwrap();
    let again = simulate(&cfg.sim, &noise, &x0.head(cfg.m_ref), &path).unwrap().measure_path().unwrap();
    assert_eq!(path_distance(&reference, &again, &TransportOptions::default()).unwrap(), 0.0);
}

#[test]
fn equal_arms_have_unit_variance_ratio() {
    for mode in [NoiseMode::None, NoiseMode::Common] {
        let mut cfg = tiny();
        cfg.dichotomy.arms = (mode, mode);
        let report = harness::run_dichotomy(&cfg).unwrap();
        assert_eq!(report.extra["variance_ratio"].as_f64().unwrap(), 1.0);
        assert!(!report.check("variance_ratio").unwrap().passed);
    }
}

#[test]
fn convergence_report_is_complete() {
    let cfg = tiny();
    let report = harness::run_convergence(&cfg).unwrap();
    assert_eq!(report.per_n.len(), 3);
    for n in &cfg.n_grid {
        assert!(report.check(&format!("c_tilde_ratio_n{n}")).is_some());
    }
    assert!(report.check("slope").is_some());
    let fit = report.fit.as_ref().unwrap();
    assert!(fit.slope_lower <= fit.slope && fit.slope <= fit.slope_upper);
    assert!(report.per_n.iter().all(|r| r.overlay.is_some()));

    let dir = tempfile::tempdir().unwrap();
    report.write_all(dir.path()).unwrap();
    let curves = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let lines: Vec<&str> = curves.lines().collect();
    assert_eq!(lines[0], "N,mean,stderr,overlay");
    assert_eq!(lines.len(), 4);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["seeds"]["noise"], cfg.seeds.noise);
    assert!(json["runtime"]["elapsed_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reference_too_large_for_exact_transport_is_refused() {
    let mut cfg = tiny();
    cfg.transport.exact_limit = 64;
    assert!(harness::run_convergence(&cfg).is_err());
    cfg.transport.entropic = Some(0.05);
    assert!(harness::run_convergence(&cfg).is_ok());
}

#[test]
fn algebraic_chaos_bound_holds_at_every_size() {
    let report = harness::run_chaos(&tiny()).unwrap();
    for n in [8, 16, 32] {
        assert!(report.check(&format!("algebraic_n{n}")).unwrap().passed);
    }
}

#[test]
fn bound_suite_reports_every_inequality() {
    let report = harness::run_bound_suite(&tiny()).unwrap();
    for name in ["limsol_p1", "limsol_p2"] {
        let c = report.check(name).unwrap();
        assert!(c.passed, "{c:?}");
    }
    assert!(report.checks.len() >= 6);
    assert!(report.passed(), "{:?}", report.failed());
}

#[test]
fn meanfield_path_starts_at_the_sampled_cloud() {
    let cfg = tiny();
    let (path, state) = harness::run_meanfield(&cfg).unwrap();
    assert_eq!(path.len(), 9);
    assert_eq!(path.at(0).points(), &cfg.sample_initial(32, cfg.seeds.initial(0)).unwrap());
    assert!(state.successive_gap < cfg.picard.tol);
    assert!(!state.log.is_empty());
}

#[test]
fn reports_are_reproducible() {
    let cfg = tiny();
    let a = harness::run_dichotomy(&cfg).unwrap();
    let b = harness::run_dichotomy(&cfg.clone().with_exec(commonnoise::Exec::Sequential)).unwrap();
    assert_eq!(a.per_n, b.per_n);
}
