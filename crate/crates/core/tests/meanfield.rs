use commonnoise::harness::ExperimentConfig;
use commonnoise::meanfield::{flow_constants, frozen_drift_flow, limit_sde_solve, picard_fixed_point, PicardOptions};
use commonnoise::transport::{path_distance, TransportOptions};
use commonnoise::{simulate, InteractionKernel, NoiseModel, PointCloud, SimConfig};
use proptest::prelude::*;

fn desk_noise() -> NoiseModel {
    ExperimentConfig::default().noise.build().unwrap()
}

fn initial(n: usize, seed: u64) -> PointCloud {
    ExperimentConfig::default().sample_initial(n, seed).unwrap()
}

fn tight() -> PicardOptions {
    PicardOptions {
        tol: 1e-12,
        ..PicardOptions::default()
    }
}

#[test]
fn fixed_point_is_the_self_consistent_system() {
    let noise = desk_noise();
    let cfg = SimConfig::new(64, 2, 0.5, 1.0 / 64.0);
    let x0 = initial(64, 4);
    let path = cfg.brownian_path(&noise, 9).unwrap();
    let direct = simulate(&cfg, &noise, &x0, &path).unwrap().measure_path().unwrap();
    let (fixed, state) = picard_fixed_point(&x0, &cfg, &noise, &path, &tight()).unwrap();
    assert!(state.gamma_t_star <= 0.5);
    assert!(path_distance(&fixed, &direct, &TransportOptions::default()).unwrap() < 1e-10);
}

#[test]
fn direct_run_is_invariant_under_its_own_frozen_flow() {
    let noise = desk_noise();
    let cfg = SimConfig::new(32, 2, 0.5, 1.0 / 64.0).with_kernel(InteractionKernel::Gaussian { amplitude: -1.0, length: 0.8 });
    let x0 = initial(32, 6);
    let path = cfg.brownian_path(&noise, 2).unwrap();
    let direct = simulate(&cfg, &noise, &x0, &path).unwrap();
    let mu = direct.measure_path().unwrap();
    let pushed = frozen_drift_flow(&mu, &cfg, &noise, &path, &x0).unwrap();
    for (a, b) in pushed.snapshots.iter().zip(&direct.snapshots) {
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((u - v).abs() < 1e-12);
        }
    }
    // A tagged particle solved alone sees the same drift.
    let one = limit_sde_solve(&mu, &cfg, &noise, &path, x0.row(3)).unwrap();
    assert!(commonnoise::cloud::dist(one.last().row(0), direct.last().row(3)) < 1e-12);
}

#[test]
fn without_interaction_the_first_iterate_is_final() {
    let noise = desk_noise();
    let cfg = SimConfig::new(16, 2, 0.5, 1.0 / 32.0).with_kernel(InteractionKernel::Zero);
    let x0 = initial(16, 1);
    let path = cfg.brownian_path(&noise, 4).unwrap();
    let (_, state) = picard_fixed_point(&x0, &cfg, &noise, &path, &tight()).unwrap();
    assert_eq!(state.gamma_t_star, 0.0);
    assert_eq!(state.subintervals, 1);
    assert_eq!(state.successive_gap, 0.0);
}

#[test]
fn subinterval_is_the_longest_dyadic_piece_with_small_gamma() {
    let noise = desk_noise();
    let cfg = SimConfig::new(16, 2, 1.0, 1.0 / 256.0);
    let opts = PicardOptions::default();
    let x0 = initial(16, 2);
    let path = cfg.brownian_path(&noise, 3).unwrap();
    let (_, state) = picard_fixed_point(&x0, &cfg, &noise, &path, &opts).unwrap();
    let k = flow_constants(&cfg, &noise, opts.c1).unwrap();
    assert!(k.gamma_at(state.t_star) <= opts.gamma_target);
    assert!(state.t_star == 1.0 || k.gamma_at(2.0 * state.t_star) > opts.gamma_target);
    assert_eq!(state.subintervals as f64 * state.t_star, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn successive_gaps_contract_by_gamma(seed in 0u64..1000, amplitude in -2.0f64..-0.2) {
        let noise = desk_noise();
        let cfg = SimConfig::new(24, 2, 0.5, 1.0 / 64.0).with_kernel(InteractionKernel::Gaussian { amplitude, length: 0.7 });
        let x0 = initial(24, seed);
        let path = cfg.brownian_path(&noise, seed + 1).unwrap();
        let (_, state) = picard_fixed_point(&x0, &cfg, &noise, &path, &tight()).unwrap();
        prop_assert!(state.successive_gap < 1e-12);
        for s in 0..state.subintervals {
            for w in state.gaps(s).windows(2) {
                if w[0] > 1e-12 {
                    prop_assert!(w[1] <= state.gamma_t_star * w[0] * (1.0 + 1e-9), "{} > {} * {}", w[1], state.gamma_t_star, w[0]);
                }
            }
        }
    }
}
