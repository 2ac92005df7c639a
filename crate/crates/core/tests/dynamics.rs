use commonnoise::harness::ExperimentConfig;
use commonnoise::{simulate, InteractionKernel, NoiseMode, NoiseModel, PointCloud, SimConfig};
use proptest::prelude::*;

fn desk_noise() -> NoiseModel {
    ExperimentConfig::default().noise.build().unwrap()
}

fn initial(n: usize, seed: u64) -> PointCloud {
    ExperimentConfig::default().sample_initial(n, seed).unwrap()
}

#[test]
fn coincident_particles_stay_together_under_common_noise() {
    let noise = desk_noise();
    let cfg = SimConfig::new(8, 2, 1.0, 1.0 / 256.0).with_kernel(InteractionKernel::Zero);
    let mut x0 = initial(8, 3);
    let first = x0.row(0).to_vec();
    x0.row_mut(5).copy_from_slice(&first);
    let path = cfg.brownian_path(&noise, 11).unwrap();
    let traj = simulate(&cfg, &noise, &x0, &path).unwrap();
    for snap in &traj.snapshots {
        assert!(commonnoise::cloud::dist(snap.row(0), snap.row(5)) < 1e-12);
    }
    // The others really moved.
    assert!(commonnoise::cloud::dist(traj.last().row(1), x0.row(1)) > 1e-3);
}

#[test]
fn independent_noise_separates_coincident_particles() {
    let noise = desk_noise();
    let cfg = SimConfig::new(2, 2, 1.0, 1.0 / 64.0).with_mode(NoiseMode::Independent);
    let x0 = PointCloud::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
    let path = cfg.brownian_path(&noise, 2).unwrap();
    let traj = simulate(&cfg, &noise, &x0, &path).unwrap();
    assert!(commonnoise::cloud::dist(traj.last().row(0), traj.last().row(1)) > 1e-2);
}

#[test]
fn linear_kernel_preserves_the_centre_of_mass_without_noise() {
    let noise = desk_noise();
    let cfg = SimConfig::new(16, 2, 1.0, 1.0 / 128.0).with_mode(NoiseMode::None);
    let x0 = initial(16, 8);
    let path = cfg.brownian_path(&noise, 0).unwrap();
    let traj = simulate(&cfg, &noise, &x0, &path).unwrap();
    let (m0, m1) = (x0.mean(), traj.last().mean());
    assert!((m0[0] - m1[0]).abs() < 1e-12 && (m0[1] - m1[1]).abs() < 1e-12);
    // Linear attraction contracts every deviation by exp(-T) up to O(dt).
    let r0 = commonnoise::cloud::dist(x0.row(0), &m0);
    let r1 = commonnoise::cloud::dist(traj.last().row(0), &m1);
    let want = r0 * (1.0 - 1.0 / 128.0f64).powi(128);
    assert!((r1 - want).abs() < 1e-10, "{r1} vs {want}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relabelling_particles_relabels_trajectories(n in 2usize..24, seed in 0u64..5000, rot in 1usize..23, which in 0usize..3) {
        let noise = desk_noise();
        let kernel = [
            InteractionKernel::Linear,
            InteractionKernel::SmoothedBiotSavart { delta: 0.5 },
            InteractionKernel::Gaussian { amplitude: -1.0, length: 0.8 },
        ][which];
        let cfg = SimConfig::new(n, 2, 0.25, 1.0 / 64.0).with_kernel(kernel);
        let x0 = initial(n, seed);
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let path = cfg.brownian_path(&noise, seed + 1).unwrap();
        let a = simulate(&cfg, &noise, &x0, &path).unwrap();
        let b = simulate(&cfg, &noise, &x0.permuted(&perm), &path).unwrap();
        prop_assert_eq!(a.last().permuted(&perm), b.last().clone());
    }

    #[test]
    fn reruns_are_bit_identical(n in 1usize..16, seed in 0u64..5000) {
        let noise = desk_noise();
        let cfg = SimConfig::new(n, 2, 0.25, 1.0 / 32.0);
        let x0 = initial(n, seed);
        let run = || simulate(&cfg, &noise, &x0, &cfg.brownian_path(&noise, seed).unwrap()).unwrap();
        let (a, b) = (run(), run());
        prop_assert_eq!(a.snapshots, b.snapshots);
    }
}
