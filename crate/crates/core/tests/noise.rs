use commonnoise::noise::{NoiseSpec, Spectrum};
use commonnoise::NoiseModel;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn gaussian_noise(shells: usize, modes: usize, seed: u64) -> NoiseModel {
    NoiseSpec::isotropic(2, Spectrum::Gaussian { scale: 1.0 }, shells, modes, seed)
        .build()
        .unwrap()
}

/// Continuum covariance of the isotropic divergence-free Gaussian-spectrum
/// field in the plane, `Q(z) = 2 E[cos(r e·z) (I − e eᵀ)]` with `r`
/// Rayleigh(1) and `e` uniform on the circle, by product quadrature.
fn q_continuum(z: [f64; 2]) -> [[f64; 2]; 2] {
    let (nr, nt) = (4000, 512);
    let mut q = [[0.0; 2]; 2];
    for a in 0..nr {
        let u = (a as f64 + 0.5) / nr as f64;
        let r = (-2.0 * (1.0 - u).ln()).sqrt();
        for b in 0..nt {
            let th = std::f64::consts::TAU * (b as f64 + 0.5) / nt as f64;
            let e = [th.cos(), th.sin()];
            let c = (r * (e[0] * z[0] + e[1] * z[1])).cos();
            for i in 0..2 {
                for j in 0..2 {
                    let proj = if i == j { 1.0 } else { 0.0 } - e[i] * e[j];
                    q[i][j] += 2.0 * c * proj;
                }
            }
        }
    }
    let w = (nr * nt) as f64;
    q.map(|row| row.map(|v| v / w))
}

#[test]
fn covariance_matches_continuum_quadrature() {
    let noise = gaussian_noise(24, 64, 5);
    for z in [[0.5, 0.0], [0.3, -0.7], [1.5, 0.4]] {
        let oracle = q_continuum(z);
        let q = noise.evaluate_q(&z);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (q[2 * i + j] - oracle[i][j]).abs() < 0.02,
                    "z = {z:?}: Q[{i}{j}] = {} vs quadrature {}",
                    q[2 * i + j],
                    oracle[i][j]
                );
            }
        }
    }
    // A solenoidal field decorrelates slower along the separation than
    // across it.
    let oracle = q_continuum([0.5, 0.0]);
    assert!(oracle[0][0] > oracle[1][1]);
}

#[test]
fn joint_covariance_is_positive_semidefinite() {
    let noise = gaussian_noise(2, 8, 1);
    let pts: Vec<[f64; 2]> = (0..12).map(|i| [(i as f64 * 0.7).sin() * 2.0, (i as f64 * 1.3).cos()]).collect();
    let n = pts.len();
    let big = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (a, i) = (r / 2, r % 2);
        let (b, j) = (c / 2, c % 2);
        let z = [pts[a][0] - pts[b][0], pts[a][1] - pts[b][1]];
        noise.evaluate_q(&z)[2 * i + j]
    });
    let eig = SymmetricEigen::new(big);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min > -1e-10, "smallest eigenvalue {min}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_spectrum_lies_in_unit_interval(x in -5.0f64..5.0, y in -5.0f64..5.0, seed in 0u64..1000) {
        let noise = gaussian_noise(3, 8, seed);
        let q = noise.evaluate_q(&[x, y]);
        let m = DMatrix::from_row_slice(2, 2, &q);
        prop_assert!((m[(0, 1)] - m[(1, 0)]).abs() < 1e-14);
        for ev in SymmetricEigen::new(m).eigenvalues.iter() {
            prop_assert!(*ev >= -1.0 - 1e-12 && *ev <= 1.0 + 1e-12, "eigenvalue {}", ev);
        }
    }

    #[test]
    fn fields_are_divergence_free_and_homogeneous(
        x in -10.0f64..10.0, y in -10.0f64..10.0,
        dx in -3.0f64..3.0, dy in -3.0f64..3.0,
        seed in 0u64..1000,
    ) {
        let noise = gaussian_noise(2, 8, seed);
        for k in 0..noise.num_modes() {
            prop_assert!(noise.divergence(k, &[x, y]).abs() < 1e-12);
        }
        // Σ_k σ_k(p) σ_k(p + z)ᵀ depends on z only.
        let a = noise.covariance_from_sigma(&[x, y], &[x + dx, y + dy]);
        let q = noise.evaluate_q(&[-dx, -dy]);
        for (u, v) in a.iter().zip(&q) {
            prop_assert!((u - v).abs() < 1e-12);
        }
        prop_assert!(noise.stratonovich_correction(&[x, y]).iter().all(|c| c.abs() < 1e-12));
    }
}

#[test]
fn identity_at_origin_in_three_dimensions() {
    let noise = NoiseSpec::isotropic(3, Spectrum::TopHat { inner: 0.5, outer: 2.0 }, 3, 6, 9)
        .build()
        .unwrap();
    let q = noise.evaluate_q(&[0.0; 3]);
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((q[3 * i + j] - want).abs() < 1e-12);
        }
    }
    let check = noise.check(100, 4);
    assert!(check.divergence_fd_max < 1e-6);
}
