//! Interaction kernels `K` and the mean-field drift `b_μ(x) = ∫ K(x − y) μ(dy)`.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::transport::EmpiricalMeasure;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InteractionKernel {
    Zero,
    /// `K(x) = -x`.
    #[default]
    Linear,
    /// `K_δ(x) = x^⊥ / (|x|² + δ²)`, `d = 2` only.
    SmoothedBiotSavart { delta: f64 },
    /// `K(x) = A x exp(-|x|² / 2ℓ²)`.
    Gaussian { amplitude: f64, length: f64 },
}

impl InteractionKernel {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            InteractionKernel::SmoothedBiotSavart { delta } => {
                if dim != 2 {
                    return Err(Error::invalid("smoothed Biot-Savart kernel is defined for d = 2 only"));
                }
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(Error::invalid("Biot-Savart smoothing delta must be positive (delta = 0 is singular)"));
                }
            }
            InteractionKernel::Gaussian { amplitude, length } if !amplitude.is_finite() || !(length > 0.0 && length.is_finite()) => {
                return Err(Error::invalid("gaussian kernel needs finite amplitude and positive length"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Global Lipschitz constant `L_K`.
    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            InteractionKernel::Zero => 0.0,
            InteractionKernel::Linear => 1.0,
            // sup of the operator norm of DK_δ is attained at the origin.
            InteractionKernel::SmoothedBiotSavart { delta } => 1.0 / (delta * delta),
            // DK = A e^{-s/2}(I - x xᵀ/ℓ²), s = |x|²/ℓ²: eigenvalues A e^{-s/2} and A e^{-s/2}(1 - s).
            InteractionKernel::Gaussian { amplitude, .. } => amplitude.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, InteractionKernel::Zero)
    }

    /// `out = K(z)`.
    #[inline]
    pub fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        match *self {
            InteractionKernel::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            InteractionKernel::Linear => out.iter_mut().zip(z).for_each(|(o, v)| *o = -v),
            InteractionKernel::SmoothedBiotSavart { delta } => {
                let r2 = z[0] * z[0] + z[1] * z[1] + delta * delta;
                out[0] = -z[1] / r2;
                out[1] = z[0] / r2;
            }
            InteractionKernel::Gaussian { amplitude, length } => {
                let r2: f64 = z.iter().map(|v| v * v).sum();
                let f = amplitude * (-r2 / (2.0 * length * length)).exp();
                out.iter_mut().zip(z).for_each(|(o, v)| *o = f * v);
            }
        }
    }

    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        self.eval_into(z, &mut out);
        out
    }
}

/// A frozen measure ready for drift evaluation.
///
/// The linear kernel only needs the (weighted) mean: `b_μ(x) = mean(μ) − x`.
/// Sums run over the atoms in lexicographic order, so relabelling the
/// particles leaves every drift bit-identical.
#[derive(Debug, Clone)]
pub struct DriftField<'a> {
    kernel: InteractionKernel,
    points: &'a PointCloud,
    weights: Option<&'a [f64]>,
    order: Vec<usize>,
    mean: Vec<f64>,
}

/// Atom indices sorted by position, then weight. Tied atoms contribute
/// identical terms, so their relative order is immaterial.
fn canonical_order(points: &PointCloud, weights: Option<&[f64]>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        let rows = points.row(a).iter().zip(points.row(b)).map(|(u, v)| u.total_cmp(v));
        rows.fold(std::cmp::Ordering::Equal, |acc, c| acc.then(c))
            .then_with(|| weights.map_or(std::cmp::Ordering::Equal, |w| w[a].total_cmp(&w[b])))
    });
    order
}

impl<'a> DriftField<'a> {
    pub fn new(kernel: InteractionKernel, points: &'a PointCloud, weights: Option<&'a [f64]>) -> Self {
        let dim = points.dim();
        let order = if kernel.is_zero() { Vec::new() } else { canonical_order(points, weights) };
        let mut mean = vec![0.0; dim];
        if matches!(kernel, InteractionKernel::Linear) {
            match weights {
                None => {
                    for &j in &order {
                        mean.iter_mut().zip(points.row(j)).for_each(|(m, v)| *m += v);
                    }
                    let n = points.len() as f64;
                    mean.iter_mut().for_each(|m| *m /= n);
                }
                Some(w) => {
                    for &j in &order {
                        mean.iter_mut().zip(points.row(j)).for_each(|(m, v)| *m += w[j] * v);
                    }
                }
            }
        }
        DriftField {
            kernel,
            points,
            weights,
            order,
            mean,
        }
    }

    pub fn from_measure(kernel: InteractionKernel, measure: &'a EmpiricalMeasure) -> Self {
        DriftField::new(kernel, measure.points(), measure.explicit_weights())
    }

    /// `out = b_μ(x)`.
    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self.kernel {
            InteractionKernel::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            InteractionKernel::Linear => out
                .iter_mut()
                .zip(self.mean.iter().zip(x))
                .for_each(|(o, (m, v))| *o = m - v),
            _ => {
                let d = x.len();
                let mut z = [0.0f64; 8];
                let mut k = [0.0f64; 8];
                let mut zv;
                let mut kv;
                let (z, k): (&mut [f64], &mut [f64]) = if d <= 8 {
                    (&mut z[..d], &mut k[..d])
                } else {
                    zv = vec![0.0; d];
                    kv = vec![0.0; d];
                    (&mut zv[..], &mut kv[..])
                };
                out.iter_mut().for_each(|o| *o = 0.0);
                for &j in &self.order {
                    let row = self.points.row(j);
                    z.iter_mut().zip(x.iter().zip(row)).for_each(|(zi, (a, b))| *zi = a - b);
                    self.kernel.eval_into(z, k);
                    let w = self.weights.map_or(1.0, |w| w[j]);
                    out.iter_mut().zip(k.iter()).for_each(|(o, ki)| *o += w * ki);
                }
                if self.weights.is_none() {
                    let n = self.points.len() as f64;
                    out.iter_mut().for_each(|o| *o /= n);
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval_into(x, &mut out);
        out
    }
}

/// Row `i` is `(1/N) Σ_j K(X_i − X_j)`, self-term included.
pub fn pairwise_drift(positions: &PointCloud, kernel: InteractionKernel, exec: Exec) -> Result<PointCloud> {
    if let Some(i) = positions.first_non_finite_row() {
        return Err(Error::NonFinite { particle: i });
    }
    let field = DriftField::new(kernel, positions, None);
    let d = positions.dim();
    let mut out = PointCloud::zeros(positions.len(), d);
    exec.fill_chunks(out.as_mut_slice(), d, |i, row| field.eval_into(positions.row(i), row));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn kernels() -> Vec<InteractionKernel> {
        vec![
            InteractionKernel::Linear,
            InteractionKernel::SmoothedBiotSavart { delta: 0.5 },
            InteractionKernel::Gaussian { amplitude: -1.5, length: 0.7 },
        ]
    }

    #[test]
    fn two_particle_linear() {
        let x = PointCloud::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let b = pairwise_drift(&x, InteractionKernel::Linear, Exec::Sequential).unwrap();
        assert_eq!(b.row(0), &[-1.0, 0.0]);
        assert_eq!(b.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn brute_force_agreement_and_momentum() {
        let mut r = rng::sequential(3);
        let n = 40;
        let data: Vec<f64> = (0..2 * n).map(|_| r.random_range(-2.0..2.0)).collect();
        let x = PointCloud::new(2, data).unwrap();
        for k in kernels() {
            let b = pairwise_drift(&x, k, Exec::default()).unwrap();
            let mut total = [0.0; 2];
            for i in 0..n {
                let mut acc = [0.0; 2];
                for j in 0..n {
                    let z = [x.row(i)[0] - x.row(j)[0], x.row(i)[1] - x.row(j)[1]];
                    let kz = k.eval(&z);
                    acc[0] += kz[0];
                    acc[1] += kz[1];
                }
                for c in 0..2 {
                    assert!((b.row(i)[c] - acc[c] / n as f64).abs() < 1e-12);
                    total[c] += b.row(i)[c];
                }
            }
            assert!(total[0].abs() < 1e-12 && total[1].abs() < 1e-12, "{k:?} {total:?}");
        }
        let zero = pairwise_drift(&x, InteractionKernel::Zero, Exec::Sequential).unwrap();
        assert!(zero.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lipschitz_constants_bound_samples() {
        let mut r = rng::sequential(8);
        for k in kernels() {
            let lk = k.lipschitz_constant();
            for _ in 0..10_000 {
                let x = [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
                let y = [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
                let (kx, ky) = (k.eval(&x), k.eval(&y));
                let num = ((kx[0] - ky[0]).powi(2) + (kx[1] - ky[1]).powi(2)).sqrt();
                let den = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                assert!(num <= lk * den * (1.0 + 1e-12), "{k:?}");
            }
        }
    }

    #[test]
    fn kernels_are_odd() {
        for k in kernels() {
            let x = [0.3, -1.2];
            let (a, b) = (k.eval(&x), k.eval(&[-0.3, 1.2]));
            assert_eq!(a[0], -b[0]);
            assert_eq!(a[1], -b[1]);
        }
    }

    #[test]
    fn biot_savart_rejects_other_dims() {
        assert!(InteractionKernel::SmoothedBiotSavart { delta: 0.1 }.validate(3).is_err());
        assert!(InteractionKernel::SmoothedBiotSavart { delta: 0.0 }.validate(2).is_err());
    }
}
