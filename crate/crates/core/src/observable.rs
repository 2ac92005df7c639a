//! Bounded smooth test functions `φ` with analytic gradient and Laplacian.

use crate::cloud::{dist_sq, PointCloud};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Observable {
    /// `exp(-1 / (1 - |x-c|²/ρ²))` inside the ball, 0 outside.
    Bump { center: Vec<f64>, radius: f64 },
    /// `exp(-|x-c|² / 2w²)`.
    Gaussian { center: Vec<f64>, width: f64 },
    /// `tanh(x_axis)`.
    Tanh { axis: usize },
    /// `cos(k · x)`.
    Cosine { wavevector: Vec<f64> },
    Constant { value: f64 },
}

impl Observable {
    pub fn tanh(axis: usize) -> Self {
        Observable::Tanh { axis }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = match self {
            Observable::Bump { center, radius } => center.len() != dim || !(*radius > 0.0),
            Observable::Gaussian { center, width } => center.len() != dim || !(*width > 0.0),
            Observable::Tanh { axis } => *axis >= dim,
            Observable::Cosine { wavevector } => wavevector.len() != dim,
            Observable::Constant { value } => !value.is_finite(),
        };
        if bad {
            Err(Error::invalid(format!("observable {self:?} is malformed for d = {dim}")))
        } else {
            Ok(())
        }
    }

    /// `sup |φ|`.
    pub fn bound(&self) -> f64 {
        match self {
            Observable::Bump { .. } => (-1.0f64).exp(),
            Observable::Constant { value } => value.abs(),
            _ => 1.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Observable::Bump { center, radius } => {
                let s = dist_sq(x, center) / (radius * radius);
                if s >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - s)).exp()
                }
            }
            Observable::Gaussian { center, width } => (-dist_sq(x, center) / (2.0 * width * width)).exp(),
            Observable::Tanh { axis } => x[*axis].tanh(),
            Observable::Cosine { wavevector } => crate::cloud::dot(wavevector, x).cos(),
            Observable::Constant { value } => *value,
        }
    }

    /// Writes `∇φ(x)` into `grad` and returns `Δφ(x)`.
    pub fn gradient_laplacian(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = x.len() as f64;
        match self {
            Observable::Bump { center, radius } => {
                let r2 = radius * radius;
                let s = dist_sq(x, center) / r2;
                if s >= 1.0 {
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    return 0.0;
                }
                let u = 1.0 / (1.0 - s);
                let g = (-u).exp();
                let g1 = -g * u * u;
                let g2 = g * (u.powi(4) - 2.0 * u.powi(3));
                for ((gr, xi), ci) in grad.iter_mut().zip(x).zip(center) {
                    *gr = g1 * 2.0 * (xi - ci) / r2;
                }
                g2 * 4.0 * s / r2 + g1 * 2.0 * d / r2
            }
            Observable::Gaussian { center, width } => {
                let w2 = width * width;
                let r2 = dist_sq(x, center);
                let f = (-r2 / (2.0 * w2)).exp();
                for ((gr, xi), ci) in grad.iter_mut().zip(x).zip(center) {
                    *gr = -f * (xi - ci) / w2;
                }
                f * (r2 / (w2 * w2) - d / w2)
            }
            Observable::Tanh { axis } => {
                let t = x[*axis].tanh();
                grad.iter_mut().for_each(|g| *g = 0.0);
                grad[*axis] = 1.0 - t * t;
                -2.0 * t * (1.0 - t * t)
            }
            Observable::Cosine { wavevector } => {
                let ph = crate::cloud::dot(wavevector, x);
                let (s, c) = ph.sin_cos();
                for (gr, k) in grad.iter_mut().zip(wavevector) {
                    *gr = -s * k;
                }
                -crate::cloud::dot(wavevector, wavevector) * c
            }
            Observable::Constant { .. } => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                0.0
            }
        }
    }

    /// `⟨S, φ⟩` for the uniform empirical measure on `cloud`.
    pub fn mean_over(&self, cloud: &PointCloud) -> f64 {
        cloud.rows().map(|r| self.value(r)).sum::<f64>() / cloud.len() as f64
    }
}
