//! Reproducible Brownian increments.
//!
//! Increment `(index, step)` is the sum of `refinement` fine-grid normals,
//! each addressed by `(seed, fine_step, index)`, scaled by `sqrt(dt / refinement)`.
//! A path and its [`coarsened`](BrownianPath::coarsened) versions therefore
//! share one underlying Brownian motion.

use crate::error::{Error, Result};
use crate::rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathLayout {
    /// One scalar Brownian motion per noise mode, shared by all particles.
    PerMode { modes: usize },
    /// One `dim`-dimensional Brownian motion per particle, index `i * dim + c`.
    PerParticle { particles: usize, dim: usize },
}

impl PathLayout {
    pub fn width(&self) -> usize {
        match *self {
            PathLayout::PerMode { modes } => modes,
            PathLayout::PerParticle { particles, dim } => particles * dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    seed: u64,
    dt: f64,
    num_steps: usize,
    layout: PathLayout,
    refinement: usize,
}

impl BrownianPath {
    pub fn new(seed: u64, dt: f64, num_steps: usize, layout: PathLayout) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt = {dt} must be positive")));
        }
        Ok(BrownianPath {
            seed,
            dt,
            num_steps,
            layout,
            refinement: 1,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn layout(&self) -> PathLayout {
        self.layout
    }

    pub fn width(&self) -> usize {
        self.layout.width()
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    /// Same Brownian motion sampled on a grid `factor` times coarser.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.num_steps.is_multiple_of(factor) {
            return Err(Error::invalid(format!(
                "cannot coarsen {} steps by a factor {factor}",
                self.num_steps
            )));
        }
        Ok(BrownianPath {
            seed: self.seed,
            dt: self.dt * factor as f64,
            num_steps: self.num_steps / factor,
            layout: self.layout,
            refinement: self.refinement * factor,
        })
    }

    /// Same path, more steps. Earlier increments are unchanged.
    pub fn extended(&self, num_steps: usize) -> Self {
        BrownianPath {
            num_steps,
            ..self.clone()
        }
    }

    /// Pure function of `(seed, index, step)`.
    pub fn increment(&self, index: usize, step: usize) -> f64 {
        let scale = (self.dt / self.refinement as f64).sqrt();
        let base = (step * self.refinement) as u64;
        let mut acc = 0.0;
        for r in 0..self.refinement as u64 {
            acc += rng::normal_at(self.seed, base + r, index as u64);
        }
        acc * scale
    }

    /// All increments of one step, `out.len() == width()`.
    pub fn fill_step(&self, step: usize, out: &mut [f64]) {
        assert_eq!(out.len(), self.width());
        let scale = (self.dt / self.refinement as f64).sqrt();
        let base = (step * self.refinement) as u64;
        if self.refinement == 1 {
            rng::fill_normals(self.seed, base, 0, out);
        } else {
            let mut buf = vec![0.0; out.len()];
            out.iter_mut().for_each(|o| *o = 0.0);
            for r in 0..self.refinement as u64 {
                rng::fill_normals(self.seed, base + r, 0, &mut buf);
                out.iter_mut().zip(&buf).for_each(|(o, b)| *o += b);
            }
        }
        out.iter_mut().for_each(|o| *o *= scale);
    }

    /// Step-major table of all increments.
    pub fn table(&self) -> Vec<f64> {
        let w = self.width();
        let mut out = vec![0.0; w * self.num_steps];
        for s in 0..self.num_steps {
            self.fill_step(s, &mut out[s * w..(s + 1) * w]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_are_addressable() {
        let p = BrownianPath::new(4, 0.01, 10, PathLayout::PerMode { modes: 6 }).unwrap();
        let mut row = vec![0.0; 6];
        p.fill_step(7, &mut row);
        for (k, v) in row.iter().enumerate() {
            assert_eq!(*v, p.increment(k, 7));
        }
        let longer = p.extended(50);
        assert_eq!(longer.increment(3, 2), p.increment(3, 2));
    }

    #[test]
    fn coarsening_sums_fine_increments() {
        let fine = BrownianPath::new(9, 1.0 / 256.0, 256, PathLayout::PerMode { modes: 3 }).unwrap();
        let coarse = fine.coarsened(4).unwrap();
        assert_eq!(coarse.num_steps(), 64);
        for s in [0, 5, 63] {
            for k in 0..3 {
                let sum: f64 = (0..4).map(|r| fine.increment(k, 4 * s + r)).sum();
                assert!((coarse.increment(k, s) - sum).abs() < 1e-14);
            }
        }
        let mut row = vec![0.0; 3];
        coarse.fill_step(11, &mut row);
        for k in 0..3 {
            assert!((row[k] - coarse.increment(k, 11)).abs() < 1e-15);
        }
        assert!(fine.coarsened(3).is_err());
    }

    #[test]
    fn increment_moments() {
        let dt = 0.02;
        let p = BrownianPath::new(1, dt, 200, PathLayout::PerParticle { particles: 50, dim: 2 }).unwrap();
        let t = p.table();
        let n = t.len() as f64;
        let mean = t.iter().sum::<f64>() / n;
        let var = t.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 5.0 * dt.sqrt() / n.sqrt());
        assert!((var / dt - 1.0).abs() < 0.1);
    }
}
