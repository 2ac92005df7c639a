use crate::cloud::{norm, PointCloud};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Weights {
    Uniform,
    Explicit(Vec<f64>),
}

/// Weighted atomic probability measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    points: PointCloud,
    weights: Weights,
}

impl EmpiricalMeasure {
    /// Uniform weights `1/n`.
    pub fn uniform(points: PointCloud) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("an empirical measure needs at least one point"));
        }
        if let Some(i) = points.first_non_finite_row() {
            return Err(Error::NonFinite { particle: i });
        }
        Ok(EmpiricalMeasure {
            points,
            weights: Weights::Uniform,
        })
    }

    /// Explicit positive weights summing to one (within `1e-12`).
    pub fn weighted(points: PointCloud, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        let mut m = EmpiricalMeasure::uniform(points)?;
        m.weights = Weights::Explicit(weights);
        Ok(m)
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn into_points(self) -> PointCloud {
        self.points
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.weights, Weights::Uniform)
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Weights::Uniform => 1.0 / self.len() as f64,
            Weights::Explicit(w) => w[i],
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    pub fn explicit_weights(&self) -> Option<&[f64]> {
        match &self.weights {
            Weights::Uniform => None,
            Weights::Explicit(w) => Some(w),
        }
    }

    pub fn first_moment(&self) -> f64 {
        self.points.rows().enumerate().map(|(i, r)| self.weight(i) * norm(r)).sum()
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        EmpiricalMeasure {
            points: self.points.translated(shift),
            weights: self.weights.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        EmpiricalMeasure {
            points: self.points.scaled(factor),
            weights: self.weights.clone(),
        }
    }
}

/// One measure per time of an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurePath {
    times: Vec<f64>,
    measures: Vec<EmpiricalMeasure>,
}

impl MeasurePath {
    pub fn new(times: Vec<f64>, measures: Vec<EmpiricalMeasure>) -> Result<Self> {
        if times.len() != measures.len() || times.is_empty() {
            return Err(Error::invalid("a measure path needs one measure per time and at least one time"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("measure path times must be strictly increasing"));
        }
        let d = measures[0].dim();
        if let Some(m) = measures.iter().find(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.dim(),
            });
        }
        Ok(MeasurePath { times, measures })
    }

    /// Uniform measures on the given clouds.
    pub fn from_clouds(times: Vec<f64>, clouds: Vec<PointCloud>) -> Result<Self> {
        let measures = clouds
            .into_iter()
            .map(EmpiricalMeasure::uniform)
            .collect::<Result<Vec<_>>>()?;
        MeasurePath::new(times, measures)
    }

    /// The same measure at every time of the grid.
    pub fn constant(times: Vec<f64>, measure: EmpiricalMeasure) -> Result<Self> {
        let measures = vec![measure; times.len()];
        MeasurePath::new(times, measures)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn measures(&self) -> &[EmpiricalMeasure] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn at(&self, i: usize) -> &EmpiricalMeasure {
        &self.measures[i]
    }

    pub fn last(&self) -> &EmpiricalMeasure {
        self.measures.last().expect("non-empty path")
    }

    pub fn same_grid(&self, other: &MeasurePath) -> bool {
        self.times.len() == other.times.len()
            && self.times.iter().zip(&other.times).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }
}
