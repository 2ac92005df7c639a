//! Replica statistics: means with standard errors, Student-t bounds,
//! variance intervals and weighted log-log fits.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

/// Mean, sample standard deviation and standard error of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Result<Summary> {
        if xs.is_empty() {
            return Err(Error::invalid("summary of an empty sample"));
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Ok(Summary {
            n,
            mean,
            std: var.sqrt(),
            stderr: (var / n as f64).sqrt(),
        })
    }

    pub fn variance(&self) -> f64 {
        self.std * self.std
    }

    /// One-sided upper confidence bound `mean + t_{level, n-1} · stderr`.
    pub fn upper(&self, level: f64) -> f64 {
        self.mean + t_quantile(level, self.n) * self.stderr
    }

    pub fn lower(&self, level: f64) -> f64 {
        self.mean - t_quantile(level, self.n) * self.stderr
    }

    /// Two-sided confidence interval for the variance from the chi-square law.
    pub fn variance_interval(&self, level: f64) -> (f64, f64) {
        if self.n < 2 {
            return (0.0, f64::INFINITY);
        }
        let dof = (self.n - 1) as f64;
        let chi2 = ChiSquared::new(dof).expect("positive dof");
        let a = (1.0 - level) / 2.0;
        let s = dof * self.variance();
        (s / chi2.inverse_cdf(1.0 - a), s / chi2.inverse_cdf(a))
    }
}

/// `t` quantile with `n - 1` degrees of freedom (normal for `n` large, and
/// infinite for `n < 2` so bounds stay honest).
pub fn t_quantile(level: f64, n: usize) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive dof")
        .inverse_cdf(level)
}

pub fn normal_quantile(level: f64) -> f64 {
    Normal::standard().inverse_cdf(level)
}

/// One-sided lower confidence bound on `var_a / var_b` from the F law.
pub fn variance_ratio_lower(a: &Summary, b: &Summary, level: f64) -> f64 {
    let ratio = a.variance() / b.variance();
    if a.n < 2 || b.n < 2 {
        return 0.0;
    }
    let f = FisherSnedecor::new((a.n - 1) as f64, (b.n - 1) as f64).expect("positive dof");
    ratio / f.inverse_cdf(level)
}

/// One-sided lower confidence bound on `mean_a / mean_b` for positive means,
/// from the delta method on the log ratio.
pub fn mean_ratio_lower(a: &Summary, b: &Summary, level: f64) -> f64 {
    if !(a.mean > 0.0 && b.mean > 0.0) {
        return 0.0;
    }
    let se = ((a.stderr / a.mean).powi(2) + (b.stderr / b.mean).powi(2)).sqrt();
    a.mean / b.mean * (-normal_quantile(level) * se).exp()
}

/// Weighted least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Two-sided confidence interval of the slope.
    pub slope_lower: f64,
    pub slope_upper: f64,
    pub level: f64,
    /// `χ² / (n − 2)`; the standard error is inflated by its square root
    /// when it exceeds one.
    pub reduced_chi2: f64,
}

/// Fit with weights `1 / sigma²`. Needs at least three points.
pub fn weighted_line_fit(x: &[f64], y: &[f64], sigma: &[f64], level: f64) -> Result<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n || sigma.len() != n {
        return Err(Error::invalid("weighted fit needs at least three matched points"));
    }
    if sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::invalid("weighted fit needs positive finite uncertainties"));
    }
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w[i] * (x[i] - xm).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - xm) * (y[i] - ym)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("weighted fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let chi2: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let reduced = chi2 / (n - 2) as f64;
    let se = (1.0 / sxx).sqrt() * reduced.max(1.0).sqrt();
    let q = StudentsT::new(0.0, 1.0, (n - 2) as f64)
        .expect("positive dof")
        .inverse_cdf(0.5 + level / 2.0);
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: se,
        slope_lower: slope - q * se,
        slope_upper: slope + q * se,
        level,
        reduced_chi2: reduced,
    })
}

/// Standard error of `ln(mean)` from the replica standard error.
pub fn log_stderr(s: &Summary) -> f64 {
    s.stderr / s.mean
}
