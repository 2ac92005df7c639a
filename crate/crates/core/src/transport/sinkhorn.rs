//! Log-domain Sinkhorn iterations for entropic transport.

use super::{Cost, EmpiricalMeasure};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub(crate) struct SinkhornOutput {
    /// `Σ π_ij c_ij` of the entropic plan (no entropy term).
    pub cost: f64,
    pub iterations: usize,
    /// `Σ_i |Σ_j π_ij − a_i|` at exit.
    pub marginal_error: f64,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn solve(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    cost: Cost,
    eps: f64,
    max_iter: usize,
    tol: f64,
    exec: Exec,
) -> Result<SinkhornOutput> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("entropic epsilon {eps} must be positive")));
    }
    let (n, m) = (mu.len(), nu.len());
    let (pa, pb) = (mu.points(), nu.points());
    let log_a: Vec<f64> = mu.weights().iter().map(|w| w.ln()).collect();
    let log_b: Vec<f64> = nu.weights().iter().map(|w| w.ln()).collect();
    let c = |i: usize, j: usize| cost.eval(pa.row(i), pb.row(j));
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut iterations = 0;
    let mut marginal_error = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        f = exec.map(n, |i| -eps * log_sum_exp((0..m).map(|j| (g[j] - c(i, j)) / eps + log_b[j])));
        g = exec.map(m, |j| -eps * log_sum_exp((0..n).map(|i| (f[i] - c(i, j)) / eps + log_a[i])));
        // columns are exact after the g-update; measure the row marginals
        let rows = exec.map(n, |i| {
            log_sum_exp((0..m).map(|j| (f[i] + g[j] - c(i, j)) / eps + log_a[i] + log_b[j])).exp()
        });
        marginal_error = rows.iter().zip(&log_a).map(|(r, la)| (r - la.exp()).abs()).sum();
        if marginal_error < tol {
            break;
        }
    }
    let parts = exec.map(n, |i| {
        (0..m)
            .map(|j| {
                let cij = c(i, j);
                ((f[i] + g[j] - cij) / eps + log_a[i] + log_b[j]).exp() * cij
            })
            .sum::<f64>()
    });
    Ok(SinkhornOutput {
        cost: parts.iter().sum(),
        iterations,
        marginal_error,
    })
}
