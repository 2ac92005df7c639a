//! Empirical measures and exact Wasserstein distances.
//!
//! `W₁`/`W₂` between atomic measures are solved exactly as transportation
//! problems with integer masses (uniform weights are scaled by the least
//! common multiple of the two sizes, so the optimal flow is exact). Sizes
//! above [`TransportOptions::exact_limit`] are refused unless an entropic
//! regularization is requested, in which case a log-domain Sinkhorn value is
//! returned and labelled as an approximation.

mod measure;
mod simplex;
mod sinkhorn;

pub use measure::{EmpiricalMeasure, MeasurePath};

use crate::cloud::{dist, dist_sq, PointCloud};
use crate::error::{Error, Result};
use crate::exec::Exec;
use serde::{Deserialize, Serialize};
use simplex::SimplexOptions;

pub const DEFAULT_EXACT_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cost {
    /// `|x − y|`, giving `W₁`.
    Euclidean,
    /// `|x − y|²`, giving `W₂²`.
    SquaredEuclidean,
}

impl Cost {
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Cost::Euclidean => dist(a, b),
            Cost::SquaredEuclidean => dist_sq(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportOptions {
    /// Largest point count per side accepted by the exact solver.
    pub exact_limit: usize,
    /// Entropic regularization `ε`; when set, oversized problems fall back to
    /// Sinkhorn instead of failing.
    pub entropic: Option<f64>,
    /// Force Sinkhorn even below the exact limit.
    pub force_entropic: bool,
    pub sinkhorn_max_iter: usize,
    pub sinkhorn_tol: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            exact_limit: DEFAULT_EXACT_LIMIT,
            entropic: None,
            force_entropic: false,
            sinkhorn_max_iter: 10_000,
            sinkhorn_tol: 1e-9,
            exec: Exec::default(),
        }
    }
}

impl TransportOptions {
    pub fn with_exact_limit(mut self, limit: usize) -> Self {
        self.exact_limit = limit;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Identical,
    SortedPairing,
    NetworkSimplex {
        pivots: usize,
        pricing_rounds: usize,
        arcs: usize,
    },
    Sinkhorn {
        epsilon: f64,
        iterations: usize,
        marginal_error: f64,
    },
}

/// Optimality certificate of an exact solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    /// `max(0, max_ij (α_i + β_j − c_ij))` over every pair.
    pub dual_infeasibility: f64,
    /// `|Σ c·π − (Σ a α + Σ b β)|` per unit mass.
    pub duality_gap: f64,
}

impl Certificate {
    pub fn residual(&self) -> f64 {
        self.dual_infeasibility.max(self.duality_gap)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportResult {
    /// `W₁`, or `W₂` (already square-rooted) for the squared cost.
    pub value: f64,
    /// Optimal cost `Σ c π` (equals `value` for `W₁`, `value²` for `W₂`).
    pub cost: f64,
    pub method: Method,
    pub certificate: Option<Certificate>,
    /// Coupling as `(i, j, mass)`; empty for Sinkhorn.
    #[serde(skip)]
    pub plan: Vec<(usize, usize, f64)>,
}

impl TransportResult {
    pub fn is_exact(&self) -> bool {
        !matches!(self.method, Method::Sinkhorn { .. })
    }
}

pub fn w1(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, opts: &TransportOptions) -> Result<TransportResult> {
    solve(mu, nu, Cost::Euclidean, opts)
}

pub fn w2(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, opts: &TransportOptions) -> Result<TransportResult> {
    solve(mu, nu, Cost::SquaredEuclidean, opts)
}

/// `W₁` between uniform measures on two clouds.
pub fn w1_clouds(a: &PointCloud, b: &PointCloud, opts: &TransportOptions) -> Result<f64> {
    let (mu, nu) = (EmpiricalMeasure::uniform(a.clone())?, EmpiricalMeasure::uniform(b.clone())?);
    Ok(w1(&mu, &nu, opts)?.value)
}

pub fn solve(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cost: Cost, opts: &TransportOptions) -> Result<TransportResult> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    let finish = |c: f64| match cost {
        Cost::Euclidean => c,
        Cost::SquaredEuclidean => c.max(0.0).sqrt(),
    };
    let (n, m) = (mu.len(), nu.len());
    let oversized = n > opts.exact_limit || m > opts.exact_limit;
    if opts.force_entropic || oversized {
        let Some(eps) = opts.entropic else {
            return Err(Error::TooLargeForExact {
                n,
                m,
                limit: opts.exact_limit,
            });
        };
        let s = sinkhorn::solve(mu, nu, cost, eps, opts.sinkhorn_max_iter, opts.sinkhorn_tol, opts.exec)?;
        return Ok(TransportResult {
            value: finish(s.cost),
            cost: s.cost,
            method: Method::Sinkhorn {
                epsilon: eps,
                iterations: s.iterations,
                marginal_error: s.marginal_error,
            },
            certificate: None,
            plan: Vec::new(),
        });
    }

    if mu == nu {
        return Ok(TransportResult {
            value: 0.0,
            cost: 0.0,
            method: Method::Identical,
            certificate: Some(Certificate {
                dual_infeasibility: 0.0,
                duality_gap: 0.0,
            }),
            plan: (0..n).map(|i| (i, i, mu.weight(i))).collect(),
        });
    }

    if mu.dim() == 1 && n == m && mu.is_uniform() && nu.is_uniform() {
        return Ok(sorted_pairing(mu, nu, cost, &finish));
    }

    let (supply, demand, total) = integer_masses(mu, nu);
    let src_order = curve_order(mu.points(), nu.points(), mu.points());
    let dst_order = curve_order(mu.points(), nu.points(), nu.points());
    let (pa, pb) = (mu.points(), nu.points());
    let c = |i: usize, j: usize| cost.eval(pa.row(i), pb.row(j));
    let sol = simplex::solve(&supply, &demand, &c, &src_order, &dst_order, SimplexOptions::default(), opts.exec)?;
    let scale = 1.0 / total as f64;
    let optimal = sol.objective * scale;
    Ok(TransportResult {
        value: finish(optimal),
        cost: optimal,
        method: Method::NetworkSimplex {
            pivots: sol.pivots,
            pricing_rounds: sol.pricing_rounds,
            arcs: sol.arcs,
        },
        certificate: Some(Certificate {
            dual_infeasibility: sol.dual_infeasibility,
            duality_gap: sol.duality_gap,
        }),
        plan: sol.flows.iter().map(|&(i, j, f)| (i, j, f as f64 * scale)).collect(),
    })
}

fn sorted_pairing(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cost: Cost, finish: &dyn Fn(f64) -> f64) -> TransportResult {
    let n = mu.len();
    let sort = |m: &EmpiricalMeasure| {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| m.points().row(a)[0].total_cmp(&m.points().row(b)[0]).then(a.cmp(&b)));
        idx
    };
    let (ia, ib) = (sort(mu), sort(nu));
    let mut total = 0.0;
    let mut plan = Vec::with_capacity(n);
    for (&i, &j) in ia.iter().zip(&ib) {
        total += cost.eval(mu.points().row(i), nu.points().row(j));
        plan.push((i, j, 1.0 / n as f64));
    }
    let c = total / n as f64;
    TransportResult {
        value: finish(c),
        cost: c,
        method: Method::SortedPairing,
        certificate: None,
        plan,
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Integer supplies/demands with equal totals.
fn integer_masses(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> (Vec<i64>, Vec<i64>, i64) {
    let (n, m) = (mu.len() as u64, nu.len() as u64);
    if mu.is_uniform() && nu.is_uniform() {
        let l = n / gcd(n, m) * m;
        return (vec![(l / n) as i64; n as usize], vec![(l / m) as i64; m as usize], l as i64);
    }
    const SCALE: i64 = 1 << 40;
    let quantize = |w: Vec<f64>| -> Vec<i64> {
        let mut q: Vec<i64> = w.iter().map(|x| ((x * SCALE as f64).floor() as i64).max(1)).collect();
        // hand out the remainder to the largest fractional parts
        let mut rest = SCALE - q.iter().sum::<i64>();
        let mut frac: Vec<(f64, usize)> = w
            .iter()
            .enumerate()
            .map(|(i, x)| (x * SCALE as f64 - (x * SCALE as f64).floor(), i))
            .collect();
        frac.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut k = 0;
        while rest != 0 {
            let i = frac[k % frac.len()].1;
            if rest > 0 {
                q[i] += 1;
                rest -= 1;
            } else if q[i] > 1 {
                q[i] -= 1;
                rest += 1;
            }
            k += 1;
        }
        q
    };
    (quantize(mu.weights()), quantize(nu.weights()), SCALE)
}

/// Indices of `pts` sorted along a space-filling curve over the common
/// bounding box of `a` and `b` (Hilbert in 2-D, Morton otherwise).
fn curve_order(a: &PointCloud, b: &PointCloud, pts: &PointCloud) -> Vec<usize> {
    let d = pts.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for r in a.rows().chain(b.rows()) {
        for c in 0..d {
            lo[c] = lo[c].min(r[c]);
            hi[c] = hi[c].max(r[c]);
        }
    }
    let bits: u32 = if d == 1 { 62 } else { (62 / d as u32).min(20) };
    let cells = (1u64 << bits) - 1;
    let quant = |r: &[f64], c: usize| -> u64 {
        let w = hi[c] - lo[c];
        if w <= 0.0 {
            0
        } else {
            (((r[c] - lo[c]) / w) * cells as f64).round() as u64
        }
    };
    let key = |r: &[f64]| -> u64 {
        if d == 1 {
            quant(r, 0)
        } else if d == 2 {
            hilbert_index(bits, quant(r, 0), quant(r, 1))
        } else {
            let q: Vec<u64> = (0..d).map(|c| quant(r, c)).collect();
            let mut z = 0u64;
            for bit in (0..bits).rev() {
                for qc in &q {
                    z = (z << 1) | ((qc >> bit) & 1);
                }
            }
            z
        }
    };
    let keys: Vec<u64> = pts.rows().map(key).collect();
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by_key(|&i| (keys[i], i));
    idx
}

fn hilbert_index(bits: u32, mut x: u64, mut y: u64) -> u64 {
    let n = 1u64 << bits;
    let mut d = 0u64;
    let mut s = n >> 1;
    while s > 0 {
        let rx = u64::from(x & s > 0);
        let ry = u64::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s >>= 1;
    }
    d
}

/// `W₁(μ_t, ν_t)` at every grid time.
pub fn path_w1_series(a: &MeasurePath, b: &MeasurePath, opts: &TransportOptions) -> Result<Vec<f64>> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch(format!("{} vs {} times", a.len(), b.len())));
    }
    a.measures()
        .iter()
        .zip(b.measures())
        .map(|(m, n)| w1(m, n, opts).map(|r| r.value))
        .collect()
}

/// `max_t W₁(μ_t, ν_t)` over the shared grid (one realization of the
/// inner supremum of `d_S`).
pub fn path_distance(a: &MeasurePath, b: &MeasurePath, opts: &TransportOptions) -> Result<f64> {
    Ok(path_w1_series(a, b, opts)?.into_iter().fold(0.0, f64::max))
}

/// `(W₁(μ, ν), W₁(μ + c, ν + c))`.
pub fn shift_stability(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, c: &[f64], opts: &TransportOptions) -> Result<(f64, f64)> {
    let base = w1(mu, nu, opts)?.value;
    let shifted = w1(&mu.translated(c), &nu.translated(c), opts)?.value;
    Ok((base, shifted))
}
