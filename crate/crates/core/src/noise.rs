//! Environmental noise fields `σ_k` and their covariance `Q`.
//!
//! The field is a finite trigonometric synthesis of an isotropic random
//! field. Each spectral entry `j` carries a wavevector `y_j`, a weight `w_j`
//! and a unit polarization `e_j`, and contributes two modes:
//!
//! ```text
//! σ_{2j}(x)   = sqrt(2 w_j) cos(y_j · x) e_j
//! σ_{2j+1}(x) = sqrt(2 w_j) sin(y_j · x) e_j
//! ```
//!
//! so that `Σ_k σ_k(x) σ_k(x')ᵀ = Q(x − x') = Σ_j 2 w_j cos(y_j · (x − x')) e_j e_jᵀ`
//! holds exactly for the truncated sum. Wavevectors sit on quantile shells
//! of the radial spectral density and on symmetric direction sets, and the
//! weights are scaled so that `Q(0) = Id`.

use crate::cloud::{dot, norm};
use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Radial spectral density `f(|y|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Spectrum {
    /// `f(r) ∝ exp(-r² / 2 scale²)`.
    Gaussian { scale: f64 },
    /// `f(r) ∝ 1` on `inner ≤ r ≤ outer`.
    TopHat { inner: f64, outer: f64 },
    /// `f(r) ∝ (1 + (r / scale)²)^(-exponent)`; finite second moment only
    /// when `2 exponent > d + 2`.
    PowerLaw { scale: f64, exponent: f64 },
    /// Spatially constant unit field `σ_k ≡ e_k` (`Q ≡ Id`). The only
    /// option in dimension one.
    Uniform,
}

impl Spectrum {
    fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            Spectrum::Gaussian { scale } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::invalid("gaussian spectrum scale must be positive"))
            }
            Spectrum::TopHat { inner, outer } if !(inner >= 0.0 && outer > inner && outer.is_finite()) => {
                Err(Error::invalid("top-hat spectrum needs 0 <= inner < outer"))
            }
            Spectrum::PowerLaw { scale, .. } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::invalid("power-law spectrum scale must be positive"))
            }
            Spectrum::PowerLaw { exponent, .. } if 2.0 * exponent <= dim as f64 + 2.0 => {
                Err(Error::invalid(format!(
                    "power-law spectrum with exponent {exponent} has no finite second moment in d = {dim} (needs exponent > {})",
                    (dim as f64 + 2.0) / 2.0
                )))
            }
            _ => Ok(()),
        }
    }

    /// Radii at the probability midpoints `(i + 1/2) / count` of the radial
    /// law `∝ r^{d-1} f(r)`.
    pub fn shell_radii(&self, dim: usize, count: usize) -> Result<Vec<f64>> {
        self.validate(dim)?;
        let qs: Vec<f64> = (0..count).map(|i| (i as f64 + 0.5) / count as f64).collect();
        Ok(match *self {
            Spectrum::Gaussian { scale } => {
                let chi2 = ChiSquared::new(dim as f64).map_err(|e| Error::invalid(e.to_string()))?;
                qs.iter().map(|&q| scale * chi2.inverse_cdf(q).sqrt()).collect()
            }
            Spectrum::TopHat { inner, outer } => {
                let d = dim as i32;
                let (a, b) = (inner.powi(d), outer.powi(d));
                qs.iter().map(|&q| (a + q * (b - a)).powf(1.0 / dim as f64)).collect()
            }
            Spectrum::PowerLaw { scale, exponent } => power_law_quantiles(dim, scale, exponent, &qs),
            Spectrum::Uniform => vec![0.0; count],
        })
    }
}

/// Quantiles of `r^{d-1} (1 + (r/s)²)^{-α}` by cumulative Simpson
/// integration on the compactified variable `u = r / (s + r)`.
fn power_law_quantiles(dim: usize, scale: f64, exponent: f64, qs: &[f64]) -> Vec<f64> {
    const CELLS: usize = 40_000;
    let density = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let r = scale * u / (1.0 - u);
        let jac = scale / ((1.0 - u) * (1.0 - u));
        r.powi(dim as i32 - 1) * (1.0 + (r / scale).powi(2)).powf(-exponent) * jac
    };
    let h = 1.0 / CELLS as f64;
    let mut cdf = vec![0.0; CELLS + 1];
    for c in 0..CELLS {
        let (a, m, b) = (c as f64 * h, (c as f64 + 0.5) * h, (c as f64 + 1.0) * h);
        cdf[c + 1] = cdf[c] + h / 6.0 * (density(a) + 4.0 * density(m) + density(b));
    }
    let total = cdf[CELLS];
    qs.iter()
        .map(|&q| {
            let target = q * total;
            let c = cdf.partition_point(|&v| v < target).clamp(1, CELLS);
            let (lo, hi) = (cdf[c - 1], cdf[c]);
            let frac = if hi > lo { (target - lo) / (hi - lo) } else { 0.0 };
            let u = (c as f64 - 1.0 + frac) * h;
            scale * u / (1.0 - u)
        })
        .collect()
}

/// Construction parameters; also the `[noise]` block of the experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub dim: usize,
    pub spectrum: Spectrum,
    #[serde(default)]
    pub p: f64,
    pub num_shells: usize,
    pub modes_per_shell: usize,
    #[serde(default)]
    pub seed: u64,
    /// Reject compressible fields (`p ≠ 0`). Turning this off is for
    /// exploration only: the particle/measure identities assume `div σ_k = 0`.
    #[serde(default = "default_true")]
    pub require_divergence_free: bool,
}

fn default_true() -> bool {
    true
}

impl NoiseSpec {
    pub fn isotropic(dim: usize, spectrum: Spectrum, num_shells: usize, modes_per_shell: usize, seed: u64) -> Self {
        NoiseSpec {
            dim,
            spectrum,
            p: 0.0,
            num_shells,
            modes_per_shell,
            seed,
            require_divergence_free: true,
        }
    }

    pub fn build(&self) -> Result<NoiseModel> {
        build_isotropic_noise(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry {
    pub wavevector: Vec<f64>,
    pub weight: f64,
    pub polarization: Vec<f64>,
}

/// Immutable after construction; every evaluation is `&self`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModel {
    dim: usize,
    compressibility: f64,
    normalization: f64,
    entries: Vec<SpectralEntry>,
    // Flattened copies for the hot loops.
    wavevectors: Vec<f64>,
    amplitudes: Vec<f64>,
    polarizations: Vec<f64>,
}

/// `d × 2J` matrix whose column `k` is `σ_k(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMatrix {
    pub dim: usize,
    pub modes: usize,
    pub data: Vec<f64>,
}

impl SigmaMatrix {
    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.modes + k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, k)).collect()
    }
}

pub fn build_isotropic_noise(spec: &NoiseSpec) -> Result<NoiseModel> {
    let d = spec.dim;
    if d == 0 {
        return Err(Error::invalid("noise dimension must be at least 1"));
    }
    if matches!(spec.spectrum, Spectrum::Uniform) {
        return Ok(NoiseModel::uniform(d));
    }
    if d == 1 {
        return Err(Error::invalid(
            "isotropic synthesis needs d >= 2 (the solenoidal projector is degenerate in d = 1); use the uniform spectrum",
        ));
    }
    if !(0.0..=1.0).contains(&spec.p) {
        return Err(Error::invalid(format!("compressibility p = {} outside [0, 1]", spec.p)));
    }
    if spec.require_divergence_free && spec.p != 0.0 {
        return Err(Error::invalid(format!(
            "p = {} gives a compressible field; divergence-free noise requires p = 0",
            spec.p
        )));
    }
    if spec.num_shells == 0 || spec.modes_per_shell == 0 {
        return Err(Error::invalid("mode counts must be at least 1"));
    }
    let radii = spec.spectrum.shell_radii(d, spec.num_shells)?;
    let mut rng = rng::sequential(spec.seed);

    let transverse_w = 1.0 - spec.p;
    let longitudinal_w = spec.p * (d as f64 - 1.0);
    let mut entries = Vec::new();
    for &radius in &radii {
        let dirs = shell_directions(d, spec.modes_per_shell, &mut rng)?;
        let per_dir = 1.0 / (spec.num_shells * dirs.len()) as f64;
        for dir in &dirs {
            let y: Vec<f64> = dir.iter().map(|c| c * radius).collect();
            if transverse_w > 0.0 {
                for e in orthonormal_complement(dir) {
                    entries.push(SpectralEntry {
                        wavevector: y.clone(),
                        weight: per_dir * transverse_w,
                        polarization: e,
                    });
                }
            }
            if longitudinal_w > 0.0 {
                entries.push(SpectralEntry {
                    wavevector: y.clone(),
                    weight: per_dir * longitudinal_w,
                    polarization: dir.clone(),
                });
            }
        }
    }

    // Q(0) must come out as c·Id before normalization.
    let mut q0 = vec![0.0; d * d];
    for e in &entries {
        for i in 0..d {
            for l in 0..d {
                q0[i * d + l] += 2.0 * e.weight * e.polarization[i] * e.polarization[l];
            }
        }
    }
    let c = (0..d).map(|i| q0[i * d + i]).sum::<f64>() / d as f64;
    let aniso = (0..d * d)
        .map(|il| {
            let target = if il / d == il % d { c } else { 0.0 };
            (q0[il] - target).abs()
        })
        .fold(0.0, f64::max);
    if aniso > 1e-10 * c {
        return Err(Error::invalid(format!(
            "direction set is not isotropic (residual {aniso:e}); use more modes per shell"
        )));
    }
    let normalization = 1.0 / c;
    for e in &mut entries {
        e.weight *= normalization;
    }
    Ok(NoiseModel::from_entries(d, spec.p, normalization, entries))
}

/// Symmetric direction set for one shell: every direction appears with its
/// antipode, and `Σ ŷŷᵀ` is a multiple of the identity.
fn shell_directions<R: Rng>(d: usize, count: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if d == 2 {
        if count < 4 || !count.is_multiple_of(2) {
            return Err(Error::invalid(
                "in d = 2 modes_per_shell must be even and at least 4 (antipodal pairs over >= 2 axes)",
            ));
        }
        let offset: f64 = rng.random::<f64>() * std::f64::consts::PI;
        return Ok((0..count)
            .map(|m| {
                let th = offset + std::f64::consts::TAU * m as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect());
    }
    if !count.is_multiple_of(2 * d) {
        return Err(Error::invalid(format!(
            "in d = {d} modes_per_shell must be a multiple of {} (antipodal orthonormal frames)",
            2 * d
        )));
    }
    let mut dirs = Vec::with_capacity(count);
    for _ in 0..count / (2 * d) {
        for v in random_frame(d, rng) {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            dirs.push(v);
            dirs.push(neg);
        }
    }
    Ok(dirs)
}

fn random_frame<R: Rng>(d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    loop {
        let raw: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng::standard_normal(rng)).collect())
            .collect();
        if let Some(frame) = gram_schmidt(raw) {
            return frame;
        }
    }
}

fn gram_schmidt(vectors: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        for u in &out {
            let p = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let n = norm(&v);
        if n < 1e-8 {
            return None;
        }
        v.iter_mut().for_each(|a| *a /= n);
        out.push(v);
    }
    Some(out)
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `dir`.
fn orthonormal_complement(dir: &[f64]) -> Vec<Vec<f64>> {
    let d = dir.len();
    if d == 2 {
        return vec![vec![-dir[1], dir[0]]];
    }
    let mut basis = vec![dir.to_vec()];
    for axis in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = vec![0.0; d];
        v[axis] = 1.0;
        for u in &basis {
            let p = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let n = norm(&v);
        if n > 1e-6 {
            v.iter_mut().for_each(|a| *a /= n);
            basis.push(v);
        }
    }
    basis.remove(0);
    basis
}

impl NoiseModel {
    /// Spatially constant field `σ_{2a} ≡ e_a` (`a = 0..d`); sine partners
    /// vanish identically.
    pub fn uniform(dim: usize) -> Self {
        assert!(dim >= 1);
        let entries = (0..dim)
            .map(|a| {
                let mut e = vec![0.0; dim];
                e[a] = 1.0;
                SpectralEntry {
                    wavevector: vec![0.0; dim],
                    weight: 0.5,
                    polarization: e,
                }
            })
            .collect();
        NoiseModel::from_entries(dim, 0.0, 1.0, entries)
    }

    /// Build from explicit entries (no normalization applied).
    pub fn from_entries(dim: usize, compressibility: f64, normalization: f64, entries: Vec<SpectralEntry>) -> Self {
        let mut wavevectors = Vec::with_capacity(entries.len() * dim);
        let mut polarizations = Vec::with_capacity(entries.len() * dim);
        let mut amplitudes = Vec::with_capacity(entries.len());
        for e in &entries {
            assert_eq!(e.wavevector.len(), dim);
            assert_eq!(e.polarization.len(), dim);
            wavevectors.extend_from_slice(&e.wavevector);
            polarizations.extend_from_slice(&e.polarization);
            amplitudes.push((2.0 * e.weight).sqrt());
        }
        NoiseModel {
            dim,
            compressibility,
            normalization,
            entries,
            wavevectors,
            amplitudes,
            polarizations,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of fields `σ_k` (twice the number of spectral entries).
    pub fn num_modes(&self) -> usize {
        2 * self.entries.len()
    }

    pub fn entries(&self) -> &[SpectralEntry] {
        &self.entries
    }

    pub fn compressibility(&self) -> f64 {
        self.compressibility
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    #[inline]
    fn wv(&self, j: usize) -> &[f64] {
        &self.wavevectors[j * self.dim..(j + 1) * self.dim]
    }

    #[inline]
    fn pol(&self, j: usize) -> &[f64] {
        &self.polarizations[j * self.dim..(j + 1) * self.dim]
    }

    /// All `σ_k(x)` as columns of a `d × 2J` matrix.
    pub fn evaluate_sigma(&self, x: &[f64]) -> SigmaMatrix {
        let d = self.dim;
        let modes = self.num_modes();
        let mut data = vec![0.0; d * modes];
        for j in 0..self.entries.len() {
            let (s, c) = dot(self.wv(j), x).sin_cos();
            let a = self.amplitudes[j];
            for (i, e) in self.pol(j).iter().enumerate() {
                data[i * modes + 2 * j] = a * c * e;
                data[i * modes + 2 * j + 1] = a * s * e;
            }
        }
        SigmaMatrix { dim: d, modes, data }
    }

    /// `out += Σ_k σ_k(x) ΔB^k`.
    #[inline]
    pub fn add_noise_displacement(&self, x: &[f64], increments: &[f64], out: &mut [f64]) {
        debug_assert_eq!(increments.len(), self.num_modes());
        for j in 0..self.amplitudes.len() {
            let (s, c) = dot(self.wv(j), x).sin_cos();
            let coef = self.amplitudes[j] * (c * increments[2 * j] + s * increments[2 * j + 1]);
            for (o, e) in out.iter_mut().zip(self.pol(j)) {
                *o += coef * e;
            }
        }
    }

    /// `Q(z) = Σ_j 2 w_j cos(y_j · z) e_j e_jᵀ`, row-major `d × d`.
    pub fn evaluate_q(&self, z: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut q = vec![0.0; d * d];
        for (j, e) in self.entries.iter().enumerate() {
            let f = 2.0 * e.weight * dot(self.wv(j), z).cos();
            let p = self.pol(j);
            for i in 0..d {
                for l in 0..d {
                    q[i * d + l] += f * p[i] * p[l];
                }
            }
        }
        q
    }

    /// `Σ_k σ_k(x) σ_k(y)ᵀ` summed mode by mode.
    pub fn covariance_from_sigma(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let (sx, sy) = (self.evaluate_sigma(x), self.evaluate_sigma(y));
        let mut q = vec![0.0; d * d];
        for k in 0..self.num_modes() {
            for i in 0..d {
                for l in 0..d {
                    q[i * d + l] += sx.get(i, k) * sy.get(l, k);
                }
            }
        }
        q
    }

    pub fn trace_q(&self, z: &[f64]) -> f64 {
        self.entries
            .iter()
            .enumerate()
            .map(|(j, e)| 2.0 * e.weight * dot(self.wv(j), z).cos() * dot(&e.polarization, &e.polarization))
            .sum()
    }

    /// Jacobian `∂_l σ_k^i(x)` of mode `k`, row-major `d × d` (row `i`).
    pub fn jacobian(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let j = k / 2;
        let (s, c) = dot(self.wv(j), x).sin_cos();
        let a = self.amplitudes[j];
        // d/dx cos(y·x) = -sin(y·x) y ; d/dx sin(y·x) = cos(y·x) y
        let g = if k.is_multiple_of(2) { -a * s } else { a * c };
        let (y, e) = (self.wv(j), self.pol(j));
        let mut jac = vec![0.0; d * d];
        for i in 0..d {
            for l in 0..d {
                jac[i * d + l] = g * e[i] * y[l];
            }
        }
        jac
    }

    /// Analytic divergence of `σ_k` at `x`.
    pub fn divergence(&self, k: usize, x: &[f64]) -> f64 {
        let jac = self.jacobian(k, x);
        (0..self.dim).map(|i| jac[i * self.dim + i]).sum()
    }

    /// `Σ_k (Dσ_k σ_k)(x)`, the Itô–Stratonovich drift difference.
    pub fn stratonovich_correction(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let sig = self.evaluate_sigma(x);
        let mut out = vec![0.0; d];
        for k in 0..self.num_modes() {
            let jac = self.jacobian(k, x);
            for i in 0..d {
                for l in 0..d {
                    out[i] += jac[i * d + l] * sig.get(l, k);
                }
            }
        }
        out
    }

    /// `sqrt(Σ_j 2 w_j |y_j|²)`, a global Lipschitz constant for
    /// `x ↦ (σ_k(x))_k` in the `ℓ²`-sum norm.
    pub fn lipschitz_bound(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| 2.0 * e.weight * dot(&e.wavevector, &e.wavevector) * dot(&e.polarization, &e.polarization))
            .sum::<f64>()
            .sqrt()
    }

    /// Sampled Lipschitz ratio `sqrt((2TrQ(0) − 2TrQ(x−y)) / |x−y|²)` over
    /// random pairs, reported next to [`lipschitz_bound`](Self::lipschitz_bound).
    pub fn estimate_lipschitz_sigma(&self, num_samples: usize, seed: u64) -> Result<LipschitzEstimate> {
        if num_samples == 0 {
            return Err(Error::invalid("num_samples must be at least 1"));
        }
        let d = self.dim;
        let mut rng = rng::sequential(seed);
        let tr0 = self.trace_q(&vec![0.0; d]);
        let mut sampled = 0.0f64;
        let mut used = 0;
        for _ in 0..num_samples {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            // separations spread over four decades
            let r = 10f64.powf(rng.random_range(-3.0..1.0));
            let dir: Vec<f64> = (0..d).map(|_| rng::standard_normal(&mut rng)).collect();
            let dn = norm(&dir);
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + r * b / dn).collect();
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let z2 = dot(&z, &z);
            if z2 == 0.0 {
                continue;
            }
            used += 1;
            let ratio = ((2.0 * tr0 - 2.0 * self.trace_q(&z)).max(0.0) / z2).sqrt();
            sampled = sampled.max(ratio);
        }
        Ok(LipschitzEstimate {
            sampled,
            analytic: self.lipschitz_bound(),
            pairs_used: used,
        })
    }

    /// Residuals of every structural identity at `num_points` random points.
    pub fn check(&self, num_points: usize, seed: u64) -> NoiseCheck {
        let d = self.dim;
        let mut rng = rng::sequential(seed);
        let pt = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> { (0..d).map(|_| rng.random_range(-5.0..5.0)).collect() };
        let q0 = self.evaluate_q(&vec![0.0; d]);
        let q0_residual = (0..d * d)
            .map(|il| (q0[il] - if il / d == il % d { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        let tr0 = self.trace_q(&vec![0.0; d]);
        let mut out = NoiseCheck {
            dim: d,
            num_modes: self.num_modes(),
            num_points,
            q0_residual,
            divergence_analytic_max: 0.0,
            divergence_fd_max: 0.0,
            correction_max: 0.0,
            covariance_residual: 0.0,
            symmetry_residual: 0.0,
            lipschitz_identity_residual: 0.0,
            lipschitz_sampled: 0.0,
            lipschitz_analytic: self.lipschitz_bound(),
        };
        let h = 1e-5;
        for _ in 0..num_points {
            let x = pt(&mut rng);
            let y = pt(&mut rng);
            for k in 0..self.num_modes() {
                out.divergence_analytic_max = out.divergence_analytic_max.max(self.divergence(k, &x).abs());
                let mut fd = 0.0;
                for l in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[l] += h;
                    xm[l] -= h;
                    fd += (self.evaluate_sigma(&xp).get(l, k) - self.evaluate_sigma(&xm).get(l, k)) / (2.0 * h);
                }
                out.divergence_fd_max = out.divergence_fd_max.max(fd.abs());
            }
            out.correction_max = out.correction_max.max(norm(&self.stratonovich_correction(&x)));
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let zneg: Vec<f64> = z.iter().map(|a| -a).collect();
            let q = self.evaluate_q(&z);
            let qs = self.covariance_from_sigma(&x, &y);
            let qn = self.evaluate_q(&zneg);
            for i in 0..d {
                for l in 0..d {
                    out.covariance_residual = out.covariance_residual.max((q[i * d + l] - qs[i * d + l]).abs());
                    out.symmetry_residual = out.symmetry_residual.max((q[i * d + l] - qn[l * d + i]).abs());
                }
            }
            let (sx, sy) = (self.evaluate_sigma(&x), self.evaluate_sigma(&y));
            let lhs: f64 = sx.data.iter().zip(&sy.data).map(|(a, b)| (a - b).powi(2)).sum();
            let rhs = 2.0 * tr0 - 2.0 * self.trace_q(&z);
            out.lipschitz_identity_residual = out.lipschitz_identity_residual.max((lhs - rhs).abs());
        }
        out.lipschitz_sampled = self
            .estimate_lipschitz_sigma(num_points.max(1) * 10, seed ^ 0x5eed)
            .map(|e| e.sampled)
            .unwrap_or(0.0);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    pub sampled: f64,
    pub analytic: f64,
    pub pairs_used: usize,
}

/// Output of the `noise-check` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseCheck {
    pub dim: usize,
    pub num_modes: usize,
    pub num_points: usize,
    pub q0_residual: f64,
    pub divergence_analytic_max: f64,
    pub divergence_fd_max: f64,
    pub correction_max: f64,
    pub covariance_residual: f64,
    pub symmetry_residual: f64,
    pub lipschitz_identity_residual: f64,
    pub lipschitz_sampled: f64,
    pub lipschitz_analytic: f64,
}
