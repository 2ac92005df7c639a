//! Explicit stability constants.
//!
//! ```text
//! C(p, t)   = C_p t^{1/(2p)} L_σ + t^{1/p} L_b
//! C_{p,T}   = (1 − C(p, T/n))^{−np},        n minimal with C(p, T/n) < 1
//! γ_T       = L_K T C_{1,T}
//! C̃_T       = ((1 − γ_{T/n})(1 − C(1, T/n)))^{−n},  n minimal with both factors < 1
//! W₂ factor = 4 exp(4t (2t L_K² + C₂ L_σ²))
//! ```
//!
//! Constants that overflow `f64` are still reported through their logarithms.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_C1: f64 = 3.0;
pub const DEFAULT_C2: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsInput {
    pub l_k: f64,
    pub l_sigma: f64,
    /// Lipschitz constant of the frozen drift; `None` means `L_K`.
    #[serde(default)]
    pub l_b: Option<f64>,
    pub t_final: f64,
    #[serde(default = "one")]
    pub p: f64,
    /// BDG constant for exponent `p`; defaults to `c1` / `c2` for `p = 1, 2`.
    #[serde(default)]
    pub c_p: Option<f64>,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
}

fn one() -> f64 {
    1.0
}

fn default_c1() -> f64 {
    DEFAULT_C1
}

fn default_c2() -> f64 {
    DEFAULT_C2
}

impl BoundsInput {
    pub fn new(l_k: f64, l_sigma: f64, t_final: f64) -> Self {
        BoundsInput {
            l_k,
            l_sigma,
            l_b: None,
            t_final,
            p: 1.0,
            c_p: None,
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
        }
    }

    pub fn l_b(&self) -> f64 {
        self.l_b.unwrap_or(self.l_k)
    }

    pub fn c_p(&self) -> Result<f64> {
        match self.c_p {
            Some(c) => Ok(c),
            None if self.p == 1.0 => Ok(self.c1),
            None if self.p == 2.0 => Ok(self.c2),
            None => Err(Error::invalid(format!("no default BDG constant for p = {}; pass c_p", self.p))),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !(finite_nonneg(self.l_k) && finite_nonneg(self.l_sigma) && finite_nonneg(self.l_b())) {
            return Err(Error::invalid("Lipschitz constants must be finite and nonnegative"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid("T must be positive"));
        }
        if !(self.p >= 1.0) {
            return Err(Error::invalid("p must be at least 1"));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c_p()? > 0.0) {
            return Err(Error::invalid("BDG constants must be positive"));
        }
        Ok(())
    }
}

/// `C(p, t)` with Lipschitz data `l_sigma`, `l_b` and BDG constant `c_p`.
pub fn c_of(p: f64, t: f64, c_p: f64, l_sigma: f64, l_b: f64) -> f64 {
    c_p * t.powf(1.0 / (2.0 * p)) * l_sigma + t.powf(1.0 / p) * l_b
}

/// Smallest `n ≥ 1` with `ok(n)`, for a predicate that is monotone in `n`.
fn minimal_n(ok: impl Fn(u64) -> bool) -> u64 {
    if ok(1) {
        return 1;
    }
    let mut hi = 2u64;
    while !ok(hi) {
        hi = hi.checked_mul(2).expect("subdivision count overflow");
    }
    let mut lo = hi / 2; // !ok(lo)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `(n, C(p, T/n), ln C_{p,T})` for the horizon `t`.
fn c_p_t_parts(p: f64, t: f64, c_p: f64, l_sigma: f64, l_b: f64) -> (u64, f64, f64) {
    let n = minimal_n(|n| c_of(p, t / n as f64, c_p, l_sigma, l_b) < 1.0);
    let c = c_of(p, t / n as f64, c_p, l_sigma, l_b);
    (n, c, -(n as f64) * p * (1.0 - c).ln())
}

/// `γ_t = L_K t C_{1,t}`.
pub fn gamma(t: f64, l_k: f64, c1: f64, l_sigma: f64, l_b: f64) -> f64 {
    let (_, _, ln_c) = c_p_t_parts(1.0, t, c1, l_sigma, l_b);
    l_k * t * ln_c.exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityConstants {
    pub l_k: f64,
    pub l_sigma: f64,
    pub l_b: f64,
    pub t_final: f64,
    pub p: f64,
    pub c_p: f64,
    pub c1: f64,
    pub c2: f64,
    /// `C(p, T)`.
    pub c_of_p_t: f64,
    /// Minimal `n` with `C(p, T/n) < 1`.
    pub n_star: u64,
    /// `C(p, T/n_star)`.
    pub c_of_p_sub: f64,
    pub c_p_t: f64,
    pub ln_c_p_t: f64,
    /// `C_{1,T}` (enters `γ_T`).
    pub c_1_t: f64,
    pub ln_c_1_t: f64,
    pub gamma_t: f64,
    /// Minimal `n` for `C̃_T`.
    pub n_tilde: u64,
    pub gamma_sub: f64,
    pub c_of_1_sub: f64,
    pub c_tilde_t: f64,
    pub ln_c_tilde_t: f64,
}

pub fn compute_constants(input: &BoundsInput) -> Result<StabilityConstants> {
    input.validate()?;
    let (l_k, l_s, l_b, t) = (input.l_k, input.l_sigma, input.l_b(), input.t_final);
    let (p, c_p, c1) = (input.p, input.c_p()?, input.c1);

    let (n_star, c_sub, ln_c_p_t) = c_p_t_parts(p, t, c_p, l_s, l_b);
    let (_, _, ln_c_1_t) = c_p_t_parts(1.0, t, c1, l_s, l_b);
    let c_1_t = ln_c_1_t.exp();
    let gamma_t = l_k * t * c_1_t;

    let ok = |n: u64| {
        let h = t / n as f64;
        gamma(h, l_k, c1, l_s, l_b) < 1.0 && c_of(1.0, h, c1, l_s, l_b) < 1.0
    };
    let n_tilde = minimal_n(ok);
    let h = t / n_tilde as f64;
    let gamma_sub = gamma(h, l_k, c1, l_s, l_b);
    let c_of_1_sub = c_of(1.0, h, c1, l_s, l_b);
    let ln_c_tilde_t = -(n_tilde as f64) * ((1.0 - gamma_sub).ln() + (1.0 - c_of_1_sub).ln());

    Ok(StabilityConstants {
        l_k,
        l_sigma: l_s,
        l_b,
        t_final: t,
        p,
        c_p,
        c1,
        c2: input.c2,
        c_of_p_t: c_of(p, t, c_p, l_s, l_b),
        n_star,
        c_of_p_sub: c_sub,
        c_p_t: ln_c_p_t.exp(),
        ln_c_p_t,
        c_1_t,
        ln_c_1_t,
        gamma_t,
        n_tilde,
        gamma_sub,
        c_of_1_sub,
        c_tilde_t: ln_c_tilde_t.exp(),
        ln_c_tilde_t,
    })
}

impl StabilityConstants {
    /// `C_{p,t}` at another horizon with the same data.
    pub fn c_p_at(&self, p: f64, c_p: f64, t: f64) -> f64 {
        c_p_t_parts(p, t, c_p, self.l_sigma, self.l_b).2.exp()
    }

    pub fn gamma_at(&self, t: f64) -> f64 {
        gamma(t, self.l_k, self.c1, self.l_sigma, self.l_b)
    }

    /// `4 exp(4t (2t L_K² + C₂ L_σ²))`.
    pub fn w2_factor(&self, t: f64) -> f64 {
        4.0 * (4.0 * t * (2.0 * t * self.l_k * self.l_k + self.c2 * self.l_sigma * self.l_sigma)).exp()
    }

    /// Largest `T / 2^k` with `γ ≤ target` (the Picard subinterval).
    pub fn picard_subinterval(&self, target: f64) -> (f64, f64) {
        let mut h = self.t_final;
        for _ in 0..60 {
            let g = self.gamma_at(h);
            if g <= target {
                return (h, g);
            }
            h /= 2.0;
        }
        (h, self.gamma_at(h))
    }
}

/// `4 exp(4t (2t L_K² + C₂ L_σ²)) · initial_w2_sq`.
pub fn w2_bound(constants: &StabilityConstants, t: f64, initial_w2_sq: f64) -> f64 {
    if initial_w2_sq == 0.0 {
        return 0.0;
    }
    constants.w2_factor(t) * initial_w2_sq
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFamily {
    HaurayMischler,
    FournierGuillin,
}

/// A rate `N ↦ r(N)` for overlays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateDescriptor {
    pub family: RateFamily,
    pub d: usize,
    pub p: f64,
    /// Exponent of the dominant power of `N` (the supremum of admissible
    /// exponents for Hauray–Mischler).
    pub leading_exponent: f64,
    pub formula: String,
}

impl RateDescriptor {
    pub fn eval(&self, n: f64) -> f64 {
        match self.family {
            RateFamily::HaurayMischler => n.powf(self.leading_exponent),
            RateFamily::FournierGuillin => {
                let tail = if self.p.is_infinite() { n.recip() } else { n.powf(-(self.p - 1.0) / self.p) };
                if self.d == 2 {
                    n.powf(-0.5) * (1.0 + n).ln() + tail
                } else {
                    n.powf(-1.0 / self.d as f64) + tail
                }
            }
        }
    }
}

pub fn theoretical_rate(d: usize, p: f64, which: RateFamily) -> Result<RateDescriptor> {
    if d == 0 || !(p > 0.0) {
        return Err(Error::invalid("need d >= 1 and p > 0"));
    }
    match which {
        RateFamily::HaurayMischler => {
            let gamma = 1.0 / (d as f64 + 1.0 + d as f64 / p);
            Ok(RateDescriptor {
                family: which,
                d,
                p,
                leading_exponent: -gamma,
                formula: format!("N^-gamma for every gamma < {gamma:.6}"),
            })
        }
        RateFamily::FournierGuillin => {
            if !(p > 1.0) {
                return Err(Error::ExcludedParameters(format!("Fournier-Guillin rate needs p > 1 (got {p})")));
            }
            let tail_exp = if p.is_infinite() { 1.0 } else { (p - 1.0) / p };
            match d {
                1 => Err(Error::ExcludedParameters("Fournier-Guillin overlay covers d >= 2 only".into())),
                2 if p == 2.0 => Err(Error::ExcludedParameters("d = 2 with p = 2 is excluded".into())),
                2 => Ok(RateDescriptor {
                    family: which,
                    d,
                    p,
                    leading_exponent: (-0.5f64).max(-tail_exp),
                    formula: format!("N^-1/2 log(1+N) + N^-{tail_exp:.6}"),
                }),
                _ if (p - d as f64 / (d as f64 - 1.0)).abs() < 1e-12 => Err(Error::ExcludedParameters(format!(
                    "d = {d} with p = d/(d-1) is excluded"
                ))),
                _ => Ok(RateDescriptor {
                    family: which,
                    d,
                    p,
                    leading_exponent: (-1.0 / d as f64).max(-tail_exp),
                    formula: format!("N^-1/{d} + N^-{tail_exp:.6}"),
                }),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_zero_drift_lipschitz() {
        let mut inp = BoundsInput::new(1.0, 0.0, 2.5);
        inp.l_b = Some(0.0);
        let c = compute_constants(&inp).unwrap();
        assert_eq!(c.n_star, 1);
        assert_eq!(c.c_p_t, 1.0);
        assert_eq!(c.gamma_t, 2.5);
        // n minimal with 2.5/n < 1 is 3
        assert_eq!(c.n_tilde, 3);
        assert!((c.c_tilde_t - (1.0_f64 / (1.0 - 2.5 / 3.0)).powi(3)).abs() < 1e-9);
    }

    #[test]
    fn zero_interaction() {
        let c = compute_constants(&BoundsInput::new(0.0, 0.5, 1.0)).unwrap();
        assert_eq!(c.gamma_t, 0.0);
        assert_eq!(c.gamma_sub, 0.0);
        assert!((c.ln_c_tilde_t + c.n_tilde as f64 * (1.0 - c.c_of_1_sub).ln()).abs() < 1e-14);
    }

    #[test]
    fn minimality() {
        let inp = BoundsInput::new(1.0, 2.0, 1.0);
        let c = compute_constants(&inp).unwrap();
        assert!(c.c_of_p_sub < 1.0);
        if c.n_star > 1 {
            assert!(c_of(1.0, 1.0 / (c.n_star - 1) as f64, 3.0, 2.0, 1.0) >= 1.0);
        }
        assert!(c.c_p_t >= 1.0 && c.c_tilde_t >= 1.0);
    }

    #[test]
    fn w2_factor_at_zero() {
        let c = compute_constants(&BoundsInput::new(1.0, 2.0, 1.0)).unwrap();
        assert_eq!(w2_bound(&c, 0.0, 0.3), 4.0 * 0.3);
        assert_eq!(w2_bound(&c, 0.7, 0.0), 0.0);
        assert!(w2_bound(&c, 0.5, 1.0) <= w2_bound(&c, 0.6, 1.0));
    }

    #[test]
    fn rates() {
        let hm = theoretical_rate(2, f64::INFINITY, RateFamily::HaurayMischler).unwrap();
        assert!((hm.leading_exponent + 1.0 / 3.0).abs() < 1e-15);
        let fg = theoretical_rate(3, 2.0, RateFamily::FournierGuillin).unwrap();
        assert!((fg.leading_exponent + 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(theoretical_rate(2, 2.0, RateFamily::FournierGuillin), Err(Error::ExcludedParameters(_))));
        assert!(matches!(theoretical_rate(3, 1.5, RateFamily::FournierGuillin), Err(Error::ExcludedParameters(_))));
        assert!(theoretical_rate(2, 1.0, RateFamily::FournierGuillin).is_err());
    }
}
