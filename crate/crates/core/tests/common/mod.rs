use commonnoise::bounds::{BoundsInput, StabilityConstants};

/// The constants by direct transcription, with linear searches for the
/// subdivision counts.
pub fn oracle_constants(input: &BoundsInput) -> (u64, f64, u64, f64, f64, f64) {
    let c_p = input.c_p().unwrap();
    let (ls, lb, lk, t, p) = (input.l_sigma, input.l_b(), input.l_k, input.t_final, input.p);
    let c = |p: f64, cp: f64, h: f64| cp * h.powf(1.0 / (2.0 * p)) * ls + h.powf(1.0 / p) * lb;
    let ln_c_pt = |p: f64, cp: f64, h: f64| {
        let mut n = 1u64;
        while c(p, cp, h / n as f64) >= 1.0 {
            n += 1;
        }
        (n, -(n as f64) * p * (1.0 - c(p, cp, h / n as f64)).ln())
    };
    let (n_star, ln_cpt) = ln_c_pt(p, c_p, t);
    let gamma = |h: f64| lk * h * ln_c_pt(1.0, input.c1, h).1.exp();
    let mut n_tilde = 1u64;
    while !(gamma(t / n_tilde as f64) < 1.0 && c(1.0, input.c1, t / n_tilde as f64) < 1.0) {
        n_tilde += 1;
    }
    let h = t / n_tilde as f64;
    let ln_tilde = -(n_tilde as f64) * ((1.0 - gamma(h)).ln() + (1.0 - c(1.0, input.c1, h)).ln());
    let w2 = 4.0 * (4.0 * t * (2.0 * t * lk * lk + input.c2 * ls * ls)).exp();
    (n_star, ln_cpt, n_tilde, gamma(t), ln_tilde, w2)
}

pub fn constants_match(input: &BoundsInput, k: &StabilityConstants) -> f64 {
    let (n_star, ln_cpt, n_tilde, gamma_t, ln_tilde, w2) = oracle_constants(input);
    if n_star != k.n_star || n_tilde != k.n_tilde {
        return f64::INFINITY;
    }
    let rel = |a: f64, b: f64| {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    };
    [
        rel(ln_cpt, k.ln_c_p_t),
        rel(gamma_t, k.gamma_t),
        rel(ln_tilde, k.ln_c_tilde_t),
        rel(w2, k.w2_factor(input.t_final)),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
