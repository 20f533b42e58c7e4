//! Reference computations that share no code with the samplers they check.

use crate::increments::IncrementLaw;
use crate::rng::SimRng;

/// `psi'(theta)`, the mean of an increment tilted by `theta`.
pub fn tilted_mean(law: &IncrementLaw, theta: f64) -> Option<f64> {
    match law {
        IncrementLaw::CenteredExponential => Some(1.0 / (1.0 - theta) - 1.0),
        IncrementLaw::StandardNormal => Some(theta),
        IncrementLaw::Custom(_) => None,
    }
}

/// `psi''(theta)`, the variance of an increment tilted by `theta`.
pub fn tilted_variance(law: &IncrementLaw, theta: f64) -> Option<f64> {
    match law {
        IncrementLaw::CenteredExponential => Some((1.0 - theta).powi(-2)),
        IncrementLaw::StandardNormal => Some(1.0),
        IncrementLaw::Custom(_) => None,
    }
}

/// Probabilities of the first `terms` block indices under weights
/// `2^n exp(-c 2^{-n} (2^n + t)^{2 alpha})`, normalized by direct summation
/// of those same terms.
pub fn direct_pmf(alpha: f64, c: f64, t: f64, terms: usize) -> Vec<f64> {
    let lw: Vec<f64> = (0..terms)
        .map(|n| {
            let two_n = 2f64.powi(n as i32);
            n as f64 * std::f64::consts::LN_2 - c * (two_n + t).powf(2.0 * alpha) / two_n
        })
        .collect();
    let peak = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = lw.iter().map(|&l| (l - peak).exp()).sum();
    lw.iter().map(|&l| (l - peak).exp() / z).collect()
}

/// `max_{0 <= n <= horizon} S_n - n^alpha` for a nominal walk; `pow` holds
/// `n^alpha` at index `n - 1`.
pub fn truncated_max(law: &IncrementLaw, pow: &[f64], rng: &mut SimRng) -> f64 {
    let mut s = 0.0;
    let mut best: f64 = 0.0;
    for &p in pow {
        s += law.sample(rng);
        best = best.max(s - p);
    }
    best
}

/// `n^alpha` for `n = 1..=horizon`.
pub fn power_table(alpha: f64, horizon: usize) -> Vec<f64> {
    (1..=horizon).map(|n| (n as f64).powf(alpha)).collect()
}

/// `P(V in (lo, hi))` for `V` Pareto with `P(V > v) = v^{-beta}`, `v >= 1`.
fn pareto_interval(beta: f64, lo: f64, hi: f64) -> f64 {
    let sf = |v: f64| if v <= 1.0 { 1.0 } else { v.powf(-beta) };
    (sf(lo) - sf(hi)).max(0.0)
}

/// Law of the first index `k >= 1` with `V_k` in
/// `(k mu - k^alpha, k mu + k^alpha + h)`, from the product of the first
/// `terms` factors: `P(K = k)` for `k = 1..=k_max` and the truncated
/// `P(K > terms)`, an upper bound on `P(K = infinity)`.
pub fn first_breaker_law(alpha: f64, beta: f64, mu: f64, h: f64, k_max: u64, terms: u64) -> (Vec<f64>, f64) {
    let mut ln_none: f64 = 0.0;
    let mut probs = Vec::with_capacity(k_max as usize);
    for k in 1..=terms {
        let kf = k as f64;
        let e = kf.powf(alpha);
        let p = pareto_interval(beta, kf * mu - e, kf * mu + e + h);
        if k <= k_max {
            probs.push(ln_none.exp() * p);
        }
        ln_none += (-p).ln_1p();
    }
    (probs, ln_none.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_pmf_sums_to_one() {
        let p = direct_pmf(0.9, 0.01, 10.0, 200);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn first_breaker_law_is_subprobability() {
        let (p, inf) = first_breaker_law(0.6, 0.8, 1.0, 1.0, 20, 1000);
        let total: f64 = p.iter().sum::<f64>() + inf;
        assert!(total <= 1.0 + 1e-12);
        assert_eq!(p[0], pareto_interval(0.8, 0.0, 3.0));
        assert_eq!(p[0], 1.0 - 3f64.powf(-0.8));
    }
}
