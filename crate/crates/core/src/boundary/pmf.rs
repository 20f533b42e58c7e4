//! Lazily truncated pmfs over the dyadic block index `n = 0, 1, 2, ...`.
//!
//! Every pmf used by the samplers belongs to the family
//!
//! ```text
//! w_n = 2^n exp(-c 2^{-n} (2^n + t)^{2 alpha})
//! ```
//!
//! optionally with `t` replaced by 0 below a switch index. The normalizer is
//! never known in closed form; it is carried as an enclosure
//! `[Z_lo, Z_hi] = [partial, partial + tail]`. The tail bound is certified:
//! with `x = 2^m`, `s = t / x`,
//!
//! ```text
//! ln(w_m / w_{m+1}) + ln 2 = c x^{2 alpha - 1} phi(s),   phi(s) = (2+s)^{2 alpha}/2 - (1+s)^{2 alpha}
//! ```
//!
//! and `phi` is decreasing in `s` for `alpha < 1`, so once the ratio
//! `w_{m+1}/w_m` drops to 1/2 it keeps decreasing. Past that index the tail is
//! bounded by a geometric series.

use crate::rng::SimRng;

const LN_2: f64 = std::f64::consts::LN_2;

/// Slack on the ratio-1/2 test so the certificate survives rounding in the
/// log-weight differences.
const RATIO_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
struct WeightLaw {
    alpha: f64,
    c: f64,
    t: f64,
    /// Indices below this use `t = 0`.
    switch: usize,
}

impl WeightLaw {
    fn log_weight(&self, n: usize) -> f64 {
        let nf = n as f64;
        let t = if n < self.switch { 0.0 } else { self.t };
        // ln(2^n + t) - n ln 2 = ln(1 + t 2^{-n})
        let rel = (t * (-nf).exp2()).ln_1p();
        let g = ((2.0 * self.alpha - 1.0) * nf * LN_2 + 2.0 * self.alpha * rel).exp();
        nf * LN_2 - self.c * g
    }
}

/// A discrete pmf on the nonnegative integers with a certified normalizer
/// enclosure and exact inverse-CDF sampling.
#[derive(Clone, Debug)]
pub struct AuxPmf {
    law: WeightLaw,
    tol: f64,
    /// Subtracted from every log weight before exponentiating.
    shift: f64,
    log_w: Vec<f64>,
    w: Vec<f64>,
    cum: Vec<f64>,
    /// Log weight (shifted) of the first index not yet stored.
    next_log_w: f64,
    /// Bound on the (shifted) mass beyond the stored prefix.
    tail: f64,
    tail_start: usize,
}

impl AuxPmf {
    pub(crate) fn family(alpha: f64, c: f64, t: f64, switch: usize, tol: f64) -> Self {
        assert!(c > 0.0 && t >= 0.0 && tol > 0.0);
        let law = WeightLaw { alpha, c, t, switch };

        // Raw log weights up to the certified-decay index, then until the
        // weights are negligible relative to the running maximum.
        let mut raw = vec![law.log_weight(0)];
        let mut peak = raw[0];
        let mut tail_start = None;
        loop {
            let m = raw.len() - 1;
            let next = law.log_weight(m + 1);
            if tail_start.is_none() && m >= switch && ratio_certified(raw[m], next) {
                tail_start = Some(m);
            }
            raw.push(next);
            peak = peak.max(next);
            if tail_start.is_some() && next < peak + tol.ln() - 10.0 {
                break;
            }
        }
        let next_raw = raw.pop().expect("at least two weights");
        let shift = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        let mut pmf = AuxPmf {
            law,
            tol,
            shift,
            log_w: Vec::with_capacity(raw.len() + 8),
            w: Vec::with_capacity(raw.len() + 8),
            cum: Vec::with_capacity(raw.len() + 8),
            next_log_w: next_raw - shift,
            tail: f64::INFINITY,
            tail_start: tail_start.expect("loop exits only after certification"),
        };
        let mut acc = 0.0;
        for lw in raw {
            let lw = lw - shift;
            let w = lw.exp();
            acc += w;
            pmf.log_w.push(lw);
            pmf.w.push(w);
            pmf.cum.push(acc);
        }
        pmf.tail = pmf.tail_after_last();
        while pmf.tail > 0.5 * tol * pmf.z_lo() {
            pmf.extend();
        }
        pmf
    }

    fn tail_after_last(&self) -> f64 {
        let last = *self.log_w.last().expect("nonempty");
        let w_last = *self.w.last().expect("nonempty");
        let r = ratio(last, self.next_log_w);
        debug_assert!(self.log_w.len() > self.tail_start && r <= 0.5 + 1e-12);
        w_last * r / (1.0 - r)
    }

    /// Store one more term and tighten the enclosure.
    fn extend(&mut self) {
        let n = self.log_w.len();
        let lw = self.next_log_w;
        let w = lw.exp();
        let acc = self.cum[n - 1] + w;
        self.log_w.push(lw);
        self.w.push(w);
        self.cum.push(acc);
        self.next_log_w = self.law.log_weight(n + 1) - self.shift;
        self.tail = self.tail_after_last();
    }

    fn z_lo(&self) -> f64 {
        *self.cum.last().expect("nonempty")
    }

    fn z_hi(&self) -> f64 {
        self.z_lo() + self.tail
    }

    fn ensure(&mut self, n: usize) {
        while self.log_w.len() <= n {
            self.extend();
        }
    }

    /// Number of stored terms.
    pub fn stored(&self) -> usize {
        self.log_w.len()
    }

    pub fn tail_start(&self) -> usize {
        self.tail_start
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Index below which the weights use `t = 0` (0 for a plain family member).
    pub fn switch_index(&self) -> usize {
        self.law.switch
    }

    /// `ln w_n` on the original (unshifted) scale.
    pub fn log_weight(&mut self, n: usize) -> f64 {
        self.ensure(n);
        self.log_w[n] + self.shift
    }

    pub fn weight(&mut self, n: usize) -> f64 {
        self.log_weight(n).exp()
    }

    /// `(ln Z_lo, ln Z_hi)` on the original scale.
    pub fn log_z_bounds(&self) -> (f64, f64) {
        (self.z_lo().ln() + self.shift, self.z_hi().ln() + self.shift)
    }

    /// Relative width of the normalizer enclosure.
    pub fn z_rel_width(&self) -> f64 {
        self.tail / self.z_lo()
    }

    /// `p(n)`, normalized by the midpoint of the enclosure.
    pub fn prob(&mut self, n: usize) -> f64 {
        self.ensure(n);
        self.w[n] / (self.z_lo() + 0.5 * self.tail)
    }

    /// `ln p(n)` using the upper end of the enclosure, i.e. a lower bound.
    pub fn log_prob_lo(&mut self, n: usize) -> f64 {
        self.ensure(n);
        self.log_w[n] - self.z_hi().ln()
    }

    /// Stored mass plus tail bound, both normalized by the midpoint.
    pub fn total_mass(&self) -> f64 {
        self.z_hi() / (self.z_lo() + 0.5 * self.tail)
    }

    /// Exact inverse-CDF draw.
    pub fn sample(&mut self, rng: &mut SimRng) -> usize {
        let u = rng.uniform();
        self.sample_with_uniform(u)
    }

    /// Smallest `n` with `cum_n >= u Z`. Resolved by comparing against both
    /// ends of the normalizer enclosure; when they disagree, more terms are
    /// added until they do.
    pub fn sample_with_uniform(&mut self, u: f64) -> usize {
        debug_assert!((0.0..1.0).contains(&u));
        loop {
            let lo = self.cum.partition_point(|&c| c < u * self.z_lo());
            let target_hi = u * self.z_hi();
            if target_hi <= self.z_lo() {
                let hi = self.cum.partition_point(|&c| c < target_hi);
                if lo == hi {
                    return lo;
                }
            }
            if self.tail == 0.0 {
                // The enclosure has collapsed to a point in floating point.
                return lo.min(self.cum.len() - 1);
            }
            self.extend();
        }
    }

    /// Decide `ln_u <= ln_numer - ln p(n)`, i.e. `ln_u <= ln_numer + ln Z - ln w_n`,
    /// tightening the normalizer enclosure until the answer is certain.
    pub fn accept(&mut self, n: usize, ln_u: f64, ln_numer: f64) -> bool {
        self.ensure(n);
        loop {
            let base = ln_numer - self.log_w[n];
            if ln_u <= base + self.z_lo().ln() {
                return true;
            }
            if ln_u > base + self.z_hi().ln() || self.tail == 0.0 {
                return false;
            }
            self.extend();
        }
    }

    /// `ln_numer - ln p(n)` evaluated with `Z_hi`: an upper bound on the log
    /// acceptance ratio.
    pub fn log_ratio_hi(&mut self, n: usize, ln_numer: f64) -> f64 {
        ln_numer - self.log_prob_lo(n)
    }
}

fn ratio(lw: f64, lw_next: f64) -> f64 {
    if lw_next == f64::NEG_INFINITY {
        0.0
    } else {
        (lw_next - lw).exp()
    }
}

fn ratio_certified(lw: f64, lw_next: f64) -> bool {
    lw_next == f64::NEG_INFINITY || lw_next - lw <= -LN_2 - RATIO_MARGIN
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(alpha: f64, c: f64, t: f64, terms: usize) -> Vec<f64> {
        let law = WeightLaw { alpha, c, t, switch: 0 };
        let lw: Vec<f64> = (0..terms).map(|n| law.log_weight(n)).collect();
        let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lw.iter().map(|x| (x - m).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    #[test]
    fn matches_brute_force() {
        for &(alpha, c, t) in &[(0.9, 0.02, 0.0), (0.9, 0.01, 1000.0), (0.55, 0.0001, 0.0), (0.8, 0.005, 10.0)] {
            let mut pmf = AuxPmf::family(alpha, c, t, 0, 1e-12);
            let oracle = brute(alpha, c, t, 400);
            for (n, p) in oracle.iter().enumerate().take(pmf.stored()) {
                if *p > 1e-300 {
                    let rel = (pmf.prob(n) - p).abs() / p;
                    assert!(rel < 1e-10, "alpha={alpha} c={c} t={t} n={n} rel={rel}");
                }
            }
            assert!((pmf.total_mass() - 1.0).abs() < 1e-12);
            assert!(pmf.z_rel_width() <= 1e-12);
        }
    }

    #[test]
    fn tail_ratio_holds_past_tail_start() {
        let mut pmf = AuxPmf::family(0.7, 0.001, 50.0, 0, 1e-12);
        let ts = pmf.tail_start();
        for m in ts..ts + 20 {
            let (a, b) = (pmf.log_weight(m), pmf.log_weight(m + 1));
            assert!(b - a <= -LN_2 || b == f64::NEG_INFINITY, "m={m}");
        }
    }

    #[test]
    fn sample_first_bucket_and_extension() {
        let mut pmf = AuxPmf::family(0.9, 0.02, 0.0, 0, 1e-12);
        assert_eq!(pmf.sample_with_uniform(0.0), 0);
        let stored = pmf.stored();
        let n = pmf.sample_with_uniform(1.0 - f64::EPSILON);
        assert!(n + 1 >= stored.min(n + 1));
        assert!(pmf.weight(n) > 0.0);
    }

    #[test]
    fn accept_is_monotone_in_u() {
        let mut pmf = AuxPmf::family(0.9, 0.02, 0.0, 0, 1e-12);
        let lp = pmf.log_prob_lo(3);
        assert!(pmf.accept(3, lp - 1.0 - 1e-6, -1.0 + 2.0 * lp));
        assert!(!pmf.accept(3, lp - 1.0 + 1e-6, -1.0 + 2.0 * lp));
    }

    #[test]
    fn switched_family_uses_zero_shift_below_switch() {
        let mut plain0 = AuxPmf::family(0.9, 0.01, 0.0, 0, 1e-12);
        let mut hybrid = AuxPmf::family(0.9, 0.01, 500.0, 4, 1e-12);
        let mut plain = AuxPmf::family(0.9, 0.01, 500.0, 0, 1e-12);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1.0);
        for n in 0..4 {
            assert!(close(hybrid.log_weight(n), plain0.log_weight(n)));
        }
        for n in 4..12 {
            assert!(close(hybrid.log_weight(n), plain.log_weight(n)));
        }
        assert!(hybrid.tail_start() >= 4);
    }
}
