//! Record-breaker geometry.
//!
//! A record is broken at step `k` (clock measured from the last record) when
//! the walk rises above `a k^alpha + b k^{1-alpha}`. The parameters are chosen
//! so that a fresh walk never breaks a record with probability at least 3/4,
//! and so that the walk stays under `n^alpha` once it has been record-free for
//! `Gamma` steps.

mod pmf;

pub use pmf::AuxPmf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::increments::IncrementLaw;

pub const DEFAULT_SERIES_TOL: f64 = 1e-12;

/// Relative bump added to the integer maximum defining `xi` so that rounding
/// in `n^alpha` can never push a checked point above it.
const XI_BUMP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub xi: f64,
    pub series_tol: f64,
    /// Radius on which the increment log-MGF is dominated by `theta^2`.
    pub delta_prime: f64,
}

impl BoundaryParams {
    pub fn new(law: &IncrementLaw, alpha: f64, a: f64) -> Result<Self> {
        Self::with_tolerance(law, alpha, a, DEFAULT_SERIES_TOL)
    }

    pub fn with_tolerance(law: &IncrementLaw, alpha: f64, a: f64, series_tol: f64) -> Result<Self> {
        if !(alpha > 0.5 && alpha < 1.0) {
            return Err(Error::Constraint(format!("alpha must lie in (1/2, 1), got {alpha}")));
        }
        let delta_prime = law.delta_prime();
        let a_max = (4.0 * delta_prime).min(0.5);
        if !(a > 0.0 && a < a_max) {
            return Err(Error::Constraint(format!("a must lie in (0, {a_max}), got {a}")));
        }
        if !(series_tol > 0.0 && series_tol < 1e-3) {
            return Err(Error::Constraint(format!("series_tol must lie in (0, 1e-3), got {series_tol}")));
        }

        let series = AuxPmf::family(alpha, a * a / 16.0, 0.0, 0, series_tol);
        let (_, ln_z_hi) = series.log_z_bounds();
        let b = (4.0 / a) * (4f64.ln() + ln_z_hi);
        let b = b.next_up().next_up();

        let xi = integer_xi(alpha, a, b);
        Ok(BoundaryParams { alpha, a, b, xi, series_tol, delta_prime })
    }

    /// `n^alpha` and `n^{1-alpha}`.
    #[inline]
    pub fn powers(&self, n: f64) -> (f64, f64) {
        let p = n.powf(self.alpha);
        (p, if n > 0.0 { n / p } else { 0.0 })
    }

    /// Record boundary `a k^alpha + b k^{1-alpha}`.
    #[inline]
    pub fn upper(&self, k: f64) -> f64 {
        let (p, q) = self.powers(k);
        self.a * p + self.b * q
    }

    /// Safe band `(a/4) k^alpha` used to stop the post-horizon extension.
    #[inline]
    pub fn lower_band(&self, k: f64) -> f64 {
        0.25 * self.a * k.powf(self.alpha)
    }

    /// Tilt for block `n` of the record-detection proposal.
    pub fn theta_n(&self, n: usize) -> f64 {
        let th = self.a * ((self.alpha - 1.0) * n as f64 - 2.0).exp2();
        debug_assert!(th < self.delta_prime);
        th
    }

    /// `2^{-n-2} a (2^n + t)^alpha`. Not bounded by `delta_prime` for small `n`
    /// when `t > 0`; see [`BoundaryParams::no_record_tilt`].
    pub fn theta_tilde(&self, n: usize, t: f64) -> f64 {
        self.log_theta_tilde(n, t).exp()
    }

    fn log_theta_tilde(&self, n: usize, t: f64) -> f64 {
        let nf = n as f64;
        let ln2 = std::f64::consts::LN_2;
        // ln(2^n + t) = n ln 2 + ln(1 + t 2^{-n})
        let ln_base = nf * ln2 + (t * (-nf).exp2()).ln_1p();
        (0.25 * self.a).ln() - nf * ln2 + self.alpha * ln_base
    }

    /// First block index with `theta_tilde(n, t) < delta_prime`. `theta_tilde`
    /// is decreasing in `n`.
    pub fn no_record_switch(&self, t: f64) -> usize {
        let ln_dp = self.delta_prime.ln();
        (0..).find(|&n| self.log_theta_tilde(n, t) < ln_dp).expect("theta_tilde -> 0")
    }

    /// Tilt used for block `n` of the no-future-record proposal started at
    /// clock `t`: `theta_tilde(n, t)` from the switch index on, `theta_n`
    /// below it.
    pub fn no_record_tilt(&self, n: usize, t: f64, switch: usize) -> f64 {
        let th = if n < switch { self.theta_n(n) } else { self.theta_tilde(n, t) };
        assert!(th < self.delta_prime, "tilt {th} at block {n} exceeds delta' {}", self.delta_prime);
        th
    }

    /// `ceil((2 max(s, 0) + 2 xi)^{1/alpha})`, at least 1.
    pub fn gamma_of(&self, s: f64) -> u64 {
        let g = (2.0 * s.max(0.0) + 2.0 * self.xi).powf(1.0 / self.alpha).ceil();
        if g >= u64::MAX as f64 {
            u64::MAX
        } else {
            (g as u64).max(1)
        }
    }

    /// Block-index pmf for record detection: `w_n = 2^n exp(-a^2 2^{2n alpha - n - 3})`.
    pub fn pmf_n(&self) -> AuxPmf {
        AuxPmf::family(self.alpha, self.a * self.a / 8.0, 0.0, 0, self.series_tol)
    }

    /// `w_n = 2^n exp(-2^{-n-4} a^2 (2^n + t)^{2 alpha})`.
    pub fn pmf_n_t(&self, t: f64) -> AuxPmf {
        AuxPmf::family(self.alpha, self.a * self.a / 16.0, t, 0, self.series_tol)
    }

    /// The proposal actually used by the no-future-record Bernoulli: the
    /// `pmf_n_t` weights from the switch index on and the `t = 0` weights
    /// below it, so that every block tilt stays inside `delta_prime`.
    pub fn no_record_proposal(&self, t: f64) -> AuxPmf {
        let switch = self.no_record_switch(t);
        AuxPmf::family(self.alpha, self.a * self.a / 16.0, t, switch, self.series_tol)
    }
}

/// `max_{n >= 0} (a - 1/2) n^alpha + b n^{1-alpha}` over integers. The real
/// function is unimodal with its peak at `x*`, so only a few integers around
/// it need checking.
fn integer_xi(alpha: f64, a: f64, b: f64) -> f64 {
    let f = |n: f64| {
        let p = n.powf(alpha);
        let q = if n > 0.0 { n / p } else { 0.0 };
        (a - 0.5) * p + b * q
    };
    let x_star = ((1.0 - alpha) * b / (alpha * (0.5 - a))).powf(1.0 / (2.0 * alpha - 1.0));
    let best = if x_star < 2f64.powi(50) {
        let lo = (x_star.floor() - 2.0).max(0.0) as u64;
        let hi = x_star.ceil() as u64 + 2;
        (lo..=hi).map(|n| f(n as f64)).fold(0.0, f64::max)
    } else {
        // Integers this large are not all representable; the real maximum
        // bounds the integer one.
        f(x_star).max(0.0)
    };
    best + XI_BUMP * best.abs().max(1.0)
}
