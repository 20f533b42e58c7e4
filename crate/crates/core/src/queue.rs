//! Exact stationary departures of an infinite-server queue on `[0, h]` with
//! Pareto service times `P(V > v) = v^{-beta}`, `v >= 1`, `beta in (1/2, 1)`.
//!
//! Customers that arrived before time 0 at `-A_n` (`A_n` the backward arrival
//! epochs) depart inside `(0, h)` iff `A_n < V_n < A_n + h`. Two certificates
//! make this a finite check:
//!
//! - past `Xi_1`, `|A_n - n mu| <= eps_n` (two-sided record breakers on the
//!   standardized interarrival walk);
//! - past `Xi_2`, `V_n` avoids `W_n = (n mu - eps_n, n mu + eps_n + h)`
//!   (service record breakers, drawn exactly by a monotone bound sandwich).
//!
//! Beyond `max(Xi_1, Xi_2)` no backward customer can depart in `(0, h)`.
//! Customers arriving in `(0, h)` are simulated directly.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryParams;
use crate::error::{Error, Result};
use crate::increments::IncrementLaw;
use crate::rng::SimRng;
use crate::two_sided::TwoSidedSampler;

pub const DEFAULT_PATH_CAP: u64 = 1_000_000;
pub const DEFAULT_BOUNDARY_A: f64 = 0.4;

/// Survival function of the unit Pareto.
pub fn pareto_sf(beta: f64, v: f64) -> f64 {
    if v <= 1.0 {
        1.0
    } else {
        (-beta * v.ln()).exp()
    }
}

/// One unconditional Pareto draw, `U^{-1/beta}`.
pub fn pareto_sample(beta: f64, rng: &mut SimRng) -> f64 {
    rng.uniform_open().powf(-1.0 / beta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParetoConstraint {
    Inside(f64, f64),
    Outside(f64, f64),
}

/// `P(lo < V < hi)`, stable when the window is narrow relative to `lo`.
pub fn pareto_window_prob(beta: f64, lo: f64, hi: f64) -> f64 {
    if hi <= 1.0 || hi <= lo {
        0.0
    } else if lo <= 1.0 {
        -(-beta * hi.ln()).exp_m1()
    } else {
        (-beta * lo.ln()).exp() * -(-beta * ((hi - lo) / lo).ln_1p()).exp_m1()
    }
}

/// Pareto draw restricted to `(lo, hi)` or to its complement.
pub fn pareto_conditional(beta: f64, constraint: ParetoConstraint, rng: &mut SimRng) -> Result<f64> {
    match constraint {
        ParetoConstraint::Inside(lo, hi) => {
            if hi <= 1.0 || hi <= lo {
                return Err(Error::EmptyConstraint { lo, hi });
            }
            let lo = lo.max(1.0);
            // V = lo (1 - U w)^{-1/beta}, w = 1 - (lo/hi)^beta
            let w = if hi.is_infinite() { 1.0 } else { -(-beta * ((hi - lo) / lo).ln_1p()).exp_m1() };
            loop {
                let u = rng.uniform_open();
                let v = lo * (-(-u * w).ln_1p() / beta).exp();
                if v > lo && v < hi {
                    return Ok(v);
                }
            }
        }
        ParetoConstraint::Outside(lo, hi) => {
            if hi <= 1.0 || hi <= lo {
                return Ok(pareto_sample(beta, rng));
            }
            let below = if lo <= 1.0 { 0.0 } else { -(-beta * lo.ln()).exp_m1() };
            let above = pareto_sf(beta, hi);
            loop {
                let v = if rng.uniform() * (below + above) < below {
                    // V | V <= lo: survival value uniform on [lo^{-beta}, 1]
                    let y = 1.0 - rng.uniform() * below;
                    y.powf(-1.0 / beta)
                } else {
                    hi * rng.uniform_open().powf(-1.0 / beta)
                };
                if !(v > lo && v < hi) {
                    return Ok(v);
                }
            }
        }
    }
}

/// A renewal arrival process seen from a stationary time point.
pub trait StationaryRenewal: Send + Sync + fmt::Debug {
    /// Standardized interarrival law `(Y - mu) / sigma`.
    fn increments(&self) -> IncrementLaw;
    fn mean(&self) -> f64;
    fn sd(&self) -> f64;
    /// Backward and forward recurrence times around time 0 (jointly: the
    /// straddling, length-biased gap split at a uniform point).
    fn straddle(&self, rng: &mut SimRng) -> (f64, f64);
}

/// Exponential interarrivals written as a general renewal process; its
/// straddling gap is Gamma(2). Used to test the renewal code path.
#[derive(Clone, Copy, Debug)]
pub struct ExponentialRenewal {
    pub mean: f64,
}

impl StationaryRenewal for ExponentialRenewal {
    fn increments(&self) -> IncrementLaw {
        IncrementLaw::CenteredExponential
    }
    fn mean(&self) -> f64 {
        self.mean
    }
    fn sd(&self) -> f64 {
        self.mean
    }
    fn straddle(&self, rng: &mut SimRng) -> (f64, f64) {
        let len = -self.mean * (rng.uniform_open().ln() + rng.uniform_open().ln());
        let u = rng.uniform();
        (u * len, (1.0 - u) * len)
    }
}

#[derive(Clone, Debug)]
pub enum ArrivalProcess {
    /// Poisson arrivals with mean interarrival time `mean` (1 for rate 1).
    Poisson { mean: f64 },
    Renewal(Arc<dyn StationaryRenewal>),
}

impl ArrivalProcess {
    pub fn poisson_rate1() -> Self {
        ArrivalProcess::Poisson { mean: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ArrivalProcess::Poisson { mean } => *mean,
            ArrivalProcess::Renewal(r) => r.mean(),
        }
    }

    pub fn sd(&self) -> f64 {
        match self {
            ArrivalProcess::Poisson { mean } => *mean,
            ArrivalProcess::Renewal(r) => r.sd(),
        }
    }

    fn increments(&self) -> IncrementLaw {
        match self {
            ArrivalProcess::Poisson { .. } => IncrementLaw::CenteredExponential,
            ArrivalProcess::Renewal(r) => r.increments(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ArrivalProcess::Poisson { mean } => format!("poisson(mean={mean})"),
            ArrivalProcess::Renewal(r) => format!("renewal({r:?})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QueueModel {
    pub arrival: ArrivalProcess,
    pub beta: f64,
    pub h: f64,
    pub alpha: f64,
    /// Boundary parameter `a` of the two-sided arrival certificate.
    pub a: f64,
    pub path_cap: u64,
    /// Extra backward indices drawn past `Xi` purely to re-check that none
    /// of them lands in the departure region.
    pub audit_extension: u64,
}

impl QueueModel {
    pub fn new(arrival: ArrivalProcess, alpha: f64, beta: f64, h: f64) -> Result<Self> {
        let m = QueueModel {
            arrival,
            beta,
            h,
            alpha,
            a: DEFAULT_BOUNDARY_A,
            path_cap: DEFAULT_PATH_CAP,
            audit_extension: 0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.5 < self.alpha && self.alpha < self.beta && self.beta < 1.0) {
            return Err(Error::Constraint(format!(
                "need 1/2 < alpha < beta < 1, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Constraint(format!("h must be positive, got {}", self.h)));
        }
        let (mu, sd) = (self.arrival.mean(), self.arrival.sd());
        if !(mu > 0.0 && sd > 0.0 && mu.is_finite() && sd.is_finite()) {
            return Err(Error::Constraint(format!("interarrival mean {mu} and sd {sd} must be positive")));
        }
        if self.path_cap == 0 {
            return Err(Error::Constraint("path_cap must be positive".into()));
        }
        Ok(())
    }

    pub fn eps_scale(&self) -> f64 {
        self.arrival.sd()
    }

    pub fn boundary(&self) -> Result<BoundaryParams> {
        BoundaryParams::new(&self.arrival.increments(), self.alpha, self.a)
    }

    /// Breaker windows for a given additive offset in `eps_n`.
    pub fn windows(&self, offset: f64) -> ServiceWindows {
        ServiceWindows::new(self.arrival.mean(), self.eps_scale(), offset, self.alpha, self.beta, self.h)
    }

    /// `P(V_n in W_n)` with no offset.
    pub fn breaker_prob(&self, n: u64) -> f64 {
        self.windows(0.0).breaker_prob(n)
    }
}

/// The windows `W_n = (n mu - eps_n, n mu + eps_n + h)`, `eps_n = sigma n^alpha + offset`,
/// and the bound sandwich on `P(no V_n in W_n for n > k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServiceWindows {
    pub mu: f64,
    pub sigma: f64,
    pub offset: f64,
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub k_star: u64,
}

impl ServiceWindows {
    pub fn new(mu: f64, sigma: f64, offset: f64, alpha: f64, beta: f64, h: f64) -> Self {
        let mut w = ServiceWindows { mu, sigma, offset, alpha, beta, h, k_star: 0 };
        w.k_star = w.find_k_star();
        w
    }

    pub fn eps(&self, n: u64) -> f64 {
        self.sigma * (n as f64).powf(self.alpha) + self.offset
    }

    pub fn window(&self, n: u64) -> (f64, f64) {
        let c = n as f64 * self.mu;
        let e = self.eps(n);
        (c - e, c + e + self.h)
    }

    pub fn breaker_prob(&self, n: u64) -> f64 {
        let (lo, hi) = self.window(n);
        pareto_window_prob(self.beta, lo, hi)
    }

    /// `rho_k = 1 - eps_k / (k mu)`, so the window's lower end is `k mu rho_k`.
    fn rho(&self, k: f64) -> f64 {
        1.0 - (self.sigma * k.powf(self.alpha - 1.0) + self.offset / k) / self.mu
    }

    /// Bound on `sup_{n > k} P(V_n in W_n)`.
    fn q(&self, k: f64) -> f64 {
        let lo = k * self.mu * self.rho(k);
        self.beta * (2.0 * self.sigma * k.powf(self.alpha) + 2.0 * self.offset + self.h)
            / lo.powf(self.beta + 1.0)
    }

    fn tail_valid(&self, k: f64) -> bool {
        let rho = self.rho(k);
        rho >= 0.5 && k * self.mu * rho >= 1.0 && self.q(k) < 0.5
    }

    fn find_k_star(&self) -> u64 {
        // All three conditions are monotone in k.
        let mut hi = 1u64;
        while !self.tail_valid(hi as f64) {
            hi = hi.checked_mul(2).expect("tail conditions hold eventually");
        }
        let mut lo = hi / 2;
        while lo + 1 < hi {
            let mid = lo + (hi - lo) / 2;
            if self.tail_valid(mid as f64) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if lo >= 1 && self.tail_valid(lo as f64) {
            lo
        } else {
            hi
        }
    }

    /// Certified bound on `-sum_{n > k} ln(1 - P(V_n in W_n))`, for `k >= k_star`.
    ///
    /// With `W_n` below `n mu rho_k` for `n > k`, the mean value theorem
    /// gives `P(V_n in W_n) <= beta (2 sigma n^alpha + 2 offset + h) (n mu rho_k)^{-beta-1}`;
    /// integral comparison sums this, and `-ln(1-p) <= p / (1 - q_k)`.
    pub fn tail_bound(&self, k: u64) -> f64 {
        debug_assert!(k >= self.k_star);
        let kf = k as f64;
        let (a, b) = (self.alpha, self.beta);
        let scale = b / (self.mu * self.rho(kf)).powf(b + 1.0);
        let sum = scale
            * (2.0 * self.sigma * kf.powf(a - b) / (b - a) + (2.0 * self.offset + self.h) * kf.powf(-b) / b);
        sum / (1.0 - self.q(kf))
    }

    /// `u_m(k)` and `l_m(k)` for `k` in `m+1 ..= k_max`.
    pub fn bounds(&self, m: u64, k_max: u64) -> BreakerBounds {
        let mut scan = BoundScan::new(self, m);
        let mut u = Vec::new();
        let mut l = Vec::new();
        while scan.k < k_max {
            scan.step(self);
            u.push(scan.ln_u.exp());
            l.push(scan.ln_l.exp());
        }
        BreakerBounds { m, k_star: self.k_star, u, l }
    }

    /// Exact draw of the first breaker index after `m`; `None` if there is none.
    pub fn procedure_c(&self, m: u64, cap: u64, rng: &mut SimRng) -> Result<Option<u64>> {
        let ln_u = rng.uniform().ln();
        self.procedure_c_with(m, cap, ln_u).map(|(k, _)| k)
    }

    /// `procedure_c` driven by a given `ln U`. Also returns the scan length.
    pub fn procedure_c_with(&self, m: u64, cap: u64, ln_u: f64) -> Result<(Option<u64>, u64)> {
        let mut scan = BoundScan::new(self, m);
        loop {
            if scan.k >= cap {
                return Err(Error::PathCap { stage: "breaker scan", needed: (scan.k + 1) as f64, cap });
            }
            scan.step(self);
            if ln_u >= scan.ln_u {
                return Ok((Some(scan.k), scan.k - m));
            }
            if ln_u < scan.ln_l {
                return Ok((None, scan.k - m));
            }
        }
    }
}

/// Incremental `ln u_m(k)`, `ln l_m(k)`.
struct BoundScan {
    k: u64,
    ln_u: f64,
    ln_l: f64,
}

impl BoundScan {
    fn new(_w: &ServiceWindows, m: u64) -> Self {
        BoundScan { k: m, ln_u: 0.0, ln_l: f64::NEG_INFINITY }
    }

    fn step(&mut self, w: &ServiceWindows) {
        self.k += 1;
        self.ln_u += (-w.breaker_prob(self.k)).ln_1p();
        if self.k >= w.k_star {
            self.ln_l = self.ln_l.max(self.ln_u - w.tail_bound(self.k));
        }
    }
}

/// Materialized sandwich; index `i` holds `k = m + 1 + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakerBounds {
    pub m: u64,
    pub k_star: u64,
    pub u: Vec<f64>,
    pub l: Vec<f64>,
}

impl BreakerBounds {
    pub fn u_at(&self, k: u64) -> f64 {
        if k == self.m {
            1.0
        } else {
            self.u[(k - self.m - 1) as usize]
        }
    }

    pub fn l_at(&self, k: u64) -> f64 {
        if k == self.m {
            0.0
        } else {
            self.l[(k - self.m - 1) as usize]
        }
    }

    /// `P(K = k | previous breaker at m) = u(k-1) - u(k)`.
    pub fn prob_k(&self, k: u64) -> f64 {
        self.u_at(k - 1) - self.u_at(k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Xi2Sample {
    pub xi2: u64,
    pub breakers: Vec<u64>,
    pub scan_steps: u64,
}

impl QueueModel {
    /// Iterate `procedure_c` from 0 until no further breaker exists.
    pub fn sample_xi2(&self, windows: &ServiceWindows, rng: &mut SimRng) -> Result<Xi2Sample> {
        let mut breakers = Vec::new();
        let mut m = 0;
        let mut steps = 0;
        loop {
            let (k, s) = windows.procedure_c_with(m, self.path_cap, rng.uniform().ln())?;
            steps += s;
            match k {
                Some(k) => {
                    breakers.push(k);
                    m = k;
                }
                None => return Ok(Xi2Sample { xi2: m, breakers, scan_steps: steps }),
            }
        }
    }

    /// The arrival-walk sampler; build once and pass to
    /// [`QueueModel::sample_departures_with`] when drawing repeatedly.
    pub fn arrival_sampler(&self) -> Result<TwoSidedSampler> {
        self.validate()?;
        Ok(TwoSidedSampler::new(self.boundary()?, self.arrival.increments()).with_step_cap(self.path_cap))
    }

    /// One exact draw of the departure set on `[0, h]`.
    pub fn sample_departures(&self, rng: &mut SimRng) -> Result<DepartureSet> {
        self.sample_departures_with(&self.arrival_sampler()?, rng)
    }

    /// [`QueueModel::sample_departures`] with a prebuilt arrival sampler.
    pub fn sample_departures_with(&self, sampler: &TwoSidedSampler, rng: &mut SimRng) -> Result<DepartureSet> {
        self.validate()?;
        let law = self.arrival.increments();
        let mu = self.arrival.mean();
        let sigma = self.arrival.sd();

        // Renewal arrivals: A_1 is the backward recurrence time and the walk
        // covers gaps 2, 3, ...; the walk index lags the arrival index by one.
        let (backward, forward, shift) = match &self.arrival {
            ArrivalProcess::Poisson { .. } => (None, mu * rng.uniform_open().ln().abs(), 0u64),
            ArrivalProcess::Renewal(r) => {
                let (b, f) = r.straddle(rng);
                (Some(b), f, 1u64)
            }
        };
        let offset = backward.map_or(0.0, |b| (b - mu).abs());

        let mut two = sampler.clone();
        two.reset_counters();
        let records = two.find_records(rng)?;
        let xi1 = records.xi1.saturating_add(shift);
        if xi1 > self.path_cap {
            return Err(Error::PathCap { stage: "arrival certificate", needed: xi1 as f64, cap: self.path_cap });
        }

        let windows = self.windows(offset);
        let xi2s = self.sample_xi2(&windows, rng)?;
        let xi = xi1.max(xi2s.xi2);
        let horizon = xi + self.audit_extension;
        let walk = two.finish(records, horizon - shift, rng)?;

        let mut points_h = Vec::new();
        let mut breaker_iter = xi2s.breakers.iter().peekable();
        for n in 1..=horizon {
            let a_n = match backward {
                None => n as f64 * mu + sigma * walk.path.sum_at(n as usize),
                Some(b) => b + (n - 1) as f64 * mu + sigma * walk.path.sum_at((n - 1) as usize),
            };
            let (lo, hi) = windows.window(n);
            let is_breaker = breaker_iter.peek() == Some(&&n);
            let v = if is_breaker {
                breaker_iter.next();
                pareto_conditional(self.beta, ParetoConstraint::Inside(lo, hi), rng)?
            } else {
                pareto_conditional(self.beta, ParetoConstraint::Outside(lo, hi), rng)?
            };
            if a_n < v && v < a_n + self.h {
                if n > xi {
                    return Err(Error::Precondition(format!(
                        "certificate failure: backward index {n} > xi {xi} departs inside the window"
                    )));
                }
                points_h.push(ArrivalPoint { index: n, arrival: -a_n, service: v });
            }
        }

        let mut points_g = Vec::new();
        let mut t = forward;
        let nominal = law.nominal();
        while t < self.h {
            let v = pareto_sample(self.beta, rng);
            if t + v < self.h {
                points_g.push(ArrivalPoint { index: 0, arrival: t, service: v });
            }
            t += mu + sigma * nominal.draw(rng);
        }

        let mut departures: Vec<f64> =
            points_h.iter().chain(points_g.iter()).map(|p| p.arrival + p.service).collect();
        departures.sort_by(f64::total_cmp);
        Ok(DepartureSet {
            departures,
            points_h,
            points_g,
            xi,
            xi1,
            xi2: xi2s.xi2,
            breakers: xi2s.breakers,
            work_units: two.work_units() + xi2s.scan_steps + horizon,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalPoint {
    /// Backward index `n` for points before 0; 0 for arrivals in `(0, h)`.
    pub index: u64,
    pub arrival: f64,
    pub service: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepartureSet {
    pub departures: Vec<f64>,
    pub points_h: Vec<ArrivalPoint>,
    pub points_g: Vec<ArrivalPoint>,
    pub xi: u64,
    pub xi1: u64,
    pub xi2: u64,
    pub breakers: Vec<u64>,
    pub work_units: u64,
}

/// One line of the departures JSON-lines output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepartureRecord {
    pub schema: String,
    pub run: u64,
    pub seed: u64,
    pub xi1: u64,
    pub xi2: u64,
    pub departures: Vec<f64>,
    pub work_units: u64,
}

pub const DEPARTURES_SCHEMA: &str = "rwmax.departures.v1";

impl DepartureSet {
    pub fn count(&self) -> usize {
        self.departures.len()
    }

    pub fn record(&self, run: u64, seed: u64) -> DepartureRecord {
        DepartureRecord {
            schema: DEPARTURES_SCHEMA.to_string(),
            run,
            seed,
            xi1: self.xi1,
            xi2: self.xi2,
            departures: self.departures.clone(),
            work_units: self.work_units,
        }
    }

    /// CSV rows `run,index,departure` for this set.
    pub fn csv_rows(&self, run: u64) -> String {
        let mut out = String::new();
        for (i, d) in self.departures.iter().enumerate() {
            out.push_str(&format!("{run},{i},{d:?}\n"));
        }
        out
    }
}

pub const DEPARTURES_CSV_HEADER: &str = "run,index,departure";
