//! Two-sided record breakers: records are broken when `|S_n|`, measured from
//! the last record, leaves `a n^alpha + b n^{1-alpha}`. Proposals tilt by
//! `+theta` or `-theta` with a fair coin and accept with the mixture
//! likelihood. Past `Xi_1 = T'_{kappa-1} + Gamma'` the walk satisfies
//! `|S_n| <= n^alpha`.

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryParams;
use crate::error::Result;
use crate::increments::IncrementLaw;
use crate::max_sampler::{Engine, RatioMonitor, Sides, WalkSegment};
use crate::rng::SimRng;

/// Records found by the detection loop, before the conditioned tail is drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedRecords {
    /// Walk up to the last record.
    pub path: WalkSegment,
    pub record_times: Vec<u64>,
    pub gamma: u64,
    pub xi1: u64,
}

impl TwoSidedRecords {
    pub fn last_record(&self) -> u64 {
        self.record_times.last().copied().unwrap_or(0)
    }

    pub fn kappa(&self) -> u64 {
        self.record_times.len() as u64 + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedOutcome {
    pub xi1: u64,
    /// Walk from time 0, length `max(xi1, horizon)`.
    pub path: WalkSegment,
    pub record_times: Vec<u64>,
    pub kappa: u64,
    pub gamma: u64,
    pub work_units: u64,
}

impl TwoSidedOutcome {
    pub fn last_record(&self) -> u64 {
        self.record_times.last().copied().unwrap_or(0)
    }

    pub fn certificate_failures(&self, params: &BoundaryParams) -> Vec<String> {
        let mut out = Vec::new();
        let path = &self.path;
        let len = path.len() as u64;
        let mut prev = 0u64;
        for &t in &self.record_times {
            let s0 = path.sum_at(prev as usize);
            for k in (prev + 1)..=t {
                let d = (path.sum_at(k as usize) - s0).abs();
                if (d > params.upper((k - prev) as f64)) != (k == t) {
                    out.push(format!("record segment ({prev}, {t}] misbehaves at {k}"));
                    break;
                }
            }
            prev = t;
        }
        let t = self.last_record();
        let st = path.sum_at(t as usize);
        if self.xi1 != t + params.gamma_of(st.abs()) {
            out.push(format!("xi1 {} != T + Gamma'", self.xi1));
        }
        for n in 1..=(len - t) {
            if (path.sum_at((t + n) as usize) - st).abs() > params.upper(n as f64) {
                out.push(format!("post-record segment breaks at offset {n}"));
                break;
            }
        }
        for k in self.xi1..=len {
            if path.sum_at(k as usize).abs() > (k as f64).powf(params.alpha) {
                out.push(format!("|S_{k}| exceeds k^alpha past xi1"));
                break;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct TwoSidedSampler {
    engine: Engine,
}

impl TwoSidedSampler {
    pub fn new(params: BoundaryParams, law: IncrementLaw) -> Self {
        TwoSidedSampler { engine: Engine::new(params, law, Sides::Two) }
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.engine.step_cap = cap;
        self
    }

    pub fn params(&self) -> &BoundaryParams {
        &self.engine.params
    }

    pub fn monitor(&self) -> &RatioMonitor {
        &self.engine.monitor
    }

    pub fn work_units(&self) -> u64 {
        self.engine.work
    }

    pub fn reset_counters(&mut self) {
        self.engine.monitor = RatioMonitor::default();
        self.engine.work = 0;
    }

    /// Two-sided record detection: `None` means no record ever.
    pub fn procedure_a_prime(&mut self, rng: &mut SimRng) -> Result<Option<WalkSegment>> {
        Ok(self.engine.detect_record(rng)?.map(|xs| WalkSegment::from_increments(0, 0.0, &xs)))
    }

    /// First `n` steps conditioned on never breaking a two-sided record.
    pub fn procedure_b_prime(&mut self, n: u64, rng: &mut SimRng) -> Result<WalkSegment> {
        Ok(WalkSegment::from_increments(0, 0.0, &self.engine.condition_no_record(n, rng)?))
    }

    /// Requires `|s| < (a/4) t^alpha`.
    pub fn bernoulli_no_future_record(&mut self, t: u64, s: f64, rng: &mut SimRng) -> Result<bool> {
        self.engine.no_future_record(t, s, rng)
    }

    /// Evaluate the mixture acceptance ratios at their suprema over
    /// reachable outcomes.
    pub fn audit_ratios(&mut self, starts: &[u64], per_block: u64) -> Result<u64> {
        self.engine.audit_ratios(starts, per_block)
    }

    /// Run record detection to completion and fix `Xi_1`.
    pub fn find_records(&mut self, rng: &mut SimRng) -> Result<TwoSidedRecords> {
        let mut path = WalkSegment::new(0, 0.0);
        let mut record_times = Vec::new();
        while let Some(xs) = self.engine.detect_record(rng)? {
            path.extend_from_slice(&xs);
            record_times.push(path.end_time());
        }
        let gamma = self.engine.params.gamma_of(path.end_sum().abs());
        let xi1 = path.end_time().saturating_add(gamma);
        Ok(TwoSidedRecords { path, record_times, gamma, xi1 })
    }

    /// Draw the conditioned post-record walk out to absolute index
    /// `max(xi1, horizon)`.
    pub fn finish(&mut self, records: TwoSidedRecords, horizon: u64, rng: &mut SimRng) -> Result<TwoSidedOutcome> {
        let TwoSidedRecords { mut path, record_times, gamma, xi1 } = records;
        let n = xi1.max(horizon) - path.end_time();
        let tail = self.engine.condition_no_record(n, rng)?;
        path.extend_from_slice(&tail);
        Ok(TwoSidedOutcome {
            xi1,
            path,
            kappa: record_times.len() as u64 + 1,
            record_times,
            gamma,
            work_units: 0,
        })
    }

    /// Records, `Xi_1` and the conditioned walk out to `max(xi1, horizon)`.
    pub fn sample(&mut self, rng: &mut SimRng, horizon: u64) -> Result<TwoSidedOutcome> {
        let work0 = self.engine.work;
        let records = self.find_records(rng)?;
        let mut out = self.finish(records, horizon, rng)?;
        out.work_units = self.engine.work - work0;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler() -> TwoSidedSampler {
        let law = IncrementLaw::StandardNormal;
        TwoSidedSampler::new(BoundaryParams::new(&law, 0.9, 0.4).unwrap(), law)
    }

    #[test]
    fn outcomes_certify() {
        let mut s = sampler();
        let p = *s.params();
        for seed in 0..30 {
            let out = s.sample(&mut SimRng::seed_from(seed), 0).unwrap();
            assert!(out.certificate_failures(&p).is_empty(), "{:?}", out.certificate_failures(&p));
            assert_eq!(out.path.len() as u64, out.xi1);
        }
        assert_eq!(s.monitor().violations(), 0);
    }

    #[test]
    fn horizon_extends_path() {
        let mut s = sampler();
        let p = *s.params();
        let out = s.sample(&mut SimRng::seed_from(4), 5000).unwrap();
        assert_eq!(out.path.len(), 5000.max(out.xi1 as usize));
        assert!(out.certificate_failures(&p).is_empty());
    }

    #[test]
    fn kappa_one_gamma() {
        let p = *sampler().params();
        assert_eq!(p.gamma_of(0.0), ((2.0 * p.xi).powf(1.0 / p.alpha)).ceil() as u64);
    }

    #[test]
    fn audit_mixture_bound() {
        let mut s = sampler();
        let n = s.audit_ratios(&[1, 500, 100_000], 16).unwrap();
        assert!(n > 1000);
        assert_eq!(s.monitor().violations(), 0);
    }

    #[test]
    fn determinism() {
        let mut s = sampler();
        let a = s.sample(&mut SimRng::seed_from(8), 0).unwrap();
        let b = s.sample(&mut SimRng::seed_from(8), 0).unwrap();
        assert_eq!(a, b);
    }
}
