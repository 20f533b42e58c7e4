use std::sync::Arc;

use rwmax::increments::TiltedLaw;
use rwmax::{BoundaryParams, Error, IncrementLaw, MaxSampler, SimRng, TwoSidedSampler};

fn sampler(law: IncrementLaw, alpha: f64, a: f64) -> MaxSampler {
    MaxSampler::new(BoundaryParams::new(&law, alpha, a).unwrap(), law)
}

#[test]
fn samples_certify_across_the_grid() {
    for law in [IncrementLaw::CenteredExponential, IncrementLaw::StandardNormal] {
        for (alpha, a) in [(0.8, 0.45), (0.9, 0.1), (0.95, 0.3)] {
            let mut s = sampler(law.clone(), alpha, a);
            let p = *s.params();
            for seed in 0..20 {
                let m = s.sample(&mut SimRng::stream(seed, 0)).unwrap();
                assert!(m.certificate_failures(&p).is_empty(), "{:?}", m.certificate_failures(&p));
                assert!(m.work_units >= m.path.len() as u64);
            }
        }
    }
}

#[test]
fn conditioned_path_stays_below_boundary() {
    let mut s = sampler(IncrementLaw::StandardNormal, 0.9, 0.4);
    let p = *s.params();
    let seg = s.procedure_b(2000, &mut SimRng::seed_from(2)).unwrap();
    for k in 1..=2000 {
        assert!(seg.sum_at(k) <= p.upper(k as f64));
    }
}

#[test]
fn bernoulli_requires_safe_band() {
    let mut s = sampler(IncrementLaw::CenteredExponential, 0.9, 0.4);
    let err = s.bernoulli_no_future_record(100, 1e6, &mut SimRng::seed_from(1)).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
    // Deep inside the band, a future record is very unlikely.
    let mut rng = SimRng::seed_from(3);
    let yes = (0..200).filter(|_| s.bernoulli_no_future_record(1_000_000, -100.0, &mut rng).unwrap()).count();
    assert!(yes >= 190);
}

#[test]
fn step_cap_is_an_error_not_a_truncation() {
    let mut s = sampler(IncrementLaw::CenteredExponential, 0.9, 0.4).with_step_cap(50);
    let mut capped = 0;
    for seed in 0..50 {
        match s.sample(&mut SimRng::seed_from(seed)) {
            Ok(m) => assert!(m.path.len() <= 50),
            Err(e) => {
                assert!(e.is_path_cap());
                capped += 1;
            }
        }
    }
    assert!(capped > 0);
}

#[test]
fn two_sided_horizon_and_determinism() {
    let law = IncrementLaw::CenteredExponential;
    let p = BoundaryParams::new(&law, 0.85, 0.4).unwrap();
    let mut s = TwoSidedSampler::new(p, law);
    let a = s.sample(&mut SimRng::seed_from(9), 10_000).unwrap();
    let b = s.sample(&mut SimRng::seed_from(9), 10_000).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.path.len() as u64, a.xi1.max(10_000));
    assert!(a.certificate_failures(&p).is_empty());
}

/// A symmetric two-point law, `psi(theta) = ln cosh theta <= theta^2 / 2`.
#[derive(Debug)]
struct Rademacher;

impl TiltedLaw for Rademacher {
    fn name(&self) -> &str {
        "rademacher"
    }

    fn psi(&self, theta: f64) -> f64 {
        theta.cosh().ln()
    }

    fn psi_domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn sample_tilted(&self, theta: f64, rng: &mut SimRng) -> f64 {
        let p_up = theta.exp() / (2.0 * theta.cosh());
        if rng.uniform() < p_up {
            1.0
        } else {
            -1.0
        }
    }
}

#[test]
fn custom_law_drives_the_sampler() {
    let law = IncrementLaw::custom(Arc::new(Rademacher), 2.0).unwrap();
    let mut s = sampler(law, 0.9, 0.4);
    let p = *s.params();
    for seed in 0..10 {
        let m = s.sample(&mut SimRng::seed_from(seed)).unwrap();
        assert!(m.certificate_failures(&p).is_empty());
        assert!(m.path.increments.iter().all(|&x| x == 1.0 || x == -1.0));
    }
}
