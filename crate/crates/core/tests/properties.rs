use proptest::prelude::*;
use rwmax::harness::stats::{chi_square_gof_poisson, ks_two_sample};
use rwmax::harness::{parse_kv, SimConfig};
use rwmax::queue::{pareto_conditional, pareto_window_prob, ParetoConstraint, ServiceWindows};
use rwmax::{BoundaryParams, IncrementLaw, SimRng, WalkSegment};

fn params() -> impl Strategy<Value = (f64, f64)> {
    (0.55f64..0.97, 0.05f64..0.49)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segment_prefix_sums_match_running_sum(base in -5.0f64..5.0, xs in prop::collection::vec(-3.0f64..3.0, 0..60), ys in prop::collection::vec(-3.0f64..3.0, 0..60)) {
        let mut seg = WalkSegment::new(3, base);
        seg.extend_from_slice(&xs);
        for &y in &ys {
            seg.push(y);
        }
        let mut s = base;
        for (i, x) in xs.iter().chain(ys.iter()).enumerate() {
            s += x;
            prop_assert!((seg.sum_at(i + 1) - s).abs() < 1e-9);
        }
        prop_assert_eq!(seg.len(), xs.len() + ys.len());
        prop_assert_eq!(seg.end_time(), 3 + seg.len() as u64);
    }

    #[test]
    fn boundary_is_increasing_and_gamma_monotone((alpha, a) in params(), s1 in 0.0f64..1e4, ds in 0.0f64..1e4) {
        let p = BoundaryParams::new(&IncrementLaw::StandardNormal, alpha, a).unwrap();
        prop_assert!(p.gamma_of(s1) <= p.gamma_of(s1 + ds));
        for k in 1..200u64 {
            prop_assert!(p.upper((k + 1) as f64) > p.upper(k as f64));
            prop_assert!(p.lower_band(k as f64) < p.upper(k as f64));
        }
        for n in 0..40 {
            prop_assert!(p.theta_n(n) < p.delta_prime);
        }
    }

    #[test]
    fn no_record_tilts_stay_in_radius((alpha, a) in params(), t in 0.0f64..1e7) {
        let p = BoundaryParams::new(&IncrementLaw::CenteredExponential, alpha, a.min(0.45)).unwrap();
        let sw = p.no_record_switch(t);
        for n in 0..64 {
            prop_assert!(p.no_record_tilt(n, t, sw) < p.delta_prime);
        }
    }

    #[test]
    fn pmf_sampling_stays_in_support((alpha, a) in params(), t in 0.0f64..1e5, seed in any::<u64>()) {
        let p = BoundaryParams::new(&IncrementLaw::StandardNormal, alpha, a).unwrap();
        let mut pmf = p.no_record_proposal(t);
        let mut rng = SimRng::seed_from(seed);
        for _ in 0..50 {
            let n = pmf.sample(&mut rng);
            prop_assert!(pmf.prob(n) > 0.0);
        }
        prop_assert!((pmf.total_mass() - 1.0).abs() < 1e-12);
        let (lo, hi) = pmf.log_z_bounds();
        prop_assert!(lo <= hi);
    }

    #[test]
    fn pareto_conditional_respects_window(beta in 0.55f64..0.99, lo in 0.0f64..1e6, w in 0.5f64..1e4, seed in any::<u64>()) {
        let hi = lo + w;
        let mut rng = SimRng::seed_from(seed);
        if pareto_window_prob(beta, lo, hi) > 0.0 {
            let v = pareto_conditional(beta, ParetoConstraint::Inside(lo, hi), &mut rng).unwrap();
            prop_assert!(v > lo && v < hi && v >= 1.0);
        }
        let v = pareto_conditional(beta, ParetoConstraint::Outside(lo, hi), &mut rng).unwrap();
        prop_assert!(v >= 1.0 && (v <= lo || v >= hi));
    }

    #[test]
    fn breaker_bounds_sandwich(alpha in 0.55f64..0.7, gap in 0.05f64..0.3, mu in 0.5f64..3.0, h in 0.1f64..3.0) {
        let beta = (alpha + gap).min(0.99);
        let w = ServiceWindows::new(mu, 1.0, 0.0, alpha, beta, h);
        let b = w.bounds(0, w.k_star + 200);
        for i in 1..b.u.len() {
            prop_assert!(b.u[i] <= b.u[i - 1]);
            prop_assert!(b.l[i] >= b.l[i - 1]);
            prop_assert!(b.l[i] <= b.u[i]);
        }
    }

    #[test]
    fn gof_outputs_are_probabilities(counts in prop::collection::vec(0u64..6, 30..200)) {
        if let Ok(t) = chi_square_gof_poisson(&counts, 1.0) {
            prop_assert!(t.statistic >= 0.0);
            prop_assert!((0.0..=1.0).contains(&t.p_value));
        }
    }

    #[test]
    fn ks_is_symmetric(a in prop::collection::vec(-10.0f64..10.0, 1..80), b in prop::collection::vec(-10.0f64..10.0, 1..80)) {
        let x = ks_two_sample(&a, &b).unwrap();
        let y = ks_two_sample(&b, &a).unwrap();
        prop_assert_eq!(x.statistic, y.statistic);
        prop_assert!((0.0..=1.0).contains(&x.statistic));
        prop_assert!((0.0..=1.0).contains(&x.p_value));
    }

    #[test]
    fn config_round_trips(alpha in 0.51f64..0.99, a in 0.01f64..0.49, cap in 1u64..u64::MAX, paths in any::<bool>()) {
        let c = SimConfig { alpha, a, path_cap: cap, emit_paths: paths, ..SimConfig::default() };
        let mut back = SimConfig::default();
        for (k, v) in parse_kv(&c.to_kv()).unwrap() {
            back.set(&k, &v).unwrap();
        }
        prop_assert_eq!(back, c);
    }
}
