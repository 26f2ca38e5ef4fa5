use proptest::collection::vec;
use proptest::prelude::*;
use qadc_core::channel::{divergence, mutual_information, output_pmf, transition_row};
use qadc_core::design::scale_quantizer;
use qadc_core::solver::{capacity, kkt_certificate, support_bound};
use qadc_core::{ChannelParams, InputDistribution, QuantizerSpec, SolverOptions, TransitionMatrix};

fn thresholds(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-6.0f64..6.0, 1..=max_len).prop_filter_map("needs distinct thresholds", |mut t| {
        t.sort_by(f64::total_cmp);
        t.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        Some(t)
    })
}

fn input(max_len: usize) -> impl Strategy<Value = InputDistribution> {
    vec((-8.0f64..8.0, 0.01f64..1.0), 1..=max_len).prop_filter_map("needs distinct points", |mut pw| {
        pw.sort_by(|a, b| a.0.total_cmp(&b.0));
        pw.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-6);
        let total: f64 = pw.iter().map(|p| p.1).sum();
        let (x, p): (Vec<f64>, Vec<f64>) = pw.into_iter().map(|(x, w)| (x, w / total)).unzip();
        InputDistribution::new(x, p).ok()
    })
}

proptest! {
    #[test]
    fn rows_are_distributions(t in thresholds(7), x in -20.0f64..20.0, sigma in 0.05f64..5.0) {
        let q = QuantizerSpec::new(t).unwrap();
        let w = transition_row(x, &q, sigma);
        prop_assert_eq!(w.len(), q.bins());
        prop_assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn output_pmf_sums_to_one(t in thresholds(7), f in input(6), sigma in 0.05f64..5.0) {
        let q = QuantizerSpec::new(t).unwrap();
        let w = TransitionMatrix::new(f.points(), &q, sigma);
        let r = output_pmf(&f, &w).unwrap();
        prop_assert!((r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn information_is_bounded(t in thresholds(7), f in input(6), sigma in 0.05f64..5.0) {
        let q = QuantizerSpec::new(t).unwrap();
        let i = mutual_information(&f, &q, sigma);
        let k = q.bins() as f64;
        prop_assert!(i >= 0.0);
        prop_assert!(i <= f.entropy().min(k.log2()) + 1e-12, "I={} H={}", i, f.entropy());
    }

    #[test]
    fn negation_invariance(t in thresholds(7), f in input(6), sigma in 0.05f64..5.0) {
        let q = QuantizerSpec::new(t.clone()).unwrap();
        let neg: Vec<f64> = t.iter().rev().map(|v| -v).collect();
        let qn = QuantizerSpec::new(neg).unwrap();
        let a = mutual_information(&f, &q, sigma);
        let b = mutual_information(&f.negated(), &qn, sigma);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn divergence_is_nonnegative(t in thresholds(5), f in input(5), x in -10.0f64..10.0, sigma in 0.1f64..3.0) {
        let q = QuantizerSpec::new(t).unwrap();
        prop_assert!(divergence(x, &f, &q, sigma) >= -1e-12);
    }

    #[test]
    fn divergence_averages_to_information(t in thresholds(5), f in input(5), sigma in 0.1f64..3.0) {
        let q = QuantizerSpec::new(t).unwrap();
        let avg: f64 = f.points().iter().zip(f.probs()).map(|(x, p)| p * divergence(*x, &f, &q, sigma)).sum();
        prop_assert!((avg - mutual_information(&f, &q, sigma)).abs() < 1e-10);
    }

    #[test]
    fn information_is_scale_invariant(t in thresholds(5), f in input(5), sigma in 0.1f64..3.0, r in 0.01f64..100.0) {
        let q = QuantizerSpec::new(t).unwrap();
        let s = r.sqrt();
        let scaled = InputDistribution::new(f.points().iter().map(|x| x * s).collect(), f.probs().to_vec()).unwrap();
        let a = mutual_information(&f, &q, sigma);
        let b = mutual_information(&scaled, &scale_quantizer(&q, r).unwrap(), sigma * s);
        prop_assert!((a - b).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn capacity_is_certified_and_dominates_feasible_inputs(
        t in thresholds(5),
        snr_db in -15.0f64..25.0,
    ) {
        let params = ChannelParams::unit_noise(snr_db);
        let q = QuantizerSpec::new(t.iter().map(|v| v * params.power().sqrt() / 2.0).collect()).unwrap();
        let opts = SolverOptions::default();
        let r = capacity(&params, &q, &opts).unwrap();
        prop_assert!(r.converged, "{:?}", r);
        prop_assert!(r.capacity <= (q.bins() as f64).log2() + 1e-12);
        prop_assert!(r.power_used <= params.power() * (1.0 + 1e-8));
        prop_assert!(r.distribution.len() <= q.bins() + 1);

        // Any feasible input does no better.
        let a = params.power().sqrt();
        for f in [
            InputDistribution::new(vec![-a, a], vec![0.5, 0.5]).unwrap(),
            InputDistribution::new(vec![-2.0 * a, 0.0, 2.0 * a], vec![0.125, 0.75, 0.125]).unwrap(),
            InputDistribution::point_mass(0.0),
        ] {
            prop_assert!(mutual_information(&f, &q, 1.0) <= r.capacity + 1e-6);
        }

        let bound = support_bound(&r.distribution, &params, &q, r.gamma).unwrap();
        let lo = bound.lower.min(r.distribution.points()[0]);
        let hi = bound.upper.max(*r.distribution.points().last().unwrap());
        let n = ((hi - lo) / 0.01).ceil() as usize;
        let grid: Vec<f64> = (0..=n).map(|i| lo + i as f64 * 0.01).collect();
        let cert = kkt_certificate(&r, &params, &q, &grid);
        prop_assert!(cert.max_slack <= 1e-6, "{:?}", cert);
        prop_assert!(cert.support_residual <= 1e-5, "{:?}", cert);
    }
}
