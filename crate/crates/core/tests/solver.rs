mod common;

use qadc_core::analysis::{evaluate, ratio_report, snr_for_rate, RateSolution, Scheme, RATE_WINDOW_DB};
use qadc_core::design::{scale_quantizer, three_bit_optimize, two_bit_sweep, SymmetricQuantizer3Bit};
use qadc_core::solver::{capacity, constrained_fixed_point, one_bit_capacity, support_bound};
use qadc_core::{ChannelParams, Error, QuantizerSpec, SolverOptions};

#[test]
fn rejects_degenerate_inputs() {
    let o = SolverOptions::default();
    let p = ChannelParams::unit_noise(0.0);
    let q = QuantizerSpec::new(vec![0.0, 1e-14]).unwrap();
    assert_eq!(capacity(&p, &q, &o), Err(Error::DegenerateQuantizer));
    let zero = ChannelParams::new(0.0, 1.0).unwrap();
    assert!(capacity(&zero, &QuantizerSpec::one_bit(), &o).is_err());
    let bad = SolverOptions { grid_step: -1.0, ..SolverOptions::default() };
    assert!(matches!(capacity(&p, &QuantizerSpec::one_bit(), &bad), Err(Error::InvalidOptions(_))));
    assert!(ChannelParams::new(1.0, 0.0).is_err());
    assert!(ChannelParams::new(f64::NAN, 1.0).is_err());
}

#[test]
fn cutting_plane_recovers_one_bit_closed_form() {
    let o = SolverOptions::default();
    for db in [-10.0, 0.0, 10.0] {
        let p = ChannelParams::unit_noise(db);
        let r = capacity(&p, &QuantizerSpec::one_bit(), &o).unwrap();
        assert!(r.converged);
        assert!((r.capacity - common::bsc_capacity(db)).abs() < 1e-6);
        // Antipodal signalling.
        let pts = r.distribution.points();
        assert_eq!(pts.len(), 2);
        assert!((pts[1] + pts[0]).abs() < 1e-4 && (pts[1] - p.power().sqrt()).abs() < 1e-3);
        let closed = one_bit_capacity(&p);
        assert!((r.gamma - closed.gamma).abs() < 1e-3 * closed.gamma.max(1.0));
    }
}

#[test]
fn fixed_point_respects_multiplier() {
    let p = ChannelParams::unit_noise(5.0);
    let q = QuantizerSpec::new(vec![-1.0, 0.0, 1.0]).unwrap();
    let pts = [-4.0, -1.5, 0.0, 1.5, 4.0];
    let o = SolverOptions::default();
    let (free, ok) = constrained_fixed_point(&pts, &p, &q, 0.0, &o).unwrap();
    assert!(ok);
    let (priced, ok) = constrained_fixed_point(&pts, &p, &q, 0.5, &o).unwrap();
    assert!(ok);
    assert!(priced.avg_power() < free.avg_power());
    assert!(constrained_fixed_point(&pts, &p, &q, -1.0, &o).is_err());
    assert!(constrained_fixed_point(&[1.0, 0.0], &p, &q, 0.0, &o).is_err());
}

#[test]
fn support_lies_inside_its_bound() {
    let o = SolverOptions::default();
    for (db, t) in [(0.0, vec![-0.8, 0.0, 0.8]), (10.0, vec![-2.0, 0.0, 2.0]), (15.0, vec![-1.0, 3.0])] {
        let p = ChannelParams::unit_noise(db);
        let q = QuantizerSpec::new(t).unwrap();
        let r = capacity(&p, &q, &o).unwrap();
        let b = support_bound(&r.distribution, &p, &q, r.gamma).unwrap();
        for x in r.distribution.points() {
            assert!(*x >= b.lower - 1e-9 && *x <= b.upper + 1e-9, "{x} outside [{}, {}]", b.lower, b.upper);
        }
    }
}

#[test]
fn capacity_grows_with_snr() {
    let o = SolverOptions::default();
    let q = QuantizerSpec::new(vec![-1.0, 0.0, 1.0]).unwrap();
    let c: Vec<f64> =
        [-5.0, 0.0, 5.0, 10.0].iter().map(|&db| capacity(&ChannelParams::unit_noise(db), &q, &o).unwrap().capacity).collect();
    assert!(c.windows(2).all(|w| w[0] < w[1]), "{c:?}");
}

#[test]
fn scale_invariance_spot_check() {
    let o = SolverOptions::default();
    let p = ChannelParams::unit_noise(7.0);
    let q = QuantizerSpec::new(vec![-1.3, 0.2, 2.0]).unwrap();
    let base = capacity(&p, &q, &o).unwrap().capacity;
    for r in [0.25, 4.0] {
        let c = capacity(&p.scaled(r).unwrap(), &scale_quantizer(&q, r).unwrap(), &o).unwrap().capacity;
        assert!((c - base).abs() < 2e-4);
    }
}

#[test]
fn two_bit_sweep_curve_and_maximiser() {
    let o = SolverOptions::default();
    let p = ChannelParams::unit_noise(0.0);
    let grid: Vec<f64> = (1..=30).map(|i| 0.1 * i as f64).collect();
    let s = two_bit_sweep(&p, &grid, &o).unwrap();
    assert_eq!(s.curve.len(), grid.len());
    let best = s.curve.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best, s.best.capacity);
    assert!(s.curve.iter().any(|r| r.params == vec![s.best_q]));
    assert!(two_bit_sweep(&p, &[], &o).is_err());
    assert!(two_bit_sweep(&p, &[-1.0], &o).is_err());
}

#[test]
fn three_bit_design_is_ordered_and_beats_benchmark() {
    let o = SolverOptions::default();
    let p = ChannelParams::unit_noise(5.0);
    let d = three_bit_optimize(&p, &o).unwrap();
    let [a, b, c] = d.quantizer.levels();
    assert!(0.0 < a && a < b && b < c);
    assert!(d.result.capacity >= d.initial_capacity - 1e-9);
    let bench = evaluate(Scheme::ThreeBitBench, &p, &o).unwrap().value;
    assert!(d.result.capacity > bench);
    assert!(SymmetricQuantizer3Bit::new(1.0, 0.5, 2.0).is_err());
}

#[test]
fn rate_inversion_round_trips() {
    let o = SolverOptions::default();
    for (scheme, rate) in [(Scheme::Unquantized, 0.5), (Scheme::Unquantized, 1.73), (Scheme::OneBitOpt, 0.25)] {
        let RateSolution::Snr(db) = snr_for_rate(scheme, rate, RATE_WINDOW_DB, &o).unwrap() else {
            panic!("{scheme} should reach {rate}");
        };
        let back = evaluate(scheme, &ChannelParams::unit_noise(db), &o).unwrap().value;
        assert!((back - rate).abs() < 0.005, "{scheme}: {back} at {db} dB");
    }
    assert_eq!(snr_for_rate(Scheme::OneBitOpt, 1.0, RATE_WINDOW_DB, &o), Ok(RateSolution::Infeasible));
    assert_eq!(snr_for_rate(Scheme::TwoBitOpt, 2.5, RATE_WINDOW_DB, &o), Ok(RateSolution::Infeasible));
    assert!(snr_for_rate(Scheme::Unquantized, -1.0, RATE_WINDOW_DB, &o).is_err());
    // Outside even the widened window.
    assert_eq!(snr_for_rate(Scheme::Unquantized, 20.0, RATE_WINDOW_DB, &o), Err(Error::RateOutOfWindow));
}

#[test]
fn ratios_are_fractions_and_match_the_discussion() {
    let o = SolverOptions::default();
    let at = |db: f64, s: Scheme| ratio_report(db, &o).unwrap().into_iter().find(|r| r.0 == s).unwrap().1;
    for (_, v) in ratio_report(10.0, &o).unwrap() {
        assert!(v > 0.0 && v <= 1.0);
    }
    assert!((at(-5.0, Scheme::TwoBitOpt) - 0.90).abs() < 0.01);
    assert!((at(10.0, Scheme::TwoBitOpt) - 0.85).abs() < 0.01);
    assert!((at(20.0, Scheme::ThreeBitOpt) - 0.85).abs() < 0.02);
}
