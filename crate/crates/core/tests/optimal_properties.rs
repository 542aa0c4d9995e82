use proptest::prelude::*;

use sensoralloc::optimal::{
    asymptotes, blend_optimal_set, expected_speed, integral_invariant, integral_optimal_s, integral_optimal_set,
    local_optimal_s, local_optimal_set, log_samples, orthogonality_residual,
};
use sensoralloc::uncertainty::global_minimum;
use sensoralloc::{SpeedPrior, UncertaintyWeights};

fn weights() -> impl Strategy<Value = UncertaintyWeights> {
    prop::array::uniform4(0.1f64..10.0).prop_map(|[a, b, c, d]| UncertaintyWeights::new(a, b, c, d).unwrap())
}

/// Plain bisection for the root of an increasing function, independent of
/// the library's solver.
fn oracle_root(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (1e-9f64, 1e9f64);
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo * hi).sqrt()
}

proptest! {
    #[test]
    fn local_closed_form_matches_bisection(w in weights(), lt in -3.0f64..3.0) {
        let t = lt.exp();
        let gt = w.t_loc - w.t_freq / (t * t);
        let oracle = oracle_root(|s| (w.s_loc * s - w.s_freq / s) / t + gt);
        let s = local_optimal_s(t, &w);
        prop_assert!((s - oracle).abs() <= 1e-9 * oracle, "{s} vs {oracle}");
    }

    #[test]
    fn integral_closed_form_matches_bisection(w in weights(), lt in -3.0f64..3.0, lv in -2.0f64..2.0) {
        let (t, v_e) = (lt.exp(), lv.exp());
        let (t_min, _) = asymptotes(&w, v_e).unwrap();
        prop_assume!(t > t_min * 1.001);
        let gt = w.t_loc - w.t_freq / (t * t);
        let oracle = oracle_root(|s| (w.s_loc - w.s_freq / (s * s)) * v_e + gt);
        let s = integral_optimal_s(t, v_e, &w).unwrap();
        prop_assert!((s - oracle).abs() <= 1e-9 * oracle, "{s} vs {oracle}");
    }

    #[test]
    fn integral_set_conserves_its_invariant(w in weights(), lv in -2.0f64..2.0) {
        let v_e = lv.exp();
        let c = integral_optimal_set(&w, v_e, &log_samples(0.01, 100.0, 256)).unwrap();
        let q: Vec<f64> = c.points.iter().map(|&(t, s)| integral_invariant(t, s, v_e, &w)).collect();
        let (lo, hi) = q.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        prop_assert!((hi - lo) / hi < 1e-10);
    }

    #[test]
    fn both_sets_pass_through_the_minimum(w in weights(), lv in -2.0f64..2.0) {
        let m = global_minimum(&w);
        prop_assert!(orthogonality_residual(m.t, m.s, m.s / m.t, &w).unwrap().abs() < 1e-12);
        prop_assert!(orthogonality_residual(m.t, m.s, lv.exp(), &w).unwrap().abs() < 1e-12);
        let s = local_optimal_s(m.t, &w);
        prop_assert!((s - m.s).abs() <= 1e-12 * m.s);
    }

    #[test]
    fn blend_interpolates_between_the_pure_sets(w in weights(), lv in -1.0f64..1.0) {
        let v_e = lv.exp();
        let (t_min, _) = asymptotes(&w, v_e).unwrap();
        let ts = log_samples(t_min * 1.01, t_min * 100.0, 32);
        let local = local_optimal_set(&w, &ts).unwrap();
        let integral = integral_optimal_set(&w, v_e, &ts).unwrap();
        let b0 = blend_optimal_set(&w, v_e, 0.0, &ts).unwrap();
        let b1 = blend_optimal_set(&w, v_e, 1.0, &ts).unwrap();
        for (p, q) in b0.points.iter().zip(&local.points) {
            prop_assert!((p.1 - q.1).abs() <= 1e-8 * q.1);
        }
        for (p, q) in b1.points.iter().zip(&integral.points) {
            prop_assert!((p.1 - q.1).abs() <= 1e-8 * q.1);
        }
    }
}

#[test]
fn local_and_integral_sets_differ_away_from_the_minimum() {
    let w = UncertaintyWeights::default();
    let ts = [0.9, 2.0, 5.0, 20.0];
    for v_e in [0.5, 1.0, 2.0] {
        for &t in &ts {
            let a = local_optimal_s(t, &w);
            let b = integral_optimal_s(t, v_e, &w).unwrap();
            assert!((a - b).abs() > 1e-3 * a, "v_e={v_e} t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn prior_shift_moves_the_asymptotes_monotonically() {
    let w = UncertaintyWeights::default();
    let asym: Vec<(f64, f64)> = [0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&v| asymptotes(&w, v).unwrap())
        .collect();
    for p in asym.windows(2) {
        assert!(p[1].0 < p[0].0 && p[1].1 > p[0].1, "{asym:?}");
    }
}

#[test]
fn expected_speed_of_priors() {
    assert_eq!(expected_speed(&SpeedPrior::Delta { v0: 2.5 }).unwrap(), 2.5);
    let ln = expected_speed(&SpeedPrior::LogNormal {
        mu: 0.3,
        sigma_log: 0.4,
    })
    .unwrap();
    assert!((ln - (0.3f64 + 0.08).exp()).abs() < 1e-9, "{ln}");
    let h = expected_speed(&SpeedPrior::Histogram {
        bins: vec![(1.0, 1.0), (3.0, 3.0)],
    })
    .unwrap();
    assert!((h - 2.5).abs() < 1e-12);
}
