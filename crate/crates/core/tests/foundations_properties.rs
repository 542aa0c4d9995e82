use proptest::prelude::*;

use sensoralloc::foundations::{
    discrete_entropy, independence_bound, independence_sweep, max_entropy_check, random_joint, DiscreteJoint,
    ZERO_SLACK,
};
use sensoralloc::optimal::log_samples;

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("all zero", |v| {
        let total: f64 = v.iter().sum();
        (total > 1e-9).then(|| v.iter().map(|x| x / total).collect())
    })
}

proptest! {
    #[test]
    fn entropy_is_bounded_by_log_cardinality(p in (1usize..40).prop_flat_map(distribution)) {
        let h = discrete_entropy(&p).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn joint_entropy_is_subadditive(seed in any::<u64>(), n in 2usize..6, m in 2usize..6) {
        let r = independence_bound(&random_joint(n, m, seed, 0).unwrap());
        prop_assert!(r.slack >= 0.0);
        prop_assert!(r.h_joint <= r.h_x + r.h_f);
    }

    #[test]
    fn products_have_zero_slack(px in distribution(3), pf in distribution(5)) {
        let r = independence_bound(&DiscreteJoint::product(&px, &pf).unwrap());
        prop_assert!(r.slack.abs() < ZERO_SLACK);
    }
}

#[test]
fn slack_sweep_over_seeded_joints() {
    for (n, seed) in [(2, 1), (4, 2), (8, 3)] {
        let s = independence_sweep(250, n, n, seed).unwrap();
        assert!(s.min_slack > 0.0, "{s:?}");
        assert_eq!(s.dependent_at_zero, 0);
        assert!(s.product_max_slack < ZERO_SLACK);
    }
}

#[test]
fn gaussian_has_maximal_entropy_across_scales() {
    for sigma in log_samples(0.01, 100.0, 20) {
        let r = max_entropy_check(sigma).unwrap();
        assert!(r.gaussian_is_largest(), "{r:?}");
        assert!(r.max_quadrature_error() < 1e-6, "{r:?}");
    }
}
