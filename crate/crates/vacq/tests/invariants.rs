mod common;

use proptest::prelude::*;
use vacq::constraint2::{big_t, d2_membership, ConstraintSystem};
use vacq::cqcheck as cq;
use vacq::exactnum::*;
use vacq::seqlab::{trend, TrendConfig};

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn trend_verdicts_are_scale_invariant(errs in prop::collection::vec(0.0f64..10.0, 1..40), limit in 0.0f64..5.0, c in 0.001f64..1000.0) {
        let cfg = TrendConfig::default();
        let a = trend("e", &errs, limit, &cfg);
        let scaled: Vec<f64> = errs.iter().map(|e| e * c).collect();
        let b = trend("e", &scaled, limit * c, &cfg);
        prop_assert_eq!(a.satisfied, b.satisfied);
        prop_assert_eq!(a.monotone_tail, b.monotone_tail);
    }

    #[test]
    fn second_order_tangents_scale(seed in 0u64..10_000, t in 2i64..4) {
        let mut r = common::rng(seed);
        let inst = common::random_instance(&mut r, seed % 2 == 0);
        let sys: &ConstraintSystem = &inst.sys;
        let u = common::small_vec(&mut r, sys.n(), -1, 1);
        prop_assume!(!is_zero_vec(&u));
        let v = common::small_vec(&mut r, sys.m(), -1, 1);
        let here = d2_membership(sys, &u, &v).unwrap();
        let there = d2_membership(sys, &vec_scale(&u, &ri(t)), &vec_scale(&v, &ri(t * t))).unwrap();
        prop_assert_eq!(here, there);
        if here {
            prop_assert!(!big_t(sys, &u).unwrap().is_empty());
        }
    }

    #[test]
    fn verdicts_are_positively_homogeneous(seed in 0u64..10_000) {
        let mut r = common::rng(seed);
        let inst = common::random_instance(&mut r, true);
        let sys = &inst.sys;
        let u = common::small_vec(&mut r, sys.n(), -1, 1);
        prop_assume!(!is_zero_vec(&u));
        let u3 = vec_scale(&u, &ri(3));
        prop_assert_eq!(cq::foscms_u(sys, &u).unwrap().status, cq::foscms_u(sys, &u3).unwrap().status);
        prop_assert_eq!(cq::pseudo_subreg_ii(sys, &u).unwrap().status, cq::pseudo_subreg_ii(sys, &u3).unwrap().status);
    }
}
