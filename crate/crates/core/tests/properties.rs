use std::sync::Arc;

use proptest::prelude::*;

use hubspoke_core::geometry::{LatticeSpace, LinearConstraint};
use hubspoke_core::laws::{random_map, random_relation, random_space, suite_rng};
use hubspoke_core::relations::{compose_vertical, dagger, intersect, Relation};
use hubspoke_core::stochastic::{compose_radius, RadiusMode};
use hubspoke_core::transport::{companion_identity_holds, pullback, pullback_preserves_meets, pushforward};

fn cap_text(i: usize, k: u32, n: u32) -> String {
    format!("x{}<={}/{}", i + 1, k, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn restriction_is_monotone_and_idempotent(n in 1usize..=2, big_n in 2u32..=10, i in 0usize..3, k in 0u32..=10, j in 0usize..3, l in 0u32..=10) {
        let (i, j) = (i % (n + 1), j % (n + 1));
        let base = LatticeSpace::enumerate_simplex(n, big_n).unwrap();
        let c1 = LinearConstraint::parse(&cap_text(i, k.min(big_n), big_n), n + 1).unwrap();
        let c2 = LinearConstraint::parse(&cap_text(j, l.min(big_n), big_n), n + 1).unwrap();
        let once = base.restrict(std::slice::from_ref(&c1)).unwrap();
        let twice = once.restrict(std::slice::from_ref(&c1)).unwrap();
        prop_assert_eq!(once.points(), twice.points());
        let both = once.restrict(&[c2]).unwrap();
        prop_assert!(both.len() <= once.len() && once.len() <= base.len());
        prop_assert!(both.points().iter().all(|p| once.index_of_grid(p).is_some()));
    }

    #[test]
    fn composition_is_associative_with_unit_diagonals(seed in any::<u64>()) {
        let mut rng = suite_rng(seed);
        let n = 5;
        let spaces: Vec<Arc<LatticeSpace>> = (0..4).map(|_| random_space(&mut rng, 3, n).unwrap()).collect();
        let r = random_relation(&mut rng, &spaces[0], &spaces[1]).unwrap();
        let s = random_relation(&mut rng, &spaces[1], &spaces[2]).unwrap();
        let t = random_relation(&mut rng, &spaces[2], &spaces[3]).unwrap();
        let left = compose_vertical(&t, &compose_vertical(&s, &r).unwrap()).unwrap();
        let right = compose_vertical(&compose_vertical(&t, &s).unwrap(), &r).unwrap();
        prop_assert_eq!(left.pairs(), right.pairs());
        let unit = compose_vertical(&Relation::diagonal(spaces[1].clone()), &r).unwrap();
        prop_assert_eq!(unit.pairs(), r.pairs());
    }

    #[test]
    fn dagger_is_an_involution_reversing_composition(seed in any::<u64>()) {
        let mut rng = suite_rng(seed);
        let a = random_space(&mut rng, 2, 8).unwrap();
        let b = random_space(&mut rng, 3, 8).unwrap();
        let c = random_space(&mut rng, 2, 8).unwrap();
        let r = random_relation(&mut rng, &a, &b).unwrap();
        let s = random_relation(&mut rng, &b, &c).unwrap();
        let twice = dagger(&dagger(&r));
        prop_assert_eq!(twice.pairs(), r.pairs());
        let sr = dagger(&compose_vertical(&s, &r).unwrap());
        let rs = compose_vertical(&dagger(&r), &dagger(&s)).unwrap();
        prop_assert_eq!(sr.pairs(), rs.pairs());
    }

    #[test]
    fn pushforward_is_composition_with_the_reversed_graph(seed in any::<u64>()) {
        let mut rng = suite_rng(seed);
        let a = random_space(&mut rng, 3, 6).unwrap();
        let b = random_space(&mut rng, 2, 6).unwrap();
        let z = random_space(&mut rng, 2, 6).unwrap();
        let f = random_map(&mut rng, &a, &b).unwrap();
        let r = random_relation(&mut rng, &a, &z).unwrap();
        prop_assert!(companion_identity_holds(&f, &r).unwrap());
    }

    #[test]
    fn pullback_preserves_intersections(seed in any::<u64>()) {
        let mut rng = suite_rng(seed);
        let a = random_space(&mut rng, 3, 7).unwrap();
        let b = random_space(&mut rng, 3, 7).unwrap();
        let z = random_space(&mut rng, 2, 7).unwrap();
        let f = random_map(&mut rng, &a, &b).unwrap();
        let s = random_relation(&mut rng, &b, &z).unwrap();
        let s2 = random_relation(&mut rng, &b, &z).unwrap();
        prop_assert!(pullback_preserves_meets(&f, &s, &s2).unwrap());
    }

    #[test]
    fn transports_are_isotone(seed in any::<u64>()) {
        let mut rng = suite_rng(seed);
        let a = random_space(&mut rng, 2, 9).unwrap();
        let b = random_space(&mut rng, 2, 9).unwrap();
        let f = random_map(&mut rng, &a, &b).unwrap();
        let r = random_relation(&mut rng, &a, &b).unwrap();
        let r2 = random_relation(&mut rng, &a, &b).unwrap();
        let small = intersect(&r, &r2).unwrap();
        let big = pushforward(&f, &r).unwrap();
        let pushed = pushforward(&f, &small).unwrap();
        prop_assert!(pushed.pairs().is_subset(big.pairs()));
        let s = random_relation(&mut rng, &b, &b).unwrap();
        let s_small = intersect(&s, &random_relation(&mut rng, &b, &b).unwrap()).unwrap();
        let (lo, hi) = (pullback(&f, &s_small).unwrap(), pullback(&f, &s).unwrap());
        prop_assert!(lo.pairs().is_subset(hi.pairs()));
    }
}

proptest! {
    #[test]
    fn linear_radius_dominates_quadratic(rp in 0.0f64..1.0, rq in 0.0f64..1.0, l in 0.01f64..5.0) {
        let lin = compose_radius(rp, rq, l, RadiusMode::Linear).unwrap();
        let quad = compose_radius(rp, rq, l, RadiusMode::Quadratic).unwrap();
        prop_assert!(lin + 1e-15 >= quad);
        prop_assert!(quad + 1e-15 >= (l * rp).max(rq));
        if rq == 0.0 {
            prop_assert!((lin - l * rp).abs() < 1e-15 && (quad - l * rp).abs() < 1e-15);
        }
    }
}
