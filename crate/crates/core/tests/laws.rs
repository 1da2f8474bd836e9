use std::collections::BTreeSet;
use std::sync::Arc;

use hubspoke_core::geometry::{GridPoint, LatticeSpace, LinearConstraint, Point};
use hubspoke_core::laws::{coherence_suite, coordinate_matrix, metric_suite};
use hubspoke_core::optimize::ReimplMap;
use hubspoke_core::relations::{build_relation, graph_of, Relation, RelationKind};
use hubspoke_core::transport::{
    closure_fix_demo, pullback, pushforward, render_closure_fix, verify_adjunction, verify_frobenius,
    verify_functoriality, verify_lax_bc, verify_strict_bc, ClosureFix, CommutingSquare, Law,
};

fn simplex(n: usize, big_n: u32) -> Arc<LatticeSpace> {
    Arc::new(LatticeSpace::enumerate_simplex(n, big_n).unwrap())
}

fn capped(n: usize, big_n: u32, text: &str) -> Arc<LatticeSpace> {
    let c = LinearConstraint::parse(text, n + 1).unwrap();
    Arc::new(LatticeSpace::with_constraints(n, big_n, vec![c]).unwrap())
}

fn merge(a: &Arc<LatticeSpace>, b: &Arc<LatticeSpace>, phi: &[usize]) -> ReimplMap {
    let n = b.assets();
    ReimplMap::affine(a.clone(), b.clone(), "merge", coordinate_matrix(phi, n), vec![0.0; n]).unwrap()
}

#[test]
fn generated_coherence_suite_has_no_violations() {
    let rep = coherence_suite(2024, 500).unwrap();
    for t in &rep.tallies {
        assert_eq!(t.violations, 0, "{:?}: {:?}", t.law, t.first_failure);
    }
    assert!(rep.tally(Law::Adjunction).unwrap().checked >= 1500);
    for law in [Law::Frobenius, Law::Functoriality, Law::LaxBc] {
        assert_eq!(rep.tally(law).unwrap().checked, 500);
    }
    let strict = rep.tally(Law::StrictBc).unwrap().checked;
    assert_eq!(strict, rep.cartesian_squares);
    assert!(strict > 50 && strict < 500, "cartesian squares: {strict}");
}

#[test]
fn generated_metric_suite_has_no_violations() {
    let rep = metric_suite(99, 200).unwrap();
    assert!(rep.all_hold(), "{:?}", rep.tallies);
    assert_eq!(rep.tally(Law::MetricAdjunction).unwrap().checked, 200);
    assert_eq!(rep.tally(Law::MetricFrobenius).unwrap().checked, 200);
}

#[test]
fn shrunk_tracking_fixture_satisfies_frobenius() {
    let k = simplex(2, 10);
    let third = 0.2 / 3.0;
    let f = ReimplMap::affine(
        k.clone(),
        k.clone(),
        "shrink",
        vec![vec![0.8, 0.0, 0.0], vec![0.0, 0.8, 0.0], vec![0.0, 0.0, 0.8]],
        vec![third; 3],
    )
    .unwrap();
    let r = build_relation(k.clone(), k.clone(), RelationKind::Track { epsilon: 0.10, g_a: None, g_b: None }).unwrap();
    let s = build_relation(k.clone(), k.clone(), RelationKind::Turnover { kappa: 0.3 }).unwrap();
    let rep = verify_frobenius(&f, &r, &s).unwrap();
    assert!(rep.holds, "{rep:?}");
    assert_eq!(rep.lhs_count, rep.rhs_count);
    assert!(rep.lhs_count > 0);
}

#[test]
fn aggregation_pullback_matches_its_inequality() {
    let k = simplex(2, 10);
    let z = simplex(1, 10);
    let f = merge(&k, &z, &[0, 0, 1]);
    let s = Relation::from_predicate(z.clone(), z.clone(), "y0<=2z0", |y, w| y[0] <= 2.0 * w[0] + 1e-9);
    let pb = pullback(&f, &s).unwrap();
    let oracle: BTreeSet<(Point, Point)> = k
        .cells()
        .iter()
        .flat_map(|x| z.cells().iter().map(move |w| (x.clone(), w.clone())))
        .filter(|(x, w)| x.weights()[0] + x.weights()[1] <= 2.0 * w.weights()[0] + 1e-9)
        .collect();
    assert_eq!(pb.pairs(), &oracle);
    assert_eq!(graph_of(&f).len(), 66);
}

#[test]
fn aggregation_pushforward_spot_checks() {
    let k1 = capped(2, 10, "x1<=0.5");
    let z = simplex(1, 10);
    let y = simplex(1, 10);
    let f = merge(&k1, &y, &[0, 0, 1]);
    let r = Relation::from_predicate(k1.clone(), z.clone(), "x0>=z0", |x, w| x[0] >= w[0] - 1e-9);
    let fr = pushforward(&f, &r).unwrap();
    assert!(fr.holds(&[0.6, 0.4], &[0.4, 0.6]));
    assert!(!fr.holds(&[0.3, 0.7], &[0.4, 0.6]));
    for (p, w) in fr.pairs() {
        assert!(w.weights()[0] <= p.weights()[0].min(0.5) + 1e-9);
    }
}

#[test]
fn identity_transports_are_identities() {
    let k = capped(2, 6, "x2<=0.5");
    let id = ReimplMap::identity(k.clone());
    let r = build_relation(k.clone(), k.clone(), RelationKind::Turnover { kappa: 0.4 }).unwrap();
    assert_eq!(pullback(&id, &r).unwrap().pairs(), r.pairs());
    assert_eq!(pushforward(&id, &r).unwrap().pairs(), r.pairs());
    let empty = Relation::empty(k.clone(), k.clone());
    assert!(pullback(&id, &empty).unwrap().is_empty());
    assert!(verify_functoriality(&id, &id, &r, &r).unwrap().holds);
    // Counit and unit directions.
    assert!(verify_adjunction(&id, &pullback(&id, &r).unwrap(), &r).unwrap().holds);
    assert!(verify_frobenius(&id, &r, &Relation::full(k.clone(), k)).unwrap().holds);
}

#[test]
fn aggregation_and_permutation_compose_functorially() {
    let k = simplex(2, 10);
    let y = simplex(1, 10);
    let f = merge(&k, &y, &[0, 0, 1]);
    let swap = merge(&y, &y, &[1, 0]);
    let r = build_relation(k.clone(), k.clone(), RelationKind::Track { epsilon: 0.2, g_a: None, g_b: None }).unwrap();
    let s = Relation::from_predicate(y.clone(), k, "y0<=z2", |a, w| a[0] <= w[2] + 1e-9);
    assert!(verify_functoriality(&f, &swap, &r, &s).unwrap().holds);
}

#[test]
fn stock_sector_class_chain_is_cartesian_and_strict() {
    let stocks = simplex(3, 10);
    let sectors = simplex(2, 10);
    let classes = simplex(1, 10);
    let g = merge(&stocks, &sectors, &[0, 0, 1, 2]);
    let f_prime = merge(&stocks, &classes, &[0, 0, 0, 1]);
    let f = merge(&sectors, &classes, &[0, 0, 1]);
    let h = ReimplMap::identity(classes);
    let square = CommutingSquare::new(g, f_prime, f, h).unwrap();
    let r = build_relation(sectors.clone(), sectors, RelationKind::Track { epsilon: 0.15, g_a: None, g_b: None })
        .unwrap();
    assert!(verify_lax_bc(&square, &r).unwrap().holds);
    let strict = verify_strict_bc(&square, &r).unwrap();
    assert!(strict.cartesian.holds);
    assert!(strict.equality.holds);
    assert_eq!(strict.equality.lhs_count, strict.equality.rhs_count);
}

#[test]
fn hole_in_the_corner_breaks_cartesianness() {
    let a = capped(2, 10, "x1<=0.5");
    let b = simplex(2, 10);
    let d = simplex(1, 10);
    let g = ReimplMap::affine(a.clone(), b.clone(), "ι", coordinate_matrix(&[0, 1, 2], 3), vec![0.0; 3]).unwrap();
    let f_prime = merge(&a, &d, &[0, 0, 1]);
    let f = merge(&b, &d, &[0, 0, 1]);
    let h = ReimplMap::identity(d);
    let square = CommutingSquare::new(g, f_prime, f, h).unwrap();
    let r = Relation::from_predicate(b.clone(), b, "heavy", |x, w| x[0] >= 0.8 - 1e-9 && x == w);
    assert!(verify_lax_bc(&square, &r).unwrap().holds);
    let strict = verify_strict_bc(&square, &r).unwrap();
    assert!(!strict.cartesian.holds);
    assert!(!strict.equality.holds);
    assert_eq!(strict.equality.lhs_count, 0);
    assert!(!strict.equality.witnesses.is_empty());
}

#[test]
fn identity_square_is_cartesian_and_strict() {
    let k = simplex(2, 5);
    let square = CommutingSquare::identity(k.clone());
    let r = build_relation(k.clone(), k, RelationKind::Turnover { kappa: 0.4 }).unwrap();
    let strict = verify_strict_bc(&square, &r).unwrap();
    assert!(strict.cartesian.holds && strict.equality.holds);
}

#[test]
fn non_commuting_square_is_refused() {
    let k = simplex(1, 4);
    let swap = merge(&k, &k, &[1, 0]);
    let id = ReimplMap::identity(k);
    assert!(CommutingSquare::new(swap, id.clone(), id.clone(), id).is_err());
}

#[test]
fn closure_patch_counterexamples() {
    for which in [ClosureFix::Frobenius, ClosureFix::BeckChevalley] {
        let open = closure_fix_demo(which, false, 10).unwrap();
        assert!(open.lhs.is_empty());
        assert_eq!(open.rhs, vec![(vec![1.0, 0.0], vec![1.0, 0.0])]);
        assert!(!open.report.holds);
        assert_eq!(open.report.witnesses, open.rhs);
        assert!(render_closure_fix(&open).contains("LHS = ∅  RHS = {(1, 1)}"));
        let closed = closure_fix_demo(which, true, 10).unwrap();
        assert!(closed.report.holds);
        assert_eq!(closed.lhs, closed.rhs);
    }
}

#[test]
fn explicit_pairs_must_stay_in_their_spaces() {
    let k = capped(1, 4, "x1<=0.5");
    let far = GridPoint::new(vec![4, 0], 4).unwrap();
    assert!(Relation::explicit(k.clone(), k, "bad", [(far.clone(), far)]).is_err());
}
