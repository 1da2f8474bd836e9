//! Seeded instance generators and batch runs of the coherence laws.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{AttributeMap, LatticeSpace, LinearConstraint, Point, Sense, TOL};
use crate::optimize::{build_metric_reimpl, Norm, ObjectiveSpec, ReimplMap};
use crate::relations::{build_relation, intersect, Relation, RelationKind};
use crate::stochastic::{metric_pullback, metric_pushforward};
use crate::transport::{
    pullback, pushforward, verify_adjunction, verify_frobenius, verify_functoriality, verify_lax_bc,
    verify_strict_bc, CommutingSquare, Law, LawReport, MAX_WITNESSES,
};

/// Per-law counts over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LawTally {
    pub law: Law,
    pub checked: usize,
    pub violations: usize,
    pub first_failure: Option<LawReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub instances: usize,
    pub tallies: Vec<LawTally>,
    /// Squares that passed the pointwise-cartesian search and so owe strict equality.
    pub cartesian_squares: usize,
}

impl SuiteReport {
    pub fn all_hold(&self) -> bool {
        self.tallies.iter().all(|t| t.violations == 0)
    }

    pub fn tally(&self, law: Law) -> Option<&LawTally> {
        self.tallies.iter().find(|t| t.law == law)
    }

    fn record(&mut self, rep: LawReport) {
        let pos = match self.tallies.iter().position(|t| t.law == rep.law) {
            Some(p) => p,
            None => {
                self.tallies.push(LawTally { law: rep.law, checked: 0, violations: 0, first_failure: None });
                self.tallies.len() - 1
            }
        };
        let t = &mut self.tallies[pos];
        t.checked += 1;
        if !rep.holds {
            t.violations += 1;
            if t.first_failure.is_none() {
                t.first_failure = Some(rep);
            }
        }
    }
}

pub fn suite_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Full simplex, or with probability 1/2 a single cap `x_i ≤ k/N`.
pub fn random_space(rng: &mut ChaCha8Rng, assets: usize, resolution: u32) -> Result<Arc<LatticeSpace>> {
    let full = LatticeSpace::enumerate_simplex(assets - 1, resolution)?;
    if assets == 1 || rng.random_bool(0.5) {
        return Ok(Arc::new(full));
    }
    let i = rng.random_range(0..assets);
    let k = rng.random_range(1..resolution.max(2)) as i64;
    let cap = LinearConstraint::single(i, assets, Rational64::new(k, resolution as i64), Sense::Le)?;
    Ok(Arc::new(full.restrict(&[cap])?))
}

/// 0/1 matrix sending coordinate `i` to `phi[i]`.
pub fn coordinate_matrix(phi: &[usize], outputs: usize) -> Vec<Vec<f64>> {
    (0..outputs).map(|j| phi.iter().map(|&p| if p == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn random_point(rng: &mut ChaCha8Rng, space: &LatticeSpace) -> Vec<f64> {
    space.cells()[rng.random_range(0..space.len())].weights().to_vec()
}

/// Coordinate merges, convex mixes toward a lattice point, lattice argmins or constants.
pub fn random_map(rng: &mut ChaCha8Rng, a: &Arc<LatticeSpace>, b: &Arc<LatticeSpace>) -> Result<ReimplMap> {
    let (m, n) = (a.assets(), b.assets());
    let phi: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
    let attempt = match rng.random_range(0..4) {
        0 => ReimplMap::affine(a.clone(), b.clone(), "merge", coordinate_matrix(&phi, n), vec![0.0; n]),
        1 => {
            let t = [0.2, 0.5][rng.random_range(0..2)];
            let c = random_point(rng, b);
            let mat = coordinate_matrix(&phi, n).into_iter().map(|r| r.iter().map(|v| (1.0 - t) * v).collect()).collect();
            ReimplMap::affine(a.clone(), b.clone(), "mix", mat, c.iter().map(|v| t * v).collect())
        }
        2 if m == n => build_metric_reimpl(a.clone(), b.clone(), &ObjectiveSpec::matching(m, Norm::L2)),
        _ => Err(Error::MapNotIntoCodomain("fallback".into())),
    };
    match attempt {
        Ok(f) => Ok(f),
        Err(Error::MapNotIntoCodomain(_)) if m == n => {
            build_metric_reimpl(a.clone(), b.clone(), &ObjectiveSpec::matching(m, Norm::L1))
        }
        Err(Error::MapNotIntoCodomain(_)) => ReimplMap::constant(a.clone(), b.clone(), random_point(rng, b)),
        Err(e) => Err(e),
    }
}

/// Random subsets, tracking and turnover bands, half-spaces, and the two trivial relations.
pub fn random_relation(rng: &mut ChaCha8Rng, a: &Arc<LatticeSpace>, c: &Arc<LatticeSpace>) -> Result<Relation> {
    match rng.random_range(0..10) {
        0..=3 => {
            let p = [0.05, 0.2, 0.5][rng.random_range(0..3)];
            let mut pairs = Vec::new();
            for x in a.points() {
                for z in c.points() {
                    if rng.random_bool(p) {
                        pairs.push((x.clone(), z.clone()));
                    }
                }
            }
            Relation::explicit(a.clone(), c.clone(), format!("rand({p})"), pairs)
        }
        4 | 5 => {
            let epsilon = [0.1, 0.2, 0.35][rng.random_range(0..3)];
            let (g_a, g_b) = if a.assets() == c.assets() {
                (None, None)
            } else {
                (Some(AttributeMap::coordinate(0, a.assets())?), Some(AttributeMap::coordinate(0, c.assets())?))
            };
            build_relation(a.clone(), c.clone(), RelationKind::Track { epsilon, g_a, g_b })
        }
        6 if a.same_grid(c) || (a.assets() == c.assets() && a.resolution() == c.resolution()) => {
            let kappa = [0.2, 0.4, 0.8][rng.random_range(0..3)];
            Ok(Relation::from_predicate(a.clone(), c.clone(), "turnover", move |x, z| crate::geometry::l1(x, z) <= kappa + TOL))
        }
        6 | 7 => {
            let k = rng.random_range(1..4) as f64;
            let b = rng.random_range(0..3) as f64 / 4.0;
            Ok(Relation::from_predicate(a.clone(), c.clone(), "halfspace", move |x, z| x[0] <= k * z[0] + b + TOL))
        }
        8 => Ok(Relation::full(a.clone(), c.clone())),
        _ => Ok(Relation::empty(a.clone(), c.clone())),
    }
}

fn union(a: &Relation, b: &Relation) -> Relation {
    let (a, b) = (a.clone(), b.clone());
    Relation::from_predicate(a.domain().clone(), a.codomain().clone(), "union", move |x, y| a.holds(x, y) || b.holds(x, y))
}

fn dims(rng: &mut ChaCha8Rng) -> (usize, u32) {
    let assets = rng.random_range(2..=3);
    let cap = if assets == 2 { 10 } else { 8 };
    (assets, rng.random_range(2..=cap))
}

/// Adjunction, Frobenius and functoriality on `instances` random triples, and lax/strict
/// Beck–Chevalley on as many random commuting squares.
pub fn coherence_suite(seed: u64, instances: usize) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed);
    let mut out = SuiteReport { seed, instances, tallies: Vec::new(), cartesian_squares: 0 };
    for _ in 0..instances {
        let (ma, n) = dims(&mut rng);
        let mb = rng.random_range(2..=3);
        let mz = rng.random_range(2..=3);
        let a = random_space(&mut rng, ma, n)?;
        let b = random_space(&mut rng, mb, n)?;
        let mc = rng.random_range(2..=3);
        let c = random_space(&mut rng, mc, n)?;
        let z = random_space(&mut rng, mz, n)?;
        let f = random_map(&mut rng, &a, &b)?;
        let g = random_map(&mut rng, &b, &c)?;
        let r = random_relation(&mut rng, &a, &z)?;
        let s = random_relation(&mut rng, &b, &z)?;
        let s_c = random_relation(&mut rng, &c, &z)?;
        out.record(verify_adjunction(&f, &r, &s)?);
        // Both inclusions true: S ⊇ f!R.
        out.record(verify_adjunction(&f, &r, &union(&s, &pushforward(&f, &r)?))?);
        // Both inclusions true: R ⊆ f*S.
        out.record(verify_adjunction(&f, &intersect(&r, &pullback(&f, &s)?)?, &s)?);
        out.record(verify_frobenius(&f, &r, &s)?);
        out.record(verify_functoriality(&f, &g, &r, &s_c)?);

        let square = random_square(&mut rng)?;
        let mr = rng.random_range(2..=3);
        let rz = random_space(&mut rng, mr, square.g().codomain().resolution())?;
        let rel = random_relation(&mut rng, square.f().domain(), &rz)?;
        out.record(verify_lax_bc(&square, &rel)?);
        let strict = verify_strict_bc(&square, &rel)?;
        if strict.cartesian.holds {
            out.cartesian_squares += 1;
            out.record(strict.equality);
        }
    }
    out.tallies.sort_by_key(|t| t.law.name());
    Ok(out)
}

fn compact(labels: &[(usize, usize)], rng: &mut ChaCha8Rng) -> (Vec<usize>, usize) {
    let mut distinct: Vec<(usize, usize)> = labels.to_vec();
    distinct.sort();
    distinct.dedup();
    distinct.shuffle(rng);
    let index: BTreeMap<(usize, usize), usize> = distinct.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    (labels.iter().map(|l| index[l]).collect(), distinct.len())
}

/// Square of coordinate merges `A → B → D`, `A → C → D` with both middle partitions refining
/// one coarse partition, optionally followed by a shared convex mix on `D`. `A` may carry a cap.
pub fn random_square(rng: &mut ChaCha8Rng) -> Result<CommutingSquare> {
    let (k, n) = dims(rng);
    let coarse: Vec<usize> = (0..k).map(|_| rng.random_range(0..k)).collect();
    let (coarse, t) = compact(&coarse.iter().map(|&c| (c, 0)).collect::<Vec<_>>(), rng);
    let split = |rng: &mut ChaCha8Rng| -> Vec<(usize, usize)> {
        coarse.iter().map(|&c| (c, rng.random_range(0..2))).collect()
    };
    let s1 = split(rng);
    let (p1, nb) = compact(&s1, rng);
    let s2 = split(rng);
    let (p2, nc) = compact(&s2, rng);
    let a = random_space(rng, k, n)?;
    let space = |m: usize| -> Result<Arc<LatticeSpace>> { Ok(Arc::new(LatticeSpace::enumerate_simplex(m - 1, n)?)) };
    let (b, c, d) = (space(nb)?, space(nc)?, space(t)?);
    let block_map = |p: &[usize], blocks: usize| -> Vec<usize> {
        let mut m = vec![0; blocks];
        for (i, &blk) in p.iter().enumerate() {
            m[blk] = coarse[i];
        }
        m
    };
    let g = ReimplMap::affine(a.clone(), b.clone(), "g", coordinate_matrix(&p1, nb), vec![0.0; nb])?;
    let f_prime = ReimplMap::affine(a.clone(), c.clone(), "f′", coordinate_matrix(&p2, nc), vec![0.0; nc])?;
    let mut f_mat = coordinate_matrix(&block_map(&p1, nb), t);
    let mut h_mat = coordinate_matrix(&block_map(&p2, nc), t);
    let mut offset = vec![0.0; t];
    if rng.random_bool(0.3) {
        let tw = 0.3;
        let target = random_point(rng, &d);
        for mat in [&mut f_mat, &mut h_mat] {
            for row in mat.iter_mut() {
                row.iter_mut().for_each(|v| *v *= 1.0 - tw);
            }
        }
        offset = target.iter().map(|v| tw * v).collect();
    }
    let f = ReimplMap::affine(b, d.clone(), "f", f_mat, offset.clone())?;
    let h = ReimplMap::affine(c, d, "h", h_mat, offset)?;
    CommutingSquare::new(g, f_prime, f, h)
}

/// `P!^r R ⊆ S ⟹ R ⊆ P^{*,r} S` and `P!^r(R ∩ P^{*,r}S) ⊆ P!^r R ∩ S` on random instances.
pub fn metric_suite(seed: u64, instances: usize) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed);
    let mut out = SuiteReport { seed, instances, tallies: Vec::new(), cartesian_squares: 0 };
    for i in 0..instances {
        let assets = 2 + i % 2;
        let n = 10;
        let k = Arc::new(LatticeSpace::enumerate_simplex(assets - 1, n)?);
        let a = random_space(&mut rng, assets, n)?;
        let mz = rng.random_range(2..=3);
        let z = random_space(&mut rng, mz, n)?;
        let f = random_map(&mut rng, &a, &k)?;
        let radius = [0.0, 0.05, 0.1, 0.15][rng.random_range(0..4)];
        let r = random_relation(&mut rng, &a, &z)?;
        let noise = random_relation(&mut rng, &k, &z)?;
        let dilated = metric_pushforward(&f, &r, radius)?;

        // Premise forced true by taking S ⊇ P!^r R.
        let s = union(&noise, &dilated);
        let pulled = metric_pullback(&f, &s, radius)?;
        let missing: Vec<&(Point, Point)> =
            r.pairs().iter().filter(|(x, w)| !pulled.holds(x.weights(), w.weights())).collect();
        out.record(report(Law::MetricAdjunction, r.len(), pulled.len(), missing));

        let s = if rng.random_bool(0.5) { noise } else { s };
        let lhs = metric_pushforward(&f, &intersect(&r, &metric_pullback(&f, &s, radius)?)?, radius)?;
        let rhs = intersect(&dilated, &s)?;
        let bad: Vec<&(Point, Point)> =
            lhs.pairs().iter().filter(|(y, w)| !rhs.holds(y.weights(), w.weights())).collect();
        out.record(report(Law::MetricFrobenius, lhs.len(), rhs.len(), bad));
    }
    Ok(out)
}

fn report(law: Law, lhs: usize, rhs: usize, bad: Vec<&(Point, Point)>) -> LawReport {
    let witnesses =
        bad.into_iter().take(MAX_WITNESSES).map(|(a, b)| (a.weights().to_vec(), b.weights().to_vec())).collect();
    LawReport::new(law, lhs, rhs, witnesses)
}
