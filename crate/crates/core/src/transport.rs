//! Pullback, pushforward and the coherence-law harness.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Result};
use num_rational::Rational64;

use crate::geometry::{linf, GridPoint, LatticeSpace, LinearConstraint, Point, Sense, TOL};
use crate::optimize::ReimplMap;
use crate::relations::{compose_vertical, dagger, graph_of, intersect, PairSet, Relation};

/// Witness lists never exceed this length.
pub const MAX_WITNESSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Law {
    Adjunction,
    Frobenius,
    Functoriality,
    LaxBc,
    StrictBc,
    PointwiseCartesian,
    Closedness,
    Unitality,
    Associativity,
    Isotonicity,
    Projector,
    MetricAdjunction,
    MetricFrobenius,
}

impl Law {
    pub fn name(self) -> &'static str {
        match self {
            Law::Adjunction => "adjunction",
            Law::Frobenius => "frobenius",
            Law::Functoriality => "functoriality",
            Law::LaxBc => "lax_bc",
            Law::StrictBc => "strict_bc",
            Law::PointwiseCartesian => "pointwise_cartesian",
            Law::Closedness => "closedness",
            Law::Unitality => "unitality",
            Law::Associativity => "associativity",
            Law::Isotonicity => "isotonicity",
            Law::Projector => "projector",
            Law::MetricAdjunction => "metric_adjunction",
            Law::MetricFrobenius => "metric_frobenius",
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Verdict of one law check; `holds` iff `witnesses` is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct LawReport {
    pub law: Law,
    pub holds: bool,
    pub lhs_count: usize,
    pub rhs_count: usize,
    pub witnesses: Vec<(Vec<f64>, Vec<f64>)>,
}

impl LawReport {
    pub(crate) fn new(law: Law, lhs_count: usize, rhs_count: usize, witnesses: Vec<(Vec<f64>, Vec<f64>)>) -> Self {
        Self { law, holds: witnesses.is_empty(), lhs_count, rhs_count, witnesses }
    }
}

fn capped<'a>(it: impl Iterator<Item = &'a (Point, Point)>) -> Vec<(Vec<f64>, Vec<f64>)> {
    it.take(MAX_WITNESSES).map(|(a, b)| (a.weights().to_vec(), b.weights().to_vec())).collect()
}

/// Elements of `a` missing from `b`, then of `b` missing from `a`, smallest first.
fn set_difference(a: &PairSet, b: &PairSet) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut diff: BTreeSet<&(Point, Point)> = a.difference(b).collect();
    diff.extend(b.difference(a));
    capped(diff.into_iter())
}

/// `f*S = {(x, z) : (f(x), z) in S}`.
pub fn pullback(f: &ReimplMap, s: &Relation) -> Result<Relation> {
    Relation::pullback_of(f, s)
}

/// `f!R = {(f(x), z) : (x, z) in R}`.
pub fn pushforward(f: &ReimplMap, r: &Relation) -> Result<Relation> {
    Relation::pushforward_of(f, r)
}

/// `R ⊆ f*S  ⟺  f!R ⊆ S`.
pub fn verify_adjunction(f: &ReimplMap, r: &Relation, s: &Relation) -> Result<LawReport> {
    if !f.domain().same_grid(r.domain()) || !f.codomain().same_grid(s.domain()) || !r.codomain().same_grid(s.codomain()) {
        return Err(invalid!("adjunction: spaces do not line up"));
    }
    let fs = pullback(f, s)?;
    let fr = pushforward(f, r)?;
    let left_bad: Vec<&(Point, Point)> = r.pairs().iter().filter(|p| !fs.pairs().contains(p)).collect();
    let right_bad: Vec<&(Point, Point)> =
        fr.pairs().iter().filter(|(y, z)| !s.holds(y.weights(), z.weights())).collect();
    let witnesses = if left_bad.is_empty() == right_bad.is_empty() {
        Vec::new()
    } else {
        capped(left_bad.into_iter().chain(right_bad))
    };
    Ok(LawReport::new(Law::Adjunction, r.len(), fr.len(), witnesses))
}

/// `(g∘f)!R == g!(f!R)` and `f*(g*S) == (g∘f)*S`.
pub fn verify_functoriality(f: &ReimplMap, g: &ReimplMap, r: &Relation, s: &Relation) -> Result<LawReport> {
    let gf = f.then(g)?;
    let lhs = pushforward(&gf, r)?;
    let rhs = pushforward(g, &pushforward(f, r)?)?;
    let lhs_pb = pullback(f, &pullback(g, s)?)?;
    let rhs_pb = pullback(&gf, s)?;
    let mut witnesses = set_difference(lhs.pairs(), rhs.pairs());
    witnesses.extend(set_difference(lhs_pb.pairs(), rhs_pb.pairs()));
    witnesses.truncate(MAX_WITNESSES);
    Ok(LawReport::new(Law::Functoriality, lhs.len() + lhs_pb.len(), rhs.len() + rhs_pb.len(), witnesses))
}

/// `f!(R ∩ f*S) == f!R ∩ S`.
pub fn verify_frobenius(f: &ReimplMap, r: &Relation, s: &Relation) -> Result<LawReport> {
    let (lhs, rhs) = frobenius_sides(f, r, s)?;
    let witnesses = set_difference(&lhs, &rhs);
    Ok(LawReport::new(Law::Frobenius, lhs.len(), rhs.len(), witnesses))
}

fn frobenius_sides(f: &ReimplMap, r: &Relation, s: &Relation) -> Result<(PairSet, PairSet)> {
    let lhs = pushforward(f, &intersect(r, &pullback(f, s)?)?)?;
    let rhs = intersect(&pushforward(f, r)?, s)?;
    Ok((lhs.pairs().clone(), rhs.pairs().clone()))
}

/// `g: A→B`, `f′: A→C`, `f: B→D`, `h: C→D` with `f∘g = h∘f′`.
#[derive(Debug, Clone)]
pub struct CommutingSquare {
    g: ReimplMap,
    f_prime: ReimplMap,
    f: ReimplMap,
    h: ReimplMap,
}

impl CommutingSquare {
    /// Checks composability and `f∘g == h∘f′` on A's lattice in max-norm.
    pub fn new(g: ReimplMap, f_prime: ReimplMap, f: ReimplMap, h: ReimplMap) -> Result<Self> {
        let grids = [
            (g.domain(), f_prime.domain()),
            (g.codomain(), f.domain()),
            (f_prime.codomain(), h.domain()),
            (f.codomain(), h.codomain()),
        ];
        if grids.iter().any(|(a, b)| !a.same_grid(b)) {
            return Err(invalid!("square maps are not composable"));
        }
        let mut worst = 0.0f64;
        for a in g.domain().cells() {
            let top = f.apply(&g.apply(a.weights()));
            let bottom = h.apply(&f_prime.apply(a.weights()));
            worst = worst.max(linf(&top, &bottom));
        }
        if worst > TOL {
            return Err(invalid!("square does not commute: max discrepancy {worst:e}"));
        }
        Ok(Self { g, f_prime, f, h })
    }

    pub fn identity(space: Arc<LatticeSpace>) -> Self {
        let id = ReimplMap::identity(space);
        Self { g: id.clone(), f_prime: id.clone(), f: id.clone(), h: id }
    }

    pub fn g(&self) -> &ReimplMap {
        &self.g
    }
    pub fn f_prime(&self) -> &ReimplMap {
        &self.f_prime
    }
    pub fn f(&self) -> &ReimplMap {
        &self.f
    }
    pub fn h(&self) -> &ReimplMap {
        &self.h
    }
}

fn bc_sides(square: &CommutingSquare, r: &Relation) -> Result<(Relation, Relation)> {
    if !r.domain().same_grid(square.f.domain()) {
        return Err(invalid!("relation does not start at the square's B corner"));
    }
    let lhs = pushforward(&square.f_prime, &pullback(&square.g, r)?)?;
    let rhs = pullback(&square.h, &pushforward(&square.f, r)?)?;
    Ok((lhs, rhs))
}

/// `f′!(g*R) ⊆ h*(f!R)`.
pub fn verify_lax_bc(square: &CommutingSquare, r: &Relation) -> Result<LawReport> {
    let (lhs, rhs) = bc_sides(square, r)?;
    let bad = lhs.pairs().iter().filter(|(c, z)| !rhs.holds(c.weights(), z.weights()));
    let witnesses = capped(bad);
    Ok(LawReport::new(Law::LaxBc, lhs.len(), rhs.len(), witnesses))
}

/// Strict Beck–Chevalley together with the pointwise-cartesian search that should imply it.
#[derive(Debug, Clone, PartialEq)]
pub struct StrictBcReport {
    pub cartesian: LawReport,
    pub equality: LawReport,
}

/// Every `(b, c)` with `f(b) = h(c)` lifts to some `a` with `g(a) = b`, `f′(a) = c`.
pub fn pointwise_cartesian(square: &CommutingSquare) -> LawReport {
    let lifts: BTreeSet<(Point, Point)> = square
        .g
        .domain()
        .cells()
        .iter()
        .map(|a| (Point::new(square.g.apply(a.weights())), Point::new(square.f_prime.apply(a.weights()))))
        .collect();
    let hc: Vec<(&Point, Vec<f64>)> =
        square.h.domain().cells().iter().map(|c| (c, square.h.apply(c.weights()))).collect();
    let mut consistent = 0;
    let mut missing = Vec::new();
    for b in square.f.domain().cells() {
        let fb = square.f.apply(b.weights());
        for (c, hcv) in &hc {
            if linf(&fb, hcv) > TOL {
                continue;
            }
            consistent += 1;
            let pair = (b.clone(), (*c).clone());
            if !lifts.contains(&pair) && missing.len() < MAX_WITNESSES {
                missing.push((b.weights().to_vec(), c.weights().to_vec()));
            }
        }
    }
    LawReport::new(Law::PointwiseCartesian, consistent, lifts.len(), missing)
}

/// `f′!(g*R) == h*(f!R)` plus the cartesian witness search.
pub fn verify_strict_bc(square: &CommutingSquare, r: &Relation) -> Result<StrictBcReport> {
    let cartesian = pointwise_cartesian(square);
    let (lhs, rhs) = bc_sides(square, r)?;
    let mut witnesses = capped(lhs.pairs().iter().filter(|(c, z)| !rhs.holds(c.weights(), z.weights())));
    witnesses.extend(capped(rhs.pairs().iter().filter(|(c, z)| !lhs.holds(c.weights(), z.weights()))));
    witnesses.truncate(MAX_WITNESSES);
    let equality = LawReport::new(Law::StrictBc, lhs.len(), rhs.len(), witnesses);
    Ok(StrictBcReport { cartesian, equality })
}

/// `f!R == R ∘ Graph(f)†`.
pub fn companion_identity_holds(f: &ReimplMap, r: &Relation) -> Result<bool> {
    let direct = pushforward(f, r)?;
    let via = compose_vertical(r, &dagger(&graph_of(f)))?;
    Ok(direct.pairs() == via.pairs())
}

/// `f*(S ∩ S′) == f*S ∩ f*S′`.
pub fn pullback_preserves_meets(f: &ReimplMap, s: &Relation, s2: &Relation) -> Result<bool> {
    let lhs = pullback(f, &intersect(s, s2)?)?;
    let rhs = intersect(&pullback(f, s)?, &pullback(f, s2)?)?;
    Ok(lhs.pairs() == rhs.pairs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureFix {
    Frobenius,
    BeckChevalley,
}

/// Counterexample tables for the half-open hub fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureFixReport {
    pub which: ClosureFix,
    pub closed_hub: bool,
    pub report: LawReport,
    pub lhs: Vec<(Vec<f64>, Vec<f64>)>,
    pub rhs: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Reproduces the failure of Frobenius or strict BC for the closure-patched pushforward.
///
/// On `Δ¹` the hub is `{0, 1/N, …, (N−1)/N}` in the first weight (the full lattice when
/// `closed_hub`), every other corner is the full lattice, maps are inclusions or identities
/// and `S = {(1, 1)}`. The patched pushforward of a hub-side relation is computed over the
/// completion of the hub, which is where the endpoint `1` re-enters.
pub fn closure_fix_demo(which: ClosureFix, closed_hub: bool, resolution: u32) -> Result<ClosureFixReport> {
    let n = resolution;
    let full = Arc::new(LatticeSpace::enumerate_simplex(1, n)?);
    let hub = if closed_hub {
        full.clone()
    } else {
        let cap = LinearConstraint::new(
            vec![Rational64::from_integer(1), Rational64::from_integer(0)],
            Rational64::new(n as i64 - 1, n as i64),
            Sense::Le,
        )?;
        Arc::new(full.restrict(&[cap])?)
    };
    let endpoint = GridPoint::new(vec![n, 0], n)?;
    let s = Relation::explicit(full.clone(), full.clone(), "S", [(endpoint.clone(), endpoint)])?;
    let iota = ReimplMap::affine(hub.clone(), full.clone(), "ι", vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0])?;
    let id = ReimplMap::identity(full.clone());
    let (lhs, rhs, law) = match which {
        ClosureFix::Frobenius => {
            let diag = |dom: Arc<LatticeSpace>| {
                Relation::from_predicate(dom, full.clone(), "R", |x, z| linf(x, z) <= TOL)
            };
            let r = diag(hub.clone());
            let lhs = pushforward(&iota, &intersect(&r, &pullback(&iota, &s)?)?)?;
            // cl(f!R): the same relation and map read on the completed hub.
            let patched = pushforward(&id, &diag(full.clone()))?;
            let rhs = intersect(&patched, &s)?;
            (lhs.pairs().clone(), rhs.pairs().clone(), Law::Frobenius)
        }
        ClosureFix::BeckChevalley => {
            let square = CommutingSquare::new(iota.clone(), iota.clone(), id.clone(), id.clone())?;
            // cl(∅) = ∅ on the left; f!S is already closed on the right.
            let (lhs, rhs) = bc_sides(&square, &s)?;
            (lhs.pairs().clone(), rhs.pairs().clone(), Law::StrictBc)
        }
    };
    let report = LawReport::new(law, lhs.len(), rhs.len(), set_difference(&lhs, &rhs));
    let to_vec = |set: &PairSet| -> Vec<(Vec<f64>, Vec<f64>)> {
        set.iter().map(|(a, b)| (a.weights().to_vec(), b.weights().to_vec())).collect()
    };
    Ok(ClosureFixReport { which, closed_hub, report, lhs: to_vec(&lhs), rhs: to_vec(&rhs) })
}

/// Human-readable rendering of a closure-fix table.
pub fn render_closure_fix(rep: &ClosureFixReport) -> String {
    let show = |v: &[(Vec<f64>, Vec<f64>)]| -> String {
        if v.is_empty() {
            return "∅".into();
        }
        let items: Vec<String> = v.iter().map(|(a, b)| format!("({}, {})", a[0], b[0])).collect();
        format!("{{{}}}", items.join(", "))
    };
    format!(
        "{:?} ({} hub): LHS = {}  RHS = {}  holds = {}",
        rep.which,
        if rep.closed_hub { "closed" } else { "half-open" },
        show(&rep.lhs),
        show(&rep.rhs),
        rep.report.holds
    )
}
