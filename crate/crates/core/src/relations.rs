//! Closed alignment relations: analytic predicates backed by lazily materialized pair sets.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use once_cell::race::OnceBox;

use crate::error::{invalid, Error, Result};
use crate::geometry::{l1, l2, linf, AttributeMap, GridPoint, LatticeSpace, LinearFunctional, Point, TOL};
use crate::optimize::ReimplMap;

/// Materialized pairs, lexicographic by key, duplicate-free.
pub type PairSet = BTreeSet<(Point, Point)>;
/// Membership test on `(x, y)` weight vectors.
pub type PairPredicate = Arc<dyn Fn(&[f64], &[f64]) -> bool + Send + Sync>;
/// Membership test on a single weight vector.
pub type Screen = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A relation `R ⊆ K1 × K2`.
///
/// `holds` evaluates continuous points; `pairs` enumerates the lattice shadow once and caches it.
#[derive(Clone)]
pub struct Relation(Arc<Node>);

struct Node {
    domain: Arc<LatticeSpace>,
    codomain: Arc<LatticeSpace>,
    label: String,
    kind: Kind,
    pairs: OnceBox<PairSet>,
    left: OnceBox<Vec<Point>>,
    right: OnceBox<Vec<Point>>,
}

enum Kind {
    Predicate(PairPredicate),
    Projector(Screen),
    Explicit(PairSet),
    Compose(Relation, Relation),
    Dagger(Relation),
    Intersect(Relation, Relation),
    Graph(ReimplMap),
    Pullback(ReimplMap, Relation),
    Pushforward(ReimplMap, Relation),
    MetricPushforward(ReimplMap, Relation, f64),
    MetricPullback(ReimplMap, Relation, f64),
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Relation")
            .field("label", &self.0.label)
            .field("domain", &(self.0.domain.dimension(), self.0.domain.len()))
            .field("codomain", &(self.0.codomain.dimension(), self.0.codomain.len()))
            .finish()
    }
}

fn sorted_unique(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort();
    pts.dedup();
    pts
}

fn check_grid(a: &LatticeSpace, b: &LatticeSpace, what: &str) -> Result<()> {
    if a.same_grid(b) {
        Ok(())
    } else {
        Err(invalid!(
            "{what}: Delta^{}_{} does not match Delta^{}_{}",
            a.dimension(),
            a.resolution(),
            b.dimension(),
            b.resolution()
        ))
    }
}

impl Relation {
    fn build(domain: Arc<LatticeSpace>, codomain: Arc<LatticeSpace>, label: String, kind: Kind) -> Self {
        Self(Arc::new(Node {
            domain,
            codomain,
            label,
            kind,
            pairs: OnceBox::new(),
            left: OnceBox::new(),
            right: OnceBox::new(),
        }))
    }

    /// Base relation `{(x, y) in K1 × K2 : pred(x, y)}`.
    pub fn from_predicate(
        domain: Arc<LatticeSpace>,
        codomain: Arc<LatticeSpace>,
        label: impl Into<String>,
        pred: impl Fn(&[f64], &[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self::build(domain, codomain, label.into(), Kind::Predicate(Arc::new(pred)))
    }

    /// Diagonal relation `{(y, y) : y in K, screen(y)}`.
    pub fn projector(
        space: Arc<LatticeSpace>,
        label: impl Into<String>,
        screen: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self::build(space.clone(), space, label.into(), Kind::Projector(Arc::new(screen)))
    }

    /// `Δ_K`, the vertical identity.
    pub fn diagonal(space: Arc<LatticeSpace>) -> Self {
        Self::projector(space, "diag", |_| true)
    }

    pub fn full(domain: Arc<LatticeSpace>, codomain: Arc<LatticeSpace>) -> Self {
        Self::from_predicate(domain, codomain, "full", |_, _| true)
    }

    pub fn empty(domain: Arc<LatticeSpace>, codomain: Arc<LatticeSpace>) -> Self {
        Self::from_predicate(domain, codomain, "empty", |_, _| false)
    }

    /// Relation given by an explicit list of lattice pairs.
    pub fn explicit(
        domain: Arc<LatticeSpace>,
        codomain: Arc<LatticeSpace>,
        label: impl Into<String>,
        pairs: impl IntoIterator<Item = (GridPoint, GridPoint)>,
    ) -> Result<Self> {
        let mut set = PairSet::new();
        for (x, y) in pairs {
            if !domain.contains(&x)? || !codomain.contains(&y)? {
                return Err(invalid!("explicit pair ({x}, {y}) leaves its spaces"));
            }
            set.insert((x.to_point(), y.to_point()));
        }
        Ok(Self::build(domain, codomain, label.into(), Kind::Explicit(set)))
    }

    pub(crate) fn graph(f: &ReimplMap) -> Self {
        Self::build(
            f.domain().clone(),
            f.codomain().clone(),
            format!("graph({})", f.label()),
            Kind::Graph(f.clone()),
        )
    }

    pub(crate) fn pullback_of(f: &ReimplMap, s: &Relation) -> Result<Self> {
        check_grid(f.codomain(), s.domain(), "pullback")?;
        Ok(Self::build(
            f.domain().clone(),
            s.codomain().clone(),
            format!("{}*({})", f.label(), s.label()),
            Kind::Pullback(f.clone(), s.clone()),
        ))
    }

    pub(crate) fn pushforward_of(f: &ReimplMap, r: &Relation) -> Result<Self> {
        check_grid(f.domain(), r.domain(), "pushforward")?;
        Ok(Self::build(
            f.codomain().clone(),
            r.codomain().clone(),
            format!("{}!({})", f.label(), r.label()),
            Kind::Pushforward(f.clone(), r.clone()),
        ))
    }

    pub(crate) fn metric_pushforward_of(f: &ReimplMap, r: &Relation, radius: f64) -> Result<Self> {
        check_grid(f.domain(), r.domain(), "metric pushforward")?;
        if !(radius >= 0.0) {
            return Err(invalid!("radius must be non-negative"));
        }
        Ok(Self::build(
            f.codomain().clone(),
            r.codomain().clone(),
            format!("{}!^{radius}({})", f.label(), r.label()),
            Kind::MetricPushforward(f.clone(), r.clone(), radius),
        ))
    }

    pub(crate) fn metric_pullback_of(f: &ReimplMap, s: &Relation, radius: f64) -> Result<Self> {
        check_grid(f.codomain(), s.domain(), "metric pullback")?;
        if !(radius >= 0.0) {
            return Err(invalid!("radius must be non-negative"));
        }
        Ok(Self::build(
            f.domain().clone(),
            s.codomain().clone(),
            format!("{}*^{radius}({})", f.label(), s.label()),
            Kind::MetricPullback(f.clone(), s.clone(), radius),
        ))
    }

    pub fn domain(&self) -> &Arc<LatticeSpace> {
        &self.0.domain
    }

    pub fn codomain(&self) -> &Arc<LatticeSpace> {
        &self.0.codomain
    }

    pub fn label(&self) -> &str {
        &self.0.label
    }

    pub fn is_projector(&self) -> bool {
        matches!(self.0.kind, Kind::Projector(_))
    }

    /// Analytic membership within [`TOL`].
    pub fn holds(&self, x: &[f64], y: &[f64]) -> bool {
        let n = &*self.0;
        match &n.kind {
            Kind::Predicate(p) => n.domain.contains_weights(x) && n.codomain.contains_weights(y) && p(x, y),
            Kind::Projector(s) => linf(x, y) <= TOL && n.domain.contains_weights(x) && s(x),
            Kind::Explicit(set) => set.contains(&(Point::new(x.to_vec()), Point::new(y.to_vec()))),
            Kind::Compose(r, s) => {
                let bridge = s.left_support();
                r.right_support().iter().any(|m| {
                    r.holds(x, m.weights()) && bridge.binary_search(m).is_ok() && s.holds(m.weights(), y)
                })
            }
            Kind::Dagger(r) => r.holds(y, x),
            Kind::Intersect(a, b) => a.holds(x, y) && b.holds(x, y),
            Kind::Graph(f) => n.domain.contains_weights(x) && linf(&f.apply(x), y) <= TOL,
            Kind::Pullback(f, s) => f.domain().contains_weights(x) && s.holds(&f.apply(x), y),
            Kind::Pushforward(f, r) => r
                .left_support()
                .iter()
                .any(|p| linf(&f.apply(p.weights()), x) <= TOL && r.holds(p.weights(), y)),
            Kind::MetricPushforward(f, r, rad) => {
                let px = Point::new(x.to_vec());
                if n.domain.index_of(&px).is_some() {
                    return self.pairs().contains(&(px, Point::new(y.to_vec())));
                }
                n.domain.contains_weights(x)
                    && r.pairs().iter().any(|(p, z)| {
                        linf(z.weights(), y) <= TOL && l2(x, &f.apply(p.weights())) <= rad + TOL
                    })
            }
            Kind::MetricPullback(f, s, rad) => {
                if !f.domain().contains_weights(x) {
                    return false;
                }
                let fx = f.apply(x);
                f.codomain()
                    .cells()
                    .iter()
                    .filter(|c| l2(c.weights(), &fx) <= rad + TOL)
                    .all(|c| s.holds(c.weights(), y))
            }
        }
    }

    /// Distinct first components that can occur, sorted.
    pub fn left_support(&self) -> &[Point] {
        self.0.left.get_or_init(|| Box::new(self.compute_left()))
    }

    /// Distinct second components that can occur, sorted.
    pub fn right_support(&self) -> &[Point] {
        self.0.right.get_or_init(|| Box::new(self.compute_right()))
    }

    fn compute_left(&self) -> Vec<Point> {
        let n = &*self.0;
        match &n.kind {
            Kind::Predicate(_) | Kind::Projector(_) | Kind::Graph(_) => n.domain.cells().to_vec(),
            Kind::Pullback(..) | Kind::MetricPullback(..) | Kind::MetricPushforward(..) => n.domain.cells().to_vec(),
            Kind::Explicit(set) => sorted_unique(set.iter().map(|(x, _)| x.clone()).collect()),
            Kind::Compose(r, _) | Kind::Intersect(r, _) => r.left_support().to_vec(),
            Kind::Dagger(r) => r.right_support().to_vec(),
            Kind::Pushforward(f, r) => {
                sorted_unique(r.left_support().iter().map(|p| Point::new(f.apply(p.weights()))).collect())
            }
        }
    }

    fn compute_right(&self) -> Vec<Point> {
        let n = &*self.0;
        match &n.kind {
            Kind::Predicate(_) | Kind::Projector(_) => n.codomain.cells().to_vec(),
            Kind::Explicit(set) => sorted_unique(set.iter().map(|(_, y)| y.clone()).collect()),
            Kind::Compose(_, s) => s.right_support().to_vec(),
            Kind::Intersect(r, _) => r.right_support().to_vec(),
            Kind::Dagger(r) => r.left_support().to_vec(),
            Kind::Graph(f) => sorted_unique(n.domain.cells().iter().map(|p| Point::new(f.apply(p.weights()))).collect()),
            Kind::Pullback(_, s) | Kind::MetricPullback(_, s, _) => s.right_support().to_vec(),
            Kind::Pushforward(_, r) | Kind::MetricPushforward(_, r, _) => r.right_support().to_vec(),
        }
    }

    /// The lattice shadow of the relation, computed once.
    pub fn pairs(&self) -> &PairSet {
        self.0.pairs.get_or_init(|| Box::new(self.materialize()))
    }

    pub fn len(&self) -> usize {
        self.pairs().len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs().is_empty()
    }

    pub fn contains_pair(&self, x: &Point, y: &Point) -> bool {
        self.pairs().contains(&(x.clone(), y.clone()))
    }

    fn materialize(&self) -> PairSet {
        let n = &*self.0;
        let mut out = PairSet::new();
        match &n.kind {
            Kind::Predicate(p) => {
                for x in n.domain.cells() {
                    for y in n.codomain.cells() {
                        if p(x.weights(), y.weights()) {
                            out.insert((x.clone(), y.clone()));
                        }
                    }
                }
            }
            Kind::Projector(s) => {
                for y in n.domain.cells() {
                    if s(y.weights()) {
                        out.insert((y.clone(), y.clone()));
                    }
                }
            }
            Kind::Explicit(set) => out = set.clone(),
            Kind::Compose(r, s) => {
                let mut index: BTreeMap<&Point, Vec<&Point>> = BTreeMap::new();
                for (y, z) in s.pairs() {
                    index.entry(y).or_default().push(z);
                }
                for (x, y) in r.pairs() {
                    if let Some(zs) = index.get(y) {
                        for z in zs {
                            out.insert((x.clone(), (*z).clone()));
                        }
                    }
                }
            }
            Kind::Dagger(r) => out = r.pairs().iter().map(|(x, y)| (y.clone(), x.clone())).collect(),
            Kind::Intersect(a, b) => {
                out = a.pairs().iter().filter(|(x, y)| b.holds(x.weights(), y.weights())).cloned().collect()
            }
            Kind::Graph(f) => {
                for x in n.domain.cells() {
                    out.insert((x.clone(), Point::new(f.apply(x.weights()))));
                }
            }
            Kind::Pullback(f, s) => {
                let zs = s.right_support();
                for x in f.domain().cells() {
                    let fx = f.apply(x.weights());
                    for z in zs {
                        if s.holds(&fx, z.weights()) {
                            out.insert((x.clone(), z.clone()));
                        }
                    }
                }
            }
            Kind::Pushforward(f, r) => {
                for (x, z) in r.pairs() {
                    out.insert((Point::new(f.apply(x.weights())), z.clone()));
                }
            }
            Kind::MetricPushforward(f, r, rad) => {
                let images: Vec<(Vec<f64>, &Point)> =
                    r.pairs().iter().map(|(x, z)| (f.apply(x.weights()), z)).collect();
                for y in n.domain.cells() {
                    for (fx, z) in &images {
                        if l2(y.weights(), fx) <= rad + TOL {
                            out.insert((y.clone(), (*z).clone()));
                        }
                    }
                }
            }
            Kind::MetricPullback(f, s, rad) => {
                let zs = s.right_support();
                for x in f.domain().cells() {
                    let fx = f.apply(x.weights());
                    let ball: Vec<&Point> =
                        f.codomain().cells().iter().filter(|c| l2(c.weights(), &fx) <= rad + TOL).collect();
                    for z in zs {
                        if ball.iter().all(|c| s.holds(c.weights(), z.weights())) {
                            out.insert((x.clone(), z.clone()));
                        }
                    }
                }
            }
        }
        out
    }

    /// Codomain lattice points related to some member of `xs`.
    pub fn image(&self, xs: &[Point]) -> Vec<Point> {
        let n = &*self.0;
        match &n.kind {
            Kind::Predicate(p) => n
                .codomain
                .cells()
                .iter()
                .filter(|y| xs.iter().any(|x| p(x.weights(), y.weights())))
                .cloned()
                .collect(),
            Kind::Projector(s) => sorted_unique(
                xs.iter()
                    .filter(|x| n.domain.index_of(x).is_some() && s(x.weights()))
                    .cloned()
                    .collect(),
            ),
            _ => {
                let wanted: BTreeSet<&Point> = xs.iter().collect();
                let mut out: Vec<Point> = self
                    .pairs()
                    .iter()
                    .filter(|(x, y)| wanted.contains(x) && n.codomain.index_of(y).is_some())
                    .map(|(_, y)| y.clone())
                    .collect();
                out.sort();
                out.dedup();
                out
            }
        }
    }

    /// `{y : (x, y) in R}` on the codomain lattice.
    pub fn fiber(&self, x: &GridPoint) -> Result<Vec<GridPoint>> {
        if !self.domain().contains(x)? || self.domain().index_of_grid(x).is_none() {
            return Err(invalid!("{x} is not in the relation's domain"));
        }
        let xw = x.weights();
        Ok(self
            .codomain()
            .points()
            .iter()
            .zip(self.codomain().cells())
            .filter(|(_, c)| self.holds(&xw, c.weights()))
            .map(|(g, _)| g.clone())
            .collect())
    }
}

/// `S ∘ R`: first `r`, then `s`.
pub fn compose_vertical(s: &Relation, r: &Relation) -> Result<Relation> {
    check_grid(r.codomain(), s.domain(), "compose_vertical")?;
    Ok(Relation::build(
        r.domain().clone(),
        s.codomain().clone(),
        format!("{}∘{}", s.label(), r.label()),
        Kind::Compose(r.clone(), s.clone()),
    ))
}

/// Converse relation.
pub fn dagger(r: &Relation) -> Relation {
    Relation::build(
        r.codomain().clone(),
        r.domain().clone(),
        format!("{}†", r.label()),
        Kind::Dagger(r.clone()),
    )
}

/// Pairwise intersection; the predicate is the conjunction.
pub fn intersect(a: &Relation, b: &Relation) -> Result<Relation> {
    check_grid(a.domain(), b.domain(), "intersect domain")?;
    check_grid(a.codomain(), b.codomain(), "intersect codomain")?;
    Ok(Relation::build(
        a.domain().clone(),
        a.codomain().clone(),
        format!("{}∩{}", a.label(), b.label()),
        Kind::Intersect(a.clone(), b.clone()),
    ))
}

/// Functional relation `{(x, f(x))}`.
pub fn graph_of(f: &ReimplMap) -> Relation {
    Relation::graph(f)
}

/// Named relation families.
#[derive(Debug, Clone, PartialEq)]
pub enum RelationKind {
    /// `‖gA(x) − gB(y)‖₂ ≤ ε`.
    Track { epsilon: f64, g_a: Option<AttributeMap>, g_b: Option<AttributeMap> },
    /// Projector `{(y, y) : fee(y) ≤ tau}`.
    FeeCap { tau: f64, fee: LinearFunctional },
    /// `‖y − x‖₁ ≤ κ`.
    Turnover { kappa: f64 },
    /// Projector `{(y, y) : Σ_{i∈I} y_i ≤ α}`.
    LiquidityCap { alpha: f64, illiquid: Vec<usize> },
    /// Projector `{(y, y) : y_i ≤ c_i}`.
    PositionCaps { caps: Vec<f64> },
    /// Projector `{(y, y) : Σ τ_i y_i ≤ κ}`.
    Maintenance { kappa: f64, tau: Vec<f64> },
}

impl RelationKind {
    pub fn name(&self) -> &'static str {
        match self {
            RelationKind::Track { .. } => "track",
            RelationKind::FeeCap { .. } => "fee_cap",
            RelationKind::Turnover { .. } => "turnover",
            RelationKind::LiquidityCap { .. } => "liquidity_cap",
            RelationKind::PositionCaps { .. } => "position_caps",
            RelationKind::Maintenance { .. } => "maintenance",
        }
    }

    /// The single-point screen for projector kinds.
    pub fn screen(&self, assets: usize) -> Result<Option<Screen>> {
        let screen: Screen = match self.clone() {
            RelationKind::FeeCap { tau, fee } => {
                nonneg(tau, "tau")?;
                if fee.coeffs().len() != assets {
                    return Err(invalid!("fee functional arity does not match {assets} assets"));
                }
                Arc::new(move |y| fee.eval_weights(y) <= tau + TOL)
            }
            RelationKind::LiquidityCap { alpha, illiquid } => {
                nonneg(alpha, "alpha")?;
                if illiquid.iter().any(|&i| i >= assets) {
                    return Err(invalid!("illiquid index out of range"));
                }
                Arc::new(move |y| illiquid.iter().map(|&i| y[i]).sum::<f64>() <= alpha + TOL)
            }
            RelationKind::PositionCaps { caps } => {
                if caps.len() != assets {
                    return Err(invalid!("expected {assets} position caps"));
                }
                for c in &caps {
                    nonneg(*c, "cap")?;
                }
                Arc::new(move |y| y.iter().zip(&caps).all(|(w, c)| *w <= c + TOL))
            }
            RelationKind::Maintenance { kappa, tau } => {
                nonneg(kappa, "kappa")?;
                if tau.len() != assets {
                    return Err(invalid!("expected {assets} maintenance costs"));
                }
                for t in &tau {
                    nonneg(*t, "tau")?;
                }
                Arc::new(move |y| y.iter().zip(&tau).map(|(w, t)| w * t).sum::<f64>() <= kappa + TOL)
            }
            _ => return Ok(None),
        };
        Ok(Some(screen))
    }
}

fn nonneg(v: f64, what: &str) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be a non-negative finite number, got {v}")))
    }
}

/// Builds a named relation; projector kinds live on the codomain.
pub fn build_relation(domain: Arc<LatticeSpace>, codomain: Arc<LatticeSpace>, kind: RelationKind) -> Result<Relation> {
    let label = String::from(kind.name());
    if let Some(screen) = kind.screen(codomain.assets())? {
        return Ok(Relation::build(codomain.clone(), codomain, label, Kind::Projector(screen)));
    }
    match kind {
        RelationKind::Track { epsilon, g_a, g_b } => {
            nonneg(epsilon, "epsilon")?;
            let g_a = g_a.unwrap_or_else(|| AttributeMap::identity(domain.assets()));
            let g_b = g_b.unwrap_or_else(|| AttributeMap::identity(codomain.assets()));
            if g_a.inputs() != domain.assets() || g_b.inputs() != codomain.assets() {
                return Err(invalid!("attribute maps do not accept the space dimensions"));
            }
            if g_a.outputs() != g_b.outputs() {
                return Err(invalid!("attribute maps land in different R^k"));
            }
            Ok(Relation::from_predicate(domain, codomain, label, move |x, y| {
                l2(&g_a.apply(x), &g_b.apply(y)) <= epsilon + TOL
            }))
        }
        RelationKind::Turnover { kappa } => {
            nonneg(kappa, "kappa")?;
            check_grid(&domain, &codomain, "turnover")?;
            Ok(Relation::from_predicate(domain, codomain, label, move |x, y| l1(x, y) <= kappa + TOL))
        }
        _ => unreachable!("projector kinds handled above"),
    }
}
