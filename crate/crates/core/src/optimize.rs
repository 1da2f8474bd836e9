//! Re-implementation maps: affine maps, lattice optimizers, Bellman lifts.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::geometry::{check_finite, l1, l2, linf, AttributeMap, LatticeSpace, Point, TOL};
use crate::relations::Relation;

/// Evaluation rule of a map on arbitrary weight vectors.
pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Real-valued score on weight vectors.
pub type ScoreFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Objective values closer than this are ties, resolved lexicographically.
pub const TIE_TOL: f64 = 1e-12;
/// Per-rank step of the lexicographic perturbation used by [`ValueFunction::perturbed`].
pub const PERTURBATION_STEP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    LatticeArgmin { objective: String },
    Composite(Vec<String>),
    Custom,
}

/// A total map `K1 -> K2` whose images satisfy the codomain predicate.
#[derive(Clone)]
pub struct ReimplMap(Arc<MapNode>);

struct MapNode {
    domain: Arc<LatticeSpace>,
    codomain: Arc<LatticeSpace>,
    label: String,
    rule: Rule,
    eval: MapFn,
    // Cached images of domain lattice points, for optimizer rules.
    table: Option<Vec<Vec<f64>>>,
}

impl fmt::Debug for ReimplMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReimplMap").field("label", &self.0.label).field("rule", &self.0.rule).finish()
    }
}

impl ReimplMap {
    pub(crate) fn assemble(
        domain: Arc<LatticeSpace>,
        codomain: Arc<LatticeSpace>,
        label: String,
        rule: Rule,
        eval: MapFn,
        tabulate: bool,
    ) -> Result<Self> {
        let mut table = tabulate.then(|| Vec::with_capacity(domain.len()));
        for x in domain.cells() {
            let y = eval(x.weights());
            if y.len() != codomain.assets() || y.iter().any(|v| !v.is_finite()) || !codomain.contains_weights(&y) {
                return Err(Error::MapNotIntoCodomain(format!(
                    "{label} sends {:?} to {:?}",
                    x.weights(),
                    y
                )));
            }
            if let Some(t) = table.as_mut() {
                t.push(y);
            }
        }
        Ok(Self(Arc::new(MapNode { domain, codomain, label, rule, eval, table })))
    }

    /// `x -> M x + b`.
    pub fn affine(
        domain: Arc<LatticeSpace>,
        codomain: Arc<LatticeSpace>,
        label: impl Into<String>,
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    ) -> Result<Self> {
        if matrix.len() != codomain.assets() || matrix.iter().any(|r| r.len() != domain.assets()) {
            return Err(invalid!(
                "affine matrix must be {}x{}",
                codomain.assets(),
                domain.assets()
            ));
        }
        if offset.len() != codomain.assets() {
            return Err(invalid!("affine offset must have {} entries", codomain.assets()));
        }
        for r in &matrix {
            check_finite(r, "affine matrix")?;
        }
        check_finite(&offset, "affine offset")?;
        let (m, b) = (matrix.clone(), offset.clone());
        let eval: MapFn = Arc::new(move |x| {
            m.iter().zip(&b).map(|(row, off)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + off).collect()
        });
        Self::assemble(domain, codomain, label.into(), Rule::Affine { matrix, offset }, eval, false)
    }

    pub fn identity(space: Arc<LatticeSpace>) -> Self {
        let n = space.assets();
        let matrix = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::affine(space.clone(), space, "id", matrix, alloc::vec![0.0; n]).expect("identity is total")
    }

    /// Constant map onto `point`.
    pub fn constant(domain: Arc<LatticeSpace>, codomain: Arc<LatticeSpace>, point: Vec<f64>) -> Result<Self> {
        let matrix = point.iter().map(|_| alloc::vec![0.0; domain.assets()]).collect();
        Self::affine(domain, codomain, "const", matrix, point)
    }

    /// Map from an arbitrary evaluation rule.
    pub fn from_fn(
        domain: Arc<LatticeSpace>,
        codomain: Arc<LatticeSpace>,
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::assemble(domain, codomain, label.into(), Rule::Custom, Arc::new(f), false)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &ReimplMap) -> Result<Self> {
        if !self.codomain().same_grid(next.domain()) {
            return Err(invalid!("cannot compose {} with {}: grids differ", self.label(), next.label()));
        }
        let (a, b) = (self.clone(), next.clone());
        let mut parts = match &self.0.rule {
            Rule::Composite(p) => p.clone(),
            _ => alloc::vec![self.label().into()],
        };
        parts.push(next.label().into());
        Self::assemble(
            self.domain().clone(),
            next.codomain().clone(),
            format!("{}∘{}", next.label(), self.label()),
            Rule::Composite(parts),
            Arc::new(move |x| b.apply(&a.apply(x))),
            false,
        )
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

    pub fn rule(&self) -> &Rule {
        &self.0.rule
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        if let Some(table) = &self.0.table {
            if let Some(i) = self.0.domain.index_of(&Point::new(x.to_vec())) {
                return table[i].clone();
            }
        }
        (self.0.eval)(x)
    }

    /// Images of every domain lattice point, in domain order.
    pub fn images(&self) -> Vec<Vec<f64>> {
        self.domain().cells().iter().map(|x| self.apply(x.weights())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::L1 => l1(a, b),
            Norm::L2 => l2(a, b),
        }
    }
}

/// The utility `u` on attribute space.
#[derive(Debug, Clone, PartialEq)]
pub enum Utility {
    Zero,
    /// `c . v`.
    Linear(Vec<f64>),
    /// `−fee . v`.
    NegFee(Vec<f64>),
    /// `−weight · ‖v − center‖²`, strictly concave for `weight > 0`.
    Quadratic { center: Vec<f64>, weight: f64 },
}

impl Utility {
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Utility::Zero => 0.0,
            Utility::Linear(c) => c.iter().zip(v).map(|(a, b)| a * b).sum(),
            Utility::NegFee(f) => -f.iter().zip(v).map(|(a, b)| a * b).sum::<f64>(),
            Utility::Quadratic { center, weight } => {
                -weight * center.iter().zip(v).map(|(c, x)| (x - c) * (x - c)).sum::<f64>()
            }
        }
    }

    fn arity(&self) -> Option<usize> {
        match self {
            Utility::Zero => None,
            Utility::Linear(c) | Utility::NegFee(c) => Some(c.len()),
            Utility::Quadratic { center, .. } => Some(center.len()),
        }
    }
}

/// `F(x, y) = ‖gA(x) − gB(y)‖^p − λ u(gB(y)) + α‖y‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub g_a: AttributeMap,
    pub g_b: AttributeMap,
    pub utility: Utility,
    pub p: f64,
    pub lambda: f64,
    pub norm: Norm,
    pub alpha: f64,
}

impl ObjectiveSpec {
    /// Pure nearest-point matching under `norm`.
    pub fn matching(assets: usize, norm: Norm) -> Self {
        Self {
            g_a: AttributeMap::identity(assets),
            g_b: AttributeMap::identity(assets),
            utility: Utility::Zero,
            p: 2.0,
            lambda: 0.0,
            norm,
            alpha: 0.0,
        }
    }

    pub fn validate(&self, hub_assets: usize, spoke_assets: usize) -> Result<()> {
        if self.g_a.inputs() != hub_assets || self.g_b.inputs() != spoke_assets {
            return Err(invalid!("attribute maps do not accept the space dimensions"));
        }
        if self.g_a.outputs() != self.g_b.outputs() {
            return Err(invalid!("attribute maps land in different R^k"));
        }
        if let Some(k) = self.utility.arity() {
            if k != self.g_b.outputs() {
                return Err(invalid!("utility arity {k} does not match attribute dimension"));
            }
        }
        if !(self.p >= 1.0) || !(self.lambda >= 0.0) || !(self.alpha >= 0.0) {
            return Err(invalid!("objective needs p >= 1, lambda >= 0, alpha >= 0"));
        }
        Ok(())
    }
}

/// Index of the first minimum of `score` (lexicographic tie-break).
fn first_min(scores: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.enumerate() {
        match best {
            Some((_, b)) if s >= b - TIE_TOL => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// `f(x) = argmin_{y in K2} F(x, y)` by exhaustive scan.
pub fn build_metric_reimpl(
    hub: Arc<LatticeSpace>,
    spoke: Arc<LatticeSpace>,
    spec: &ObjectiveSpec,
) -> Result<ReimplMap> {
    if hub.is_empty() {
        return Err(invalid!("hub space is empty"));
    }
    if spoke.is_empty() {
        return Err(Error::Infeasible("spoke space is empty".into()));
    }
    spec.validate(hub.assets(), spoke.assets())?;
    // Per-candidate constant part: attributes and −λu + α‖y‖².
    let candidates: Vec<(Vec<f64>, Vec<f64>, f64)> = spoke
        .cells()
        .iter()
        .map(|y| {
            let gb = spec.g_b.apply(y.weights());
            let sq: f64 = y.weights().iter().map(|v| v * v).sum();
            let extra = -spec.lambda * spec.utility.eval(&gb) + spec.alpha * sq;
            (y.weights().to_vec(), gb, extra)
        })
        .collect();
    let (g_a, norm, p) = (spec.g_a.clone(), spec.norm, spec.p);
    let eval: MapFn = Arc::new(move |x| {
        let ga = g_a.apply(x);
        let i = first_min(candidates.iter().map(|(_, gb, extra)| Float::powf(norm.dist(&ga, gb), p) + extra))
            .expect("spoke is non-empty");
        candidates[i].0.clone()
    });
    ReimplMap::assemble(
        hub,
        spoke,
        "argmin".into(),
        Rule::LatticeArgmin { objective: format!("{:?}^{} λ={} α={}", spec.norm, spec.p, spec.lambda, spec.alpha) },
        eval,
        true,
    )
}

/// `f(x) = argmax_{y in F_R(x)} u(y)`; the domain shrinks to `dom(R)`.
pub fn build_constrained_reimpl(relation: &Relation, utility: ScoreFn) -> Result<ReimplMap> {
    let spoke = relation.codomain().clone();
    let scores: Vec<f64> = spoke.cells().iter().map(|y| utility(y.weights())).collect();
    let hub = relation.domain();
    // Fibre indices ascend, so ties go to the first spoke cell as in a full scan.
    let best: Vec<Option<usize>> = hub
        .cells()
        .iter()
        .map(|x| {
            let mut fibre: Vec<usize> =
                relation.image(core::slice::from_ref(x)).iter().filter_map(|y| spoke.index_of(y)).collect();
            fibre.sort_unstable();
            first_min(fibre.iter().map(|&i| -scores[i])).map(|k| fibre[k])
        })
        .collect();
    let domain = if best.iter().all(Option::is_some) {
        hub.clone()
    } else {
        let carved = hub.carve(|p| hub.index_of_grid(p).is_some_and(|i| best[i].is_some()));
        if carved.is_empty() {
            return Err(Error::Infeasible(format!("relation {} has an empty domain", relation.label())));
        }
        Arc::new(carved)
    };
    let (lookup, cells) = (hub.clone(), spoke.clone());
    let eval: MapFn = Arc::new(move |x| {
        match lookup.index_of(&Point::new(x.to_vec())).and_then(|i| best[i]) {
            Some(j) => cells.cells()[j].weights().to_vec(),
            None => alloc::vec![f64::NAN; cells.assets()],
        }
    });
    ReimplMap::assemble(
        domain,
        spoke,
        format!("argmax[{}]", relation.label()),
        Rule::LatticeArgmin { objective: "constrained".into() },
        eval,
        true,
    )
}

/// A real function tabulated on every point of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    space: Arc<LatticeSpace>,
    values: Vec<f64>,
}

impl ValueFunction {
    pub fn from_fn(space: Arc<LatticeSpace>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = space.cells().iter().map(|c| f(c.weights())).collect();
        Self { space, values }
    }

    pub fn from_values(space: Arc<LatticeSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(invalid!("value table has {} entries for {} points", values.len(), space.len()));
        }
        Ok(Self { space, values })
    }

    pub fn space(&self) -> &Arc<LatticeSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, p: &Point) -> Option<f64> {
        self.space.index_of(p).map(|i| self.values[i])
    }

    /// Table lookup; off-table points score `-inf`.
    pub fn score_fn(&self) -> ScoreFn {
        let me = self.clone();
        Arc::new(move |w| me.get(&Point::new(w.to_vec())).unwrap_or(f64::NEG_INFINITY))
    }

    /// Subtracts `PERTURBATION_STEP · rank` so that lexicographically earlier points win exact ties.
    pub fn perturbed(&self) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(rank, v)| v - PERTURBATION_STEP * rank as f64)
            .collect();
        Self { space: self.space.clone(), values }
    }
}

/// Value functions produced by [`bellman_lift`].
#[derive(Debug, Clone)]
pub struct BellmanLift {
    pub u2: ValueFunction,
    pub u3: ValueFunction,
    /// The perturbed terminal utility the lifted maps must maximize.
    pub u4: ValueFunction,
}

fn fiber_max(relation: &Relation, u4: &ValueFunction, which: &str) -> Result<ValueFunction> {
    if !relation.codomain().same_grid(u4.space()) {
        return Err(invalid!("{which} does not land in the terminal space"));
    }
    let space = relation.domain().clone();
    let mut values = Vec::with_capacity(space.len());
    for (g, x) in space.points().iter().zip(space.cells()) {
        let best = relation
            .codomain()
            .cells()
            .iter()
            .filter(|w| relation.holds(x.weights(), w.weights()))
            .filter_map(|w| u4.get(w))
            .fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            return Err(Error::Infeasible(format!("{which} has an empty forward fiber at {g}")));
        }
        values.push(best);
    }
    Ok(ValueFunction { space, values })
}

/// `u2(y) = max {u4(w) : (y, w) in R_g′}`, `u3(z) = max {u4(w) : (z, w) in R_f′}`.
pub fn bellman_lift(u4: &ValueFunction, r_gprime: &Relation, r_fprime: &Relation) -> Result<BellmanLift> {
    let u4 = u4.perturbed();
    let u2 = fiber_max(r_gprime, &u4, "R_g′")?;
    let u3 = fiber_max(r_fprime, &u4, "R_f′")?;
    Ok(BellmanLift { u2, u3, u4 })
}

/// Outcome of comparing the two paths of a square.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareReport {
    pub commutes: bool,
    pub max_discrepancy: f64,
    /// Hub point with the largest gap, if any gap exceeds tolerance.
    pub witness: Option<Vec<f64>>,
    pub agreeing: usize,
    pub total: usize,
}

/// Compares `f′ ∘ g` with `g′ ∘ f` on the hub lattice, where
/// `f: K1→K2`, `g: K1→K3`, `f′: K3→K4`, `g′: K2→K4`.
pub fn check_square_commutes(
    f: &ReimplMap,
    g: &ReimplMap,
    f_prime: &ReimplMap,
    g_prime: &ReimplMap,
) -> Result<SquareReport> {
    let grids = [
        (f.domain(), g.domain()),
        (g.codomain(), f_prime.domain()),
        (f.codomain(), g_prime.domain()),
        (f_prime.codomain(), g_prime.codomain()),
    ];
    if grids.iter().any(|(a, b)| !a.same_grid(b)) {
        return Err(invalid!("square maps are not composable"));
    }
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut agreeing = 0;
    let hub = f.domain();
    for x in hub.cells() {
        let p1 = f_prime.apply(&g.apply(x.weights()));
        let p2 = g_prime.apply(&f.apply(x.weights()));
        let gap = linf(&p1, &p2);
        if gap <= TOL {
            agreeing += 1;
        }
        if gap > worst {
            worst = gap;
            if gap > TOL {
                witness = Some(x.weights().to_vec());
            }
        }
    }
    Ok(SquareReport { commutes: worst <= TOL, max_discrepancy: worst, witness, agreeing, total: hub.len() })
}

/// Max ratio `‖f(x) − f(x′)‖₂ / ‖x − x′‖₂` over lattice neighbours (one unit moved between two assets).
pub fn lipschitz_probe(f: &ReimplMap) -> f64 {
    let space = f.domain();
    let images = f.images();
    let mut worst = 0.0f64;
    for (i, p) in space.points().iter().enumerate() {
        let c = p.coords();
        for from in 0..c.len() {
            if c[from] == 0 {
                continue;
            }
            for to in 0..c.len() {
                if to == from {
                    continue;
                }
                let mut q = c.to_vec();
                q[from] -= 1;
                q[to] += 1;
                let Ok(qp) = crate::geometry::GridPoint::new(q, p.resolution()) else { continue };
                if let Some(j) = space.index_of_grid(&qp) {
                    if j > i {
                        let dx = l2(space.cells()[i].weights(), space.cells()[j].weights());
                        worst = worst.max(l2(&images[i], &images[j]) / dx);
                    }
                }
            }
        }
    }
    worst
}

/// The four maps of a square, kept for reporting.
pub struct MapSquare {
    pub f: ReimplMap,
    pub g: ReimplMap,
    pub f_prime: ReimplMap,
    pub g_prime: ReimplMap,
}

impl MapSquare {
    pub fn check(&self) -> Result<SquareReport> {
        check_square_commutes(&self.f, &self.g, &self.f_prime, &self.g_prime)
    }
}

/// Lifted square on `Δ¹` with turnover relations `R_f = R_f′ = T(κ1)`, `R_g = R_g′ = T(κ2)`
/// and terminal utility `u4`.
pub fn bellman_turnover_square(
    resolution: u32,
    kappa1: f64,
    kappa2: f64,
    u4: impl Fn(&[f64]) -> f64,
) -> Result<(MapSquare, BellmanLift)> {
    use crate::relations::{build_relation, compose_vertical, RelationKind};
    let k = Arc::new(LatticeSpace::enumerate_simplex(1, resolution)?);
    let turn = |kappa| build_relation(k.clone(), k.clone(), RelationKind::Turnover { kappa });
    let (r_f, r_g, r_fp, r_gp) = (turn(kappa1)?, turn(kappa2)?, turn(kappa1)?, turn(kappa2)?);
    if compose_vertical(&r_fp, &r_g)?.pairs() != compose_vertical(&r_gp, &r_f)?.pairs() {
        return Err(invalid!("relation square does not commute"));
    }
    let lift = bellman_lift(&ValueFunction::from_fn(k.clone(), u4), &r_gp, &r_fp)?;
    let square = MapSquare {
        f: build_constrained_reimpl(&r_f, lift.u2.score_fn())?,
        g: build_constrained_reimpl(&r_g, lift.u3.score_fn())?,
        f_prime: build_constrained_reimpl(&r_fp, lift.u4.score_fn())?,
        g_prime: build_constrained_reimpl(&r_gp, lift.u4.score_fn())?,
    };
    Ok((square, lift))
}

/// Greedy square on `Δ¹`: the two intermediate stages pull in opposite directions.
pub fn greedy_turnover_square(resolution: u32, kappa: f64) -> Result<MapSquare> {
    use crate::relations::{build_relation, RelationKind};
    let k = Arc::new(LatticeSpace::enumerate_simplex(1, resolution)?);
    let t = build_relation(k.clone(), k.clone(), RelationKind::Turnover { kappa })?;
    let u4: ScoreFn = Arc::new(|w| -(w[0] - 0.5) * (w[0] - 0.5));
    Ok(MapSquare {
        f: build_constrained_reimpl(&t, Arc::new(|y| y[0]))?,
        g: build_constrained_reimpl(&t, Arc::new(|y| -y[0]))?,
        f_prime: build_constrained_reimpl(&t, u4.clone())?,
        g_prime: build_constrained_reimpl(&t, u4)?,
    })
}
