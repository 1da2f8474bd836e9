//! Menus and the action `K ⊙ R`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geometry::{l2, GridPoint, LatticeSpace, Point};
use crate::optimize::{ReimplMap, Rule};
use crate::relations::{compose_vertical, Relation, RelationKind};
use crate::transport::{Law, LawReport, MAX_WITNESSES};

/// A finite set of portfolios on one lattice, with the relations that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Menu {
    space: Arc<LatticeSpace>,
    points: Vec<Point>,
    provenance: Vec<String>,
}

impl Menu {
    /// Every point of `space`.
    pub fn from_space(space: Arc<LatticeSpace>) -> Self {
        let points = space.cells().to_vec();
        Self { space, points, provenance: Vec::new() }
    }

    /// Sub-menu of `space`; points must lie on it.
    pub fn from_points(space: Arc<LatticeSpace>, points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let set: BTreeSet<Point> = points.into_iter().collect();
        if let Some(p) = set.iter().find(|p| space.index_of(p).is_none()) {
            return Err(invalid!("menu point {p:?} is not on the space"));
        }
        Ok(Self { space, points: set.into_iter().collect(), provenance: Vec::new() })
    }

    pub fn space(&self) -> &Arc<LatticeSpace> {
        &self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn grid_points(&self) -> Vec<GridPoint> {
        self.points
            .iter()
            .filter_map(|p| self.space.index_of(p).map(|i| self.space.points()[i].clone()))
            .collect()
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_subset(&self, other: &Menu) -> bool {
        self.points.iter().all(|p| other.points.binary_search(p).is_ok())
    }

    fn with_label(mut self, label: &str) -> Self {
        self.provenance.push(label.into());
        self
    }
}

/// `K ⊙ R = {y in cod(R) : ∃x in K, (x, y) in R}`.
pub fn action(k: &Menu, r: &Relation) -> Result<Menu> {
    if !k.space.same_grid(r.domain()) {
        return Err(invalid!("menu lives on a different grid than {}", r.label()));
    }
    if let Some(p) = k.points.iter().find(|p| r.domain().index_of(p).is_none()) {
        return Err(invalid!("menu point {p:?} is outside the domain of {}", r.label()));
    }
    let points = r.image(&k.points);
    let mut provenance = k.provenance.clone();
    provenance.push(r.label().into());
    Ok(Menu { space: r.codomain().clone(), points, provenance })
}

fn diff_witnesses(a: &Menu, b: &Menu) -> Vec<(Vec<f64>, Vec<f64>)> {
    let sa: BTreeSet<&Point> = a.points.iter().collect();
    let sb: BTreeSet<&Point> = b.points.iter().collect();
    sa.symmetric_difference(&sb)
        .take(MAX_WITNESSES)
        .map(|p| (p.weights().to_vec(), p.weights().to_vec()))
        .collect()
}

fn equality(law: Law, a: &Menu, b: &Menu) -> LawReport {
    LawReport::new(law, a.len(), b.len(), diff_witnesses(a, b))
}

fn inclusion(law: Law, a: &Menu, b: &Menu) -> LawReport {
    let bad = a
        .points
        .iter()
        .filter(|p| b.points.binary_search(p).is_err())
        .take(MAX_WITNESSES)
        .map(|p| (p.weights().to_vec(), p.weights().to_vec()))
        .collect();
    LawReport::new(law, a.len(), b.len(), bad)
}

/// Results of the five action laws.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionLawSuite {
    pub reports: Vec<LawReport>,
    /// Whether `K ⊙ R` is non-empty.
    pub nonempty: bool,
}

impl ActionLawSuite {
    pub fn all_hold(&self) -> bool {
        self.reports.iter().all(|r| r.holds)
    }
}

/// Closedness, unitality, associativity, isotonicity (`K ⊆ K′`) and the projector law for `P`.
pub fn verify_action_laws(
    k: &Menu,
    k_wide: &Menu,
    r: &Relation,
    s: &Relation,
    p: &Relation,
) -> Result<ActionLawSuite> {
    if !k.is_subset(k_wide) {
        return Err(invalid!("isotonicity needs K ⊆ K′"));
    }
    if !p.is_projector() {
        return Err(invalid!("{} is not a projector", p.label()));
    }
    let kr = action(k, r)?;
    let closed = kr.points.iter().filter(|y| kr.space.index_of(y).is_none());
    let closedness = LawReport::new(
        Law::Closedness,
        kr.len(),
        kr.space.len(),
        closed.take(MAX_WITNESSES).map(|y| (y.weights().to_vec(), y.weights().to_vec())).collect(),
    );

    let unit = action(k, &Relation::diagonal(k.space.clone()))?;
    let unitality = equality(Law::Unitality, &unit, k);

    let chained = action(&kr, s)?;
    let composed = action(k, &compose_vertical(s, r)?)?;
    let associativity = equality(Law::Associativity, &chained, &composed);

    let wide = action(k_wide, r)?;
    let isotonicity = inclusion(Law::Isotonicity, &kr, &wide);

    let screened = action(&kr, p)?;
    let meet: Vec<Point> =
        kr.points.iter().filter(|y| p.holds(y.weights(), y.weights())).cloned().collect();
    let meet = Menu { space: kr.space.clone(), points: meet, provenance: Vec::new() };
    let twice = action(&screened, p)?;
    let mut projector = equality(Law::Projector, &screened, &meet);
    projector.witnesses.extend(diff_witnesses(&twice, &screened));
    projector.witnesses.truncate(MAX_WITNESSES);
    projector.holds = projector.witnesses.is_empty();

    Ok(ActionLawSuite {
        nonempty: !kr.is_empty(),
        reports: alloc::vec![closedness, unitality, associativity, isotonicity, projector],
    })
}

/// Fiber point of least norm; ties go to the lexicographically smallest.
pub fn select_min_norm(fiber: &[GridPoint]) -> Option<&GridPoint> {
    let mut best: Option<&GridPoint> = None;
    for y in fiber {
        match best {
            Some(b) if (y.coord_norm_sq(), y) >= (b.coord_norm_sq(), b) => {}
            _ => best = Some(y),
        }
    }
    best
}

/// Single-valued selection from the fibers of `r` minimizing `α‖y‖²`.
pub fn determinize(r: &Relation, alpha: f64) -> Result<ReimplMap> {
    if !(alpha > 0.0) {
        return Err(invalid!("alpha must be positive"));
    }
    for g in r.domain().points() {
        if r.fiber(g)?.is_empty() {
            return Err(Error::Infeasible(format!("empty fiber at hub {g}")));
        }
    }
    let rel = r.clone();
    let spoke = r.codomain().clone();
    let eval = move |x: &[f64]| -> Vec<f64> {
        let fiber: Vec<GridPoint> = spoke
            .points()
            .iter()
            .zip(spoke.cells())
            .filter(|(_, c)| rel.holds(x, c.weights()))
            .map(|(g, _)| g.clone())
            .collect();
        select_min_norm(&fiber).map_or_else(|| alloc::vec![f64::NAN; spoke.assets()], GridPoint::weights)
    };
    ReimplMap::assemble(
        r.domain().clone(),
        r.codomain().clone(),
        format!("det[{}]", r.label()),
        Rule::LatticeArgmin { objective: format!("{alpha}·‖y‖²") },
        Arc::new(eval),
        true,
    )
}

/// The two concrete wiring diagrams.
#[derive(Debug, Clone)]
pub enum WiringTemplate {
    /// `(K_core ⊗ K_sat) ⊙ R_mix,w ⊙ R_global`.
    CoreSatellite { w: f64, global: Option<Relation> },
    /// `K ⊙ R_liq,α ⊙ R_cap ⊙ R_maint,κ`.
    LiquidityPipeline { alpha: f64, illiquid: Vec<usize>, caps: Vec<f64>, kappa: f64, tau: Vec<f64> },
}

/// Nearest lattice point in L2; ties go to the lexicographically smallest.
pub fn snap_nearest(space: &LatticeSpace, w: &[f64]) -> Option<Point> {
    let mut best: Option<(f64, &Point)> = None;
    for c in space.cells() {
        let d = l2(c.weights(), w);
        match best {
            Some((b, _)) if d >= b - 1e-12 => {}
            _ => best = Some((d, c)),
        }
    }
    best.map(|(_, p)| p.clone())
}

pub fn apply_template(t: &WiringTemplate, inputs: &[Arc<LatticeSpace>]) -> Result<Menu> {
    match t {
        WiringTemplate::CoreSatellite { w, global } => {
            let [core, sat] = inputs else {
                return Err(invalid!("core-satellite takes two inputs, got {}", inputs.len()));
            };
            if !(0.0..=1.0).contains(w) {
                return Err(invalid!("mixing weight must lie in [0, 1]"));
            }
            if !core.same_grid(sat) {
                return Err(invalid!("core and satellite must share a grid"));
            }
            let out = Arc::new(core.ambient()?);
            let mut mixes: BTreeSet<Point> = BTreeSet::new();
            for xc in core.cells() {
                for xs in sat.cells() {
                    let m: Vec<f64> =
                        xc.weights().iter().zip(xs.weights()).map(|(a, b)| w * a + (1.0 - w) * b).collect();
                    mixes.insert(Point::new(m));
                }
            }
            let snapped = mixes.iter().filter_map(|m| snap_nearest(&out, m.weights()));
            let menu = Menu::from_points(out.clone(), snapped)?.with_label(&format!("mix[w={w}]"));
            match global {
                Some(g) => action(&menu, g),
                None => Ok(menu),
            }
        }
        WiringTemplate::LiquidityPipeline { alpha, illiquid, caps, kappa, tau } => {
            let [k] = inputs else {
                return Err(invalid!("liquidity pipeline takes one input, got {}", inputs.len()));
            };
            let stages = [
                RelationKind::LiquidityCap { alpha: *alpha, illiquid: illiquid.clone() },
                RelationKind::PositionCaps { caps: caps.clone() },
                RelationKind::Maintenance { kappa: *kappa, tau: tau.clone() },
            ];
            let mut menu = Menu::from_space(k.clone());
            for kind in stages {
                let rel = crate::relations::build_relation(k.clone(), k.clone(), kind)?;
                menu = action(&menu, &rel)?;
            }
            Ok(menu)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LinearConstraint, LinearFunctional};
    use crate::relations::build_relation;
    use alloc::string::ToString;
    use alloc::vec;

    fn simplex(n: usize, big_n: u32) -> Arc<LatticeSpace> {
        Arc::new(LatticeSpace::enumerate_simplex(n, big_n).unwrap())
    }

    #[test]
    fn unit_menu_at_n20() {
        let hub = Arc::new(simplex(2, 20).restrict(&[LinearConstraint::parse("x1<=0.6", 3).unwrap()]).unwrap());
        let k = Menu::from_space(hub.clone());
        let out = action(&k, &Relation::diagonal(hub)).unwrap();
        assert_eq!(k.len(), 195);
        assert_eq!(out.len(), 195);
        assert_eq!(out.provenance(), &["diag".to_string()]);
    }

    #[test]
    fn fee_projector_is_idempotent() {
        let k = simplex(2, 20);
        let fee = build_relation(
            k.clone(),
            k.clone(),
            RelationKind::FeeCap { tau: 6.0, fee: LinearFunctional::from_integers(&[10, 5, 0], "bps") },
        )
        .unwrap();
        let once = action(&Menu::from_space(k), &fee).unwrap();
        let twice = action(&once, &fee).unwrap();
        assert_eq!(once.points(), twice.points());
    }

    #[test]
    fn empty_relation_gives_empty_menu() {
        let k = simplex(2, 6);
        let m = Menu::from_space(k.clone());
        let p = Relation::diagonal(k.clone());
        let suite = verify_action_laws(&m, &m, &Relation::empty(k.clone(), k.clone()), &p, &p).unwrap();
        assert!(!suite.nonempty);
        assert!(suite.all_hold());
    }

    #[test]
    fn min_norm_tie_break() {
        let fiber = vec![
            GridPoint::new(vec![1, 0, 0], 1).unwrap(),
            GridPoint::new(vec![0, 1, 0], 1).unwrap(),
            GridPoint::new(vec![0, 0, 1], 1).unwrap(),
        ];
        assert_eq!(select_min_norm(&fiber).unwrap().coords(), &[0, 0, 1]);
    }

    #[test]
    fn determinized_tracking() {
        let k = simplex(2, 20);
        let t = build_relation(k.clone(), k.clone(), RelationKind::Track { epsilon: 0.05, g_a: None, g_b: None })
            .unwrap();
        let f = determinize(&t, 1.0).unwrap();
        for (g, x) in k.points().iter().zip(k.cells()) {
            let fiber = t.fiber(g).unwrap();
            let want = fiber.iter().min_by_key(|y| (y.coord_norm_sq(), (*y).clone())).unwrap();
            assert_eq!(f.apply(x.weights()), want.weights());
            assert!(t.holds(x.weights(), &f.apply(x.weights())));
        }
    }

    #[test]
    fn degenerate_mix_returns_the_core() {
        let k = simplex(2, 10);
        let core = Arc::new(k.restrict(&[LinearConstraint::parse("x1<=0.3", 3).unwrap()]).unwrap());
        let menu = apply_template(&WiringTemplate::CoreSatellite { w: 1.0, global: None }, &[core.clone(), k.clone()])
            .unwrap();
        assert_eq!(menu.points(), core.cells());
        let err = apply_template(&WiringTemplate::CoreSatellite { w: 0.5, global: None }, &[k]);
        assert!(err.is_err());
    }

    #[test]
    fn zero_liquidity_keeps_the_liquid_face() {
        let k = simplex(2, 10);
        let t = WiringTemplate::LiquidityPipeline {
            alpha: 0.0,
            illiquid: vec![2],
            caps: vec![1.0; 3],
            kappa: 100.0,
            tau: vec![1.0; 3],
        };
        let menu = apply_template(&t, std::slice::from_ref(&k)).unwrap();
        assert_eq!(menu.len(), 11);
        assert!(menu.points().iter().all(|p| p.weights()[2] == 0.0));
        assert_eq!(menu.provenance().len(), 3);
    }
}
