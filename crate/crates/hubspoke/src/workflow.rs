//! The three platform workflows. Each returns the ledger entry it appended.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use hubspoke_core::dots::{action, Menu};
use hubspoke_core::geometry::{l2, Point};
use hubspoke_core::optimize::{build_constrained_reimpl, ReimplMap};
use hubspoke_core::relations::Relation;

use crate::defs::{MapDef, MapRule, NamedRelation, ObjectiveDef, SpaceDef};
use crate::error::{invalid, Kind, Result};
use crate::ledger::{Ledger, LedgerEntry, LedgerVerdict, NewEntry, Witness, WorkflowKind};
use crate::registry::{Registry, Resolver};

fn micros(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e6
}

/// Verdict of checking one `(x, f(x))` against `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCheck {
    pub hub: Vec<f64>,
    pub spoke: Vec<f64>,
    pub holds: bool,
    /// Spoke points `z` with `(x, z) ∈ R`.
    pub fiber_size: usize,
    /// Nearest compliant spoke, L2.
    pub nearest: Option<(Vec<f64>, f64)>,
}

/// `y = f(x)`, then `(x, y) ∈ R`. Deterministic in `(x, f, R)`.
pub fn check_pair(f: &ReimplMap, r: &Relation, x: &[f64]) -> Result<PairCheck> {
    if !f.domain().same_grid(r.domain()) || !f.codomain().same_grid(r.codomain()) {
        return Err(invalid(format!("map {} and relation {} do not share spaces", f.label(), r.label())));
    }
    let xp = Point::new(x.to_vec());
    let Some(i) = f.domain().index_of(&xp) else {
        return Err(invalid(format!("hub {x:?} is not a lattice point of the map's domain")));
    };
    let x = f.domain().cells()[i].weights().to_vec();
    let y = f.apply(&x);
    let holds = r.holds(&x, &y);
    let fiber = r.image(std::slice::from_ref(&f.domain().cells()[i]));
    let nearest = fiber
        .iter()
        .map(|z| (z.weights().to_vec(), l2(z.weights(), &y)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    Ok(PairCheck { hub: x, spoke: y, holds, fiber_size: fiber.len(), nearest })
}

/// Workflow A: propagate a hub change through `f` and verify against `R`.
pub fn workflow_a(reg: &Registry, ledger: &mut Ledger, map_id: &str, relation_id: &str, hub: &[f64]) -> Result<LedgerEntry> {
    let res = Resolver::new(reg);
    let (f, r) = (res.map(map_id)?, res.relation(relation_id)?);
    let t = Instant::now();
    let c = check_pair(&f, &r, hub)?;
    let latency = micros(t);
    let mut metrics = BTreeMap::from([
        ("check_latency_us".to_string(), latency),
        ("hub_spoke_l2".to_string(), l2(&c.hub, &c.spoke)),
        ("fiber_size".to_string(), c.fiber_size as f64),
    ]);
    if let Some((_, d)) = &c.nearest {
        metrics.insert("distance_to_compliance".into(), if c.holds { 0.0 } else { *d });
    }
    let witness = (!c.holds).then(|| Witness {
        hub: c.hub.clone(),
        spoke: c.spoke.clone(),
        nearest: c.nearest.as_ref().map(|(z, _)| z.clone()),
        reason: format!("({:?}, {:?}) is not in {}", c.hub, c.spoke, relation_id),
    });
    ledger.append(NewEntry {
        workflow: WorkflowKind::A,
        hub: Some(c.hub),
        spoke: Some(c.spoke),
        relation_id: relation_id.into(),
        map_id: Some(map_id.into()),
        verdict: if c.holds { LedgerVerdict::Committed } else { LedgerVerdict::Rejected },
        metrics,
        witness,
    })
}

/// Options for workflow B.
#[derive(Debug, Clone, Default)]
pub struct RelationChange {
    /// Relation whose menu the new relation acts on; otherwise the new relation's domain.
    pub base: Option<String>,
    /// Also sweep every domain point of every map landing in the new relation's domain.
    pub full_sweep: bool,
}

/// Workflow B: the new relation `R′` replaces nothing; it is checked, then registered.
///
/// The menu is recomputed under `R′`. Every hub committed by workflow A through a map
/// whose codomain is `R′`'s domain is re-verified against the pullback: `x` survives iff
/// `f(x)` has a non-empty `R′`-fiber. Violations are recorded and `R′` is not registered.
pub fn workflow_b(
    reg: &mut Registry,
    ledger: &mut Ledger,
    new: &NamedRelation,
    opts: &RelationChange,
) -> Result<LedgerEntry> {
    reg.ensure_free(Kind::Relation, &new.id)?;
    let t = Instant::now();
    let (menu_count, checked, bad, skipped, first_bad, sweep) = {
        let res = Resolver::new(reg);
        let r_new = res.build_relation(&new.id, &new.def)?;
        let start = match &opts.base {
            Some(b) => {
                let rb = res.relation(b)?;
                action(&Menu::from_space(rb.domain().clone()), &rb)?
            }
            None => Menu::from_space(r_new.domain().clone()),
        };
        let menu = action(&start, &r_new)?;
        let survives = |y: &[f64]| !r_new.image(&[Point::new(y.to_vec())]).is_empty();
        let (mut checked, mut bad, mut skipped, mut first_bad) = (0usize, 0usize, 0usize, None);
        for e in ledger.entries()? {
            let (WorkflowKind::A, LedgerVerdict::Committed, Some(m), Some(x), Some(y)) =
                (e.workflow, e.verdict, &e.map_id, &e.hub, &e.spoke)
            else {
                continue;
            };
            match reg.get_map(m) {
                Ok(def) if def.codomain == new.def.domain => {}
                _ => {
                    skipped += 1;
                    continue;
                }
            }
            checked += 1;
            if !survives(y) {
                bad += 1;
                first_bad.get_or_insert_with(|| (x.clone(), y.clone()));
            }
        }
        let sweep = if opts.full_sweep {
            let (mut points, mut lost) = (0usize, 0usize);
            for (id, def) in &reg.hmorphisms {
                if def.codomain != new.def.domain {
                    continue;
                }
                let f = res.map(id)?;
                points += f.domain().len();
                lost += f.images().iter().filter(|y| !survives(y)).count();
            }
            Some((points, lost))
        } else {
            None
        };
        (menu.len(), checked, bad, skipped, first_bad, sweep)
    };
    let mut metrics = BTreeMap::from([
        ("menu_count".to_string(), menu_count as f64),
        ("hubs_checked".to_string(), checked as f64),
        ("hubs_violating".to_string(), bad as f64),
        ("hubs_skipped".to_string(), skipped as f64),
        ("elapsed_us".to_string(), micros(t)),
    ]);
    if let Some((points, lost)) = sweep {
        metrics.insert("sweep_points".into(), points as f64);
        metrics.insert("sweep_violations".into(), lost as f64);
    }
    let violated = bad > 0 || sweep.is_some_and(|(_, lost)| lost > 0);
    if !violated {
        reg.put_relation(&new.id, new.def.clone())?;
    }
    ledger.append(NewEntry {
        workflow: WorkflowKind::B,
        hub: first_bad.as_ref().map(|(x, _)| x.clone()),
        spoke: first_bad.as_ref().map(|(_, y)| y.clone()),
        relation_id: new.id.clone(),
        map_id: None,
        verdict: if violated { LedgerVerdict::Violation } else { LedgerVerdict::Committed },
        metrics,
        witness: first_bad.map(|(x, y)| Witness {
            hub: x,
            spoke: y,
            nearest: None,
            reason: format!("spoke has an empty fiber under {}", new.id),
        }),
    })
}

/// Ids chosen by workflow C.
#[derive(Debug, Clone, PartialEq)]
pub struct NewSpoke {
    pub map_id: String,
    pub domain_id: String,
    pub spoke_id: String,
}

/// Workflow C: build `f(x) = argmax_{y ∈ F_R(x)} score(y)`, register `f` and its image `K_new`.
pub fn workflow_c(
    reg: &mut Registry,
    ledger: &mut Ledger,
    relation_id: &str,
    objective: &ObjectiveDef,
    map_id: Option<&str>,
) -> Result<(LedgerEntry, NewSpoke)> {
    let map_id = map_id.map_or_else(|| format!("{relation_id}.argmax"), str::to_string);
    let ids = NewSpoke {
        domain_id: format!("{map_id}.domain"),
        spoke_id: format!("{map_id}.image"),
        map_id: map_id.clone(),
    };
    reg.ensure_free(Kind::Map, &ids.map_id)?;
    reg.ensure_free(Kind::Object, &ids.spoke_id)?;
    let rdef = reg.get_relation(relation_id)?.clone();
    let t = Instant::now();
    let (hub_def, image_def, domain_size, hub_size) = {
        let res = Resolver::new(reg);
        let r = res.relation(relation_id)?;
        let f = build_constrained_reimpl(&r, std::sync::Arc::new(objective.score(r.codomain().assets())?))?;
        let carved = f.domain().len() < r.domain().len();
        let grid = |s: &hubspoke_core::LatticeSpace| -> Vec<Vec<u32>> { s.points().iter().map(|p| p.coords().to_vec()).collect() };
        let hub_def = carved.then(|| SpaceDef { points: Some(grid(f.domain())), ..reg.get_object(&rdef.domain).cloned().expect("resolved") });
        let image: BTreeSet<Vec<u32>> = f
            .images()
            .iter()
            .map(|y| {
                let i = r.codomain().index_of(&Point::new(y.clone())).expect("images lie on the codomain");
                r.codomain().points()[i].coords().to_vec()
            })
            .collect();
        let image_def = SpaceDef { points: Some(image.into_iter().collect()), ..reg.get_object(&rdef.codomain)?.clone() };
        (hub_def, image_def, f.domain().len(), r.domain().len())
    };
    // Stage on a copy so a map that fails to resolve leaves the registry untouched.
    let mut staged = reg.clone();
    let image_size = image_def.points.as_ref().map_or(0, Vec::len);
    let domain_id = match hub_def {
        Some(def) => {
            staged.put_object(&ids.domain_id, def)?;
            ids.domain_id.clone()
        }
        None => rdef.domain.clone(),
    };
    staged.put_object(&ids.spoke_id, image_def)?;
    let def = MapDef {
        domain: domain_id.clone(),
        codomain: ids.spoke_id.clone(),
        rule: MapRule::Constrained { relation: relation_id.into(), objective: objective.clone() },
    };
    staged.put_map(&ids.map_id, def)?;
    Resolver::new(&staged).map(&ids.map_id)?;
    *reg = staged;
    let entry = ledger.append(NewEntry {
        workflow: WorkflowKind::C,
        hub: None,
        spoke: None,
        relation_id: relation_id.into(),
        map_id: Some(ids.map_id.clone()),
        verdict: LedgerVerdict::Committed,
        metrics: BTreeMap::from([
            ("domain_size".to_string(), domain_size as f64),
            ("hub_size".to_string(), hub_size as f64),
            ("image_size".to_string(), image_size as f64),
            ("elapsed_us".to_string(), micros(t)),
        ]),
        witness: None,
    })?;
    Ok((entry, NewSpoke { domain_id, ..ids }))
}
