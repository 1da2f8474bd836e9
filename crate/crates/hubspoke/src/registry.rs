//! The morphism registry: named objects, h-morphisms and v-morphisms.
//!
//! Ids are immutable once put. Every reference in a stored definition resolves.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use hubspoke_core::geometry::{GridPoint, LatticeSpace};
use hubspoke_core::optimize::{build_constrained_reimpl, build_metric_reimpl, ReimplMap};
use hubspoke_core::relations::{build_relation, compose_vertical, intersect, Relation};

use crate::defs::{MapDef, MapRule, RelationDef, RelationSpec, SpaceDef};
use crate::error::{invalid, Kind, PlatformError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    #[serde(default)]
    pub objects: BTreeMap<String, SpaceDef>,
    #[serde(default)]
    pub hmorphisms: BTreeMap<String, MapDef>,
    #[serde(default)]
    pub vmorphisms: BTreeMap<String, RelationDef>,
}

fn not_found(kind: Kind, id: &str) -> PlatformError {
    PlatformError::NotFound { kind, id: id.into() }
}

fn dangling(what: &str, kind: Kind, id: &str) -> PlatformError {
    invalid(format!("{what} refers to unknown {kind} '{id}'"))
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty() && self.hmorphisms.is_empty() && self.vmorphisms.is_empty()
    }

    fn free(&self, kind: Kind, id: &str) -> Result<()> {
        let taken = match kind {
            Kind::Object => self.objects.contains_key(id),
            Kind::Map => self.hmorphisms.contains_key(id),
            Kind::Relation => self.vmorphisms.contains_key(id),
        };
        if id.is_empty() {
            return Err(invalid("ids must be non-empty"));
        }
        if taken {
            return Err(PlatformError::Conflict { kind, id: id.into() });
        }
        Ok(())
    }

    /// Fails with a conflict if `id` is taken in `kind`.
    pub fn ensure_free(&self, kind: Kind, id: &str) -> Result<()> {
        self.free(kind, id)
    }

    pub fn put_object(&mut self, id: &str, def: SpaceDef) -> Result<&SpaceDef> {
        self.free(Kind::Object, id)?;
        def.build()?;
        Ok(self.objects.entry(id.into()).or_insert(def))
    }

    fn check_object(&self, what: &str, id: &str) -> Result<()> {
        if self.objects.contains_key(id) {
            Ok(())
        } else {
            Err(dangling(what, Kind::Object, id))
        }
    }

    fn check_map_refs(&self, id: &str, def: &MapDef) -> Result<()> {
        self.check_object(id, &def.domain)?;
        self.check_object(id, &def.codomain)?;
        match &def.rule {
            MapRule::Constrained { relation, .. } if !self.vmorphisms.contains_key(relation) => {
                Err(dangling(id, Kind::Relation, relation))
            }
            MapRule::Compose { first, then } => {
                for m in [first, then] {
                    if !self.hmorphisms.contains_key(m) {
                        return Err(dangling(id, Kind::Map, m));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn check_relation_refs(&self, id: &str, def: &RelationDef) -> Result<()> {
        self.check_object(id, &def.domain)?;
        self.check_object(id, &def.codomain)?;
        match def.spec.references().into_iter().find(|r| !self.vmorphisms.contains_key(*r)) {
            Some(r) => Err(dangling(id, Kind::Relation, r)),
            None => Ok(()),
        }
    }

    /// Stores a map after checking its references; the map itself is built lazily.
    pub fn put_map(&mut self, id: &str, def: MapDef) -> Result<&MapDef> {
        self.free(Kind::Map, id)?;
        self.check_map_refs(id, &def)?;
        Ok(self.hmorphisms.entry(id.into()).or_insert(def))
    }

    pub fn put_relation(&mut self, id: &str, def: RelationDef) -> Result<&RelationDef> {
        self.free(Kind::Relation, id)?;
        self.check_relation_refs(id, &def)?;
        Ok(self.vmorphisms.entry(id.into()).or_insert(def))
    }

    pub fn get_object(&self, id: &str) -> Result<&SpaceDef> {
        self.objects.get(id).ok_or_else(|| not_found(Kind::Object, id))
    }

    pub fn get_map(&self, id: &str) -> Result<&MapDef> {
        self.hmorphisms.get(id).ok_or_else(|| not_found(Kind::Map, id))
    }

    pub fn get_relation(&self, id: &str) -> Result<&RelationDef> {
        self.vmorphisms.get(id).ok_or_else(|| not_found(Kind::Relation, id))
    }

    /// First dangling reference, if any.
    pub fn check_integrity(&self) -> Result<()> {
        for (id, def) in &self.hmorphisms {
            self.check_map_refs(id, def)?;
        }
        for (id, def) in &self.vmorphisms {
            self.check_relation_refs(id, def)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("registry serializes");
        s.push('\n');
        s
    }

    /// Writes a single JSON document, replacing the file atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        std::io::Write::write_all(&mut tmp, self.to_json().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| PlatformError::Io(e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let reg: Registry = serde_json::from_str(&text).map_err(|e| PlatformError::Format {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        reg.check_integrity()?;
        Ok(reg)
    }
}

/// Builds core values from a registry, sharing one `Arc` per object id.
pub struct Resolver<'r> {
    reg: &'r Registry,
    spaces: RefCell<HashMap<String, Arc<LatticeSpace>>>,
    maps: RefCell<HashMap<String, ReimplMap>>,
    relations: RefCell<HashMap<String, Relation>>,
}

impl<'r> Resolver<'r> {
    pub fn new(reg: &'r Registry) -> Self {
        Self {
            reg,
            spaces: RefCell::default(),
            maps: RefCell::default(),
            relations: RefCell::default(),
        }
    }

    pub fn registry(&self) -> &Registry {
        self.reg
    }

    pub fn space(&self, id: &str) -> Result<Arc<LatticeSpace>> {
        if let Some(s) = self.spaces.borrow().get(id) {
            return Ok(s.clone());
        }
        let s = Arc::new(self.reg.get_object(id)?.build()?);
        self.spaces.borrow_mut().insert(id.into(), s.clone());
        Ok(s)
    }

    pub fn map(&self, id: &str) -> Result<ReimplMap> {
        if let Some(m) = self.maps.borrow().get(id) {
            return Ok(m.clone());
        }
        let def = self.reg.get_map(id)?;
        let (dom, cod) = (self.space(&def.domain)?, self.space(&def.codomain)?);
        let m = match &def.rule {
            MapRule::Identity => {
                let n = dom.assets();
                let eye = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
                ReimplMap::affine(dom, cod, id, eye, vec![0.0; n])?
            }
            MapRule::Affine { matrix, offset } => ReimplMap::affine(dom, cod, id, matrix.clone(), offset.clone())?,
            MapRule::Constant { point } => ReimplMap::constant(dom, cod, point.clone())?,
            MapRule::Metric { objective } => {
                build_metric_reimpl(dom.clone(), cod.clone(), &objective.build(dom.assets(), cod.assets())?)?
            }
            MapRule::Constrained { relation, objective } => {
                let r = self.relation(relation)?;
                let built = build_constrained_reimpl(&r, Arc::new(objective.score(r.codomain().assets())?))?;
                // Retarget onto the registered objects; this validates the codomain object.
                let inner = built.clone();
                ReimplMap::from_fn(dom, cod, id, move |x| inner.apply(x))?
            }
            MapRule::Compose { first, then } => self.map(first)?.then(&self.map(then)?)?,
        };
        self.maps.borrow_mut().insert(id.into(), m.clone());
        Ok(m)
    }

    pub fn relation(&self, id: &str) -> Result<Relation> {
        if let Some(r) = self.relations.borrow().get(id) {
            return Ok(r.clone());
        }
        let r = self.build_relation(id, self.reg.get_relation(id)?)?;
        self.relations.borrow_mut().insert(id.into(), r.clone());
        Ok(r)
    }

    /// Builds a definition that need not be registered; references must be.
    pub fn build_relation(&self, label: &str, def: &RelationDef) -> Result<Relation> {
        let (dom, cod) = (self.space(&def.domain)?, self.space(&def.codomain)?);
        if let Some(kind) = def.spec.kind()? {
            return Ok(build_relation(dom, cod, kind)?);
        }
        Ok(match &def.spec {
            RelationSpec::Full => Relation::full(dom, cod),
            RelationSpec::Diagonal => {
                if !dom.same_grid(&cod) || dom.points() != cod.points() {
                    return Err(invalid(format!("{label}: diagonal needs equal domain and codomain")));
                }
                Relation::diagonal(dom)
            }
            RelationSpec::Pairs { pairs } => {
                let (n1, n2) = (dom.resolution(), cod.resolution());
                let ps = pairs
                    .iter()
                    .map(|(a, b)| Ok((GridPoint::new(a.clone(), n1)?, GridPoint::new(b.clone(), n2)?)))
                    .collect::<Result<Vec<_>>>()?;
                Relation::explicit(dom, cod, label, ps)?
            }
            RelationSpec::Compose { first, then } => compose_vertical(&self.relation(then)?, &self.relation(first)?)?,
            RelationSpec::Intersect { left, right } => intersect(&self.relation(left)?, &self.relation(right)?)?,
            _ => unreachable!("parametric kinds are handled above"),
        })
    }
}

/// Hub `K = Δ²_100 ∩ {x1 ≤ 0.6}`, spoke `S = Δ²_100`, inclusion `f1`, a drifting
/// constant `f2`, tracking `r1 = track(0.05)` and turnover `r2`.
pub fn demo_registry() -> Registry {
    let mut reg = Registry::new();
    reg.put_object("K", SpaceDef::simplex(2, 100).with("x1<=0.6")).expect("fresh id");
    reg.put_object("S", SpaceDef::simplex(2, 100)).expect("fresh id");
    let map = |rule| MapDef { domain: "K".into(), codomain: "S".into(), rule };
    reg.put_map("f1", map(MapRule::Identity)).expect("fresh id");
    reg.put_map("f2", map(MapRule::Constant { point: vec![0.6, 0.2, 0.2] })).expect("fresh id");
    let rel = |spec| RelationDef { domain: "K".into(), codomain: "S".into(), spec };
    reg.put_relation("r1", rel(RelationSpec::Track { epsilon: 0.05, g_a: None, g_b: None })).expect("fresh id");
    reg.put_relation("r2", rel(RelationSpec::Turnover { kappa: 0.2 })).expect("fresh id");
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_get_and_errors() {
        let mut reg = Registry::new();
        let k = SpaceDef::simplex(2, 10);
        reg.put_object("K", k.clone()).unwrap();
        assert_eq!(reg.get_object("K").unwrap(), &k);
        assert!(matches!(reg.put_object("K", k), Err(PlatformError::Conflict { .. })));
        assert!(matches!(reg.get_map("nope"), Err(PlatformError::NotFound { kind: Kind::Map, .. })));
        let bad = MapDef { domain: "K".into(), codomain: "Z".into(), rule: MapRule::Identity };
        assert!(matches!(reg.put_map("f", bad), Err(PlatformError::InvalidArgument(_))));
        assert!(reg.hmorphisms.is_empty());
    }

    #[test]
    fn resolver_shares_objects_and_builds_kinds() {
        let reg = demo_registry();
        let res = Resolver::new(&reg);
        let f1 = res.map("f1").unwrap();
        let r1 = res.relation("r1").unwrap();
        assert!(Arc::ptr_eq(f1.domain(), r1.domain()));
        assert!(r1.holds(&[0.3, 0.5, 0.2], &f1.apply(&[0.3, 0.5, 0.2])));
        assert!(!r1.holds(&[0.3, 0.5, 0.2], &res.map("f2").unwrap().apply(&[0.3, 0.5, 0.2])));
    }

    #[test]
    fn identity_into_a_smaller_space_is_refused() {
        let mut reg = Registry::new();
        reg.put_object("A", SpaceDef::simplex(1, 4)).unwrap();
        reg.put_object("B", SpaceDef::simplex(1, 4).with("x1<=0.5")).unwrap();
        reg.put_map("up", MapDef { domain: "B".into(), codomain: "A".into(), rule: MapRule::Identity }).unwrap();
        reg.put_map("down", MapDef { domain: "A".into(), codomain: "B".into(), rule: MapRule::Identity }).unwrap();
        let res = Resolver::new(&reg);
        assert!(res.map("up").is_ok());
        assert!(matches!(res.map("down"), Err(PlatformError::Core(hubspoke_core::Error::MapNotIntoCodomain(_)))));
    }

    #[test]
    fn structural_relations_resolve() {
        let mut reg = Registry::new();
        reg.put_object("A", SpaceDef::simplex(1, 2)).unwrap();
        let rel = |spec| RelationDef { domain: "A".into(), codomain: "A".into(), spec };
        reg.put_relation("p", rel(RelationSpec::Pairs { pairs: vec![(vec![0, 2], vec![1, 1])] })).unwrap();
        reg.put_relation("q", rel(RelationSpec::Pairs { pairs: vec![(vec![1, 1], vec![2, 0])] })).unwrap();
        reg.put_relation("qp", rel(RelationSpec::Compose { first: "p".into(), then: "q".into() })).unwrap();
        assert!(reg.put_relation("bad", rel(RelationSpec::Intersect { left: "p".into(), right: "x".into() })).is_err());
        let res = Resolver::new(&reg);
        let qp = res.relation("qp").unwrap();
        assert_eq!(qp.len(), 1);
        assert!(qp.holds(&[0.0, 1.0], &[1.0, 0.0]));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reg.json");
        for reg in [Registry::new(), demo_registry()] {
            reg.save(&path).unwrap();
            assert_eq!(Registry::load(&path).unwrap(), reg);
        }
        std::fs::write(&path, "{\n  \"objects\": {\n  \"K\": 3\n}\n}\n").unwrap();
        match Registry::load(&path) {
            Err(PlatformError::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a format error, got {other:?}"),
        }
    }
}
