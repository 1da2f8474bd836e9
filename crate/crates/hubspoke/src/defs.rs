//! JSON definitions for spaces, maps, relations and objectives.
//!
//! Definitions are plain data; [`crate::registry::Resolver`] turns them into core values.

use serde::{Deserialize, Serialize};

use hubspoke_core::geometry::{parse_rational, AttributeMap, LatticeSpace, LinearConstraint, LinearFunctional, Sense};
use hubspoke_core::optimize::{Norm, ObjectiveSpec, Utility};
use hubspoke_core::relations::RelationKind;

use crate::error::{invalid, Result};

/// A number written as an integer, a decimal or a `num/den` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    fn text(&self) -> String {
        match self {
            Num::Int(i) => i.to_string(),
            Num::Float(f) => f.to_string(),
            Num::Text(s) => s.clone(),
        }
    }
}

/// `{"coeffs": ["1", "0", "0"], "bound": "3/5", "sense": "<="}` or the text form `"x1<=0.6"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstraintDef {
    Text(String),
    Full { coeffs: Vec<String>, bound: String, sense: String },
}

impl ConstraintDef {
    pub fn build(&self, assets: usize) -> Result<LinearConstraint> {
        Ok(match self {
            ConstraintDef::Text(t) => LinearConstraint::parse(t, assets)?,
            ConstraintDef::Full { coeffs, bound, sense } => {
                if coeffs.len() != assets {
                    return Err(invalid(format!("constraint has {} coefficients, expected {assets}", coeffs.len())));
                }
                let c = coeffs.iter().map(|s| parse_rational(s)).collect::<std::result::Result<Vec<_>, _>>()?;
                LinearConstraint::new(c, parse_rational(bound)?, Sense::parse(sense)?)?
            }
        })
    }
}

/// `Δⁿ_N` cut by constraints; `points` (grid coordinates) carves an explicit subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDef {
    pub n: usize,
    #[serde(rename = "N")]
    pub resolution: u32,
    #[serde(default)]
    pub constraints: Vec<ConstraintDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<u32>>>,
}

impl SpaceDef {
    pub fn simplex(n: usize, resolution: u32) -> Self {
        Self { n, resolution, constraints: Vec::new(), points: None }
    }

    pub fn with(mut self, text: &str) -> Self {
        self.constraints.push(ConstraintDef::Text(text.into()));
        self
    }

    pub fn build(&self) -> Result<LatticeSpace> {
        let cs = self.constraints.iter().map(|c| c.build(self.n + 1)).collect::<Result<Vec<_>>>()?;
        let base = LatticeSpace::with_constraints(self.n, self.resolution, cs)?;
        let Some(points) = &self.points else { return Ok(base) };
        let mut keep = std::collections::BTreeSet::new();
        for c in points {
            let p = hubspoke_core::GridPoint::new(c.clone(), self.resolution)?;
            if base.index_of_grid(&p).is_none() {
                return Err(invalid(format!("carved point {c:?} is not in the space")));
            }
            keep.insert(p);
        }
        Ok(base.carve(|p| keep.contains(p)))
    }
}

/// Utility `u` on attribute space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityDef {
    Zero,
    Linear { coeffs: Vec<f64> },
    NegFee { coeffs: Vec<f64> },
    Quadratic { center: Vec<f64>, weight: f64 },
}

impl UtilityDef {
    pub fn build(&self) -> Utility {
        match self.clone() {
            UtilityDef::Zero => Utility::Zero,
            UtilityDef::Linear { coeffs } => Utility::Linear(coeffs),
            UtilityDef::NegFee { coeffs } => Utility::NegFee(coeffs),
            UtilityDef::Quadratic { center, weight } => Utility::Quadratic { center, weight },
        }
    }
}

fn default_p() -> f64 {
    2.0
}

fn default_norm() -> String {
    "l2".into()
}

/// `F(x, y) = ‖gA x − gB y‖^p − λ u(gB y) + α‖y‖²`; missing attribute maps are identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveDef {
    #[serde(rename = "gA", default, skip_serializing_if = "Option::is_none")]
    pub g_a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "gB", default, skip_serializing_if = "Option::is_none")]
    pub g_b: Option<Vec<Vec<f64>>>,
    #[serde(default = "zero_utility")]
    pub u: UtilityDef,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_norm")]
    pub norm: String,
    #[serde(default)]
    pub alpha: f64,
}

fn zero_utility() -> UtilityDef {
    UtilityDef::Zero
}

fn attribute(rows: &Option<Vec<Vec<f64>>>, inputs: usize) -> Result<AttributeMap> {
    match rows {
        None => Ok(AttributeMap::identity(inputs)),
        Some(r) => Ok(AttributeMap::matrix(r.clone())?),
    }
}

impl ObjectiveDef {
    pub fn build(&self, hub_assets: usize, spoke_assets: usize) -> Result<ObjectiveSpec> {
        let norm = match self.norm.to_ascii_lowercase().as_str() {
            "l1" => Norm::L1,
            "l2" => Norm::L2,
            other => return Err(invalid(format!("unknown norm '{other}'"))),
        };
        let spec = ObjectiveSpec {
            g_a: attribute(&self.g_a, hub_assets)?,
            g_b: attribute(&self.g_b, spoke_assets)?,
            utility: self.u.build(),
            p: self.p,
            lambda: self.lambda,
            norm,
            alpha: self.alpha,
        };
        spec.validate(hub_assets, spoke_assets)?;
        Ok(spec)
    }

    /// Spoke-side score `u(gB y) − α‖y‖²`, maximized by constrained re-implementations.
    pub fn score(&self, spoke_assets: usize) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync + 'static> {
        let g_b = attribute(&self.g_b, spoke_assets)?;
        let (u, alpha) = (self.u.build(), self.alpha);
        Ok(move |y: &[f64]| u.eval(&g_b.apply(y)) - alpha * y.iter().map(|v| v * v).sum::<f64>())
    }
}

/// The relation families a registry can hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelationSpec {
    Track {
        epsilon: f64,
        #[serde(rename = "gA", default, skip_serializing_if = "Option::is_none")]
        g_a: Option<Vec<Vec<f64>>>,
        #[serde(rename = "gB", default, skip_serializing_if = "Option::is_none")]
        g_b: Option<Vec<Vec<f64>>>,
    },
    FeeCap {
        tau: f64,
        fee: Vec<Num>,
        #[serde(default = "bps")]
        units: String,
    },
    Turnover { kappa: f64 },
    LiquidityCap { alpha: f64, illiquid: Vec<usize> },
    PositionCaps { caps: Vec<f64> },
    Maintenance { kappa: f64, tau: Vec<f64> },
    Full,
    Diagonal,
    /// Explicit `(x, y)` pairs in grid coordinates.
    Pairs { pairs: Vec<(Vec<u32>, Vec<u32>)> },
    /// `then ∘ first`.
    Compose { first: String, then: String },
    Intersect { left: String, right: String },
}

fn bps() -> String {
    "bps".into()
}

impl RelationSpec {
    /// The core family for parametric kinds; structural kinds return `None`.
    pub fn kind(&self) -> Result<Option<RelationKind>> {
        Ok(Some(match self.clone() {
            RelationSpec::Track { epsilon, g_a, g_b } => RelationKind::Track {
                epsilon,
                g_a: g_a.map(AttributeMap::matrix).transpose()?,
                g_b: g_b.map(AttributeMap::matrix).transpose()?,
            },
            RelationSpec::FeeCap { tau, fee, units } => {
                let c = fee.iter().map(|n| parse_rational(&n.text())).collect::<std::result::Result<Vec<_>, _>>()?;
                RelationKind::FeeCap { tau, fee: LinearFunctional::new(c, units) }
            }
            RelationSpec::Turnover { kappa } => RelationKind::Turnover { kappa },
            RelationSpec::LiquidityCap { alpha, illiquid } => RelationKind::LiquidityCap { alpha, illiquid },
            RelationSpec::PositionCaps { caps } => RelationKind::PositionCaps { caps },
            RelationSpec::Maintenance { kappa, tau } => RelationKind::Maintenance { kappa, tau },
            _ => return Ok(None),
        }))
    }

    /// Relation ids this definition refers to.
    pub fn references(&self) -> Vec<&str> {
        match self {
            RelationSpec::Compose { first, then } => vec![first, then],
            RelationSpec::Intersect { left, right } => vec![left, right],
            _ => Vec::new(),
        }
    }

    /// Parses the CLI shorthand `track:0.05`, `fee_cap:6`, `turnover:0.3`.
    pub fn parse_shorthand(text: &str, fee: &[f64]) -> Result<Self> {
        let (name, arg) = text.split_once(':').ok_or_else(|| invalid(format!("expected kind:value, got '{text}'")))?;
        let v: f64 = arg.parse().map_err(|_| invalid(format!("bad value in '{text}'")))?;
        Ok(match name {
            "track" => RelationSpec::Track { epsilon: v, g_a: None, g_b: None },
            "fee_cap" => RelationSpec::FeeCap { tau: v, fee: fee.iter().map(|f| Num::Float(*f)).collect(), units: bps() },
            "turnover" => RelationSpec::Turnover { kappa: v },
            "liquidity_cap" => RelationSpec::LiquidityCap { alpha: v, illiquid: vec![fee.len().saturating_sub(1)] },
            other => return Err(invalid(format!("unknown relation kind '{other}'"))),
        })
    }
}

/// A relation between two registered objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationDef {
    pub domain: String,
    pub codomain: String,
    #[serde(flatten)]
    pub spec: RelationSpec,
}

/// A relation definition carrying its own id, as read by workflow B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedRelation {
    pub id: String,
    #[serde(flatten)]
    pub def: RelationDef,
}

/// How a re-implementation computes its image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapRule {
    /// Inclusion; the codomain must contain the domain.
    Identity,
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    Constant { point: Vec<f64> },
    /// Exhaustive argmin of the objective over the codomain lattice.
    Metric { objective: ObjectiveDef },
    /// Argmax of the objective score inside the fiber of a relation.
    Constrained { relation: String, objective: ObjectiveDef },
    /// `then ∘ first`.
    Compose { first: String, then: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDef {
    pub domain: String,
    pub codomain: String,
    #[serde(flatten)]
    pub rule: MapRule,
}

/// Parses `0.3,0.5,0.2` into weights.
pub fn parse_weights(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| invalid(format!("bad weight '{s}' in '{text}'"))))
        .collect()
}

/// Parses `1/N` or `N` into a resolution.
pub fn parse_step(text: &str) -> Result<u32> {
    let t = text.trim();
    let den = match t.split_once('/') {
        Some((one, den)) if one.trim() == "1" => den.trim(),
        Some(_) => return Err(invalid(format!("step must be 1/N, got '{t}'"))),
        None => t,
    };
    den.parse().map_err(|_| invalid(format!("bad resolution in '{t}'")))
}
