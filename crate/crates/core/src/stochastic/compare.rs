use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{
    hdr_pullback_check, metric_pullback_check, safety_radius, sample_kernel, wasserstein_cure, KernelShape, KernelSpec,
};
use crate::error::Result;
use crate::geometry::{LatticeSpace, LinearConstraint};

/// Default noise scale shared by the Gaussian and split-peak scenarios.
pub const DEFAULT_SIGMA: f64 = 0.03;
/// Split-peak offset along the first asset.
pub const BIMODAL_OFFSET: f64 = 0.09;
/// Banana noise scale.
pub const BANANA_SIGMA: f64 = 0.015;
/// Banana curvature.
pub const BANANA_CURVATURE: f64 = 5.0;
/// Mean-cost ceiling for a cure verdict of `Approved`.
pub const CURE_BUDGET: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScenarioKind {
    Gaussian,
    SplitPeak,
    Banana,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::Gaussian, ScenarioKind::SplitPeak, ScenarioKind::Banana];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Gaussian => "gaussian",
            ScenarioKind::SplitPeak => "split_peak",
            ScenarioKind::Banana => "banana",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" => Some(ScenarioKind::Gaussian),
            "split_peak" | "bimodal" | "splitpeak" => Some(ScenarioKind::SplitPeak),
            "banana" => Some(ScenarioKind::Banana),
            _ => None,
        }
    }

    pub fn shape(self) -> KernelShape {
        match self {
            ScenarioKind::Gaussian => KernelShape::Gaussian { sigma: DEFAULT_SIGMA },
            ScenarioKind::SplitPeak => KernelShape::Bimodal { sigma: DEFAULT_SIGMA, offset: BIMODAL_OFFSET },
            ScenarioKind::Banana => KernelShape::Banana { sigma: BANANA_SIGMA, curvature: BANANA_CURVATURE },
        }
    }
}

/// One row of the three-way table: a kernel, a hub and a single half-space.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub shape: KernelShape,
    pub hub: Vec<f64>,
    pub constraint: LinearConstraint,
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    /// Evaluation lattice resolution for erosion, HDR and cure scans.
    pub resolution: u32,
    pub bandwidth: f64,
    pub budget: f64,
}

impl Scenario {
    pub fn preset(kind: ScenarioKind, seed: u64) -> Self {
        let (hub, bound) = match kind {
            ScenarioKind::Banana => (alloc::vec![0.32, 0.30, 0.38], "x1<=0.4"),
            _ => (alloc::vec![1.0 / 3.0; 3], "x1<=0.5"),
        };
        let shape = kind.shape();
        Self {
            kind,
            shape,
            hub,
            constraint: LinearConstraint::parse(bound, 3).expect("preset constraint parses"),
            epsilon: 0.05,
            samples: 4000,
            seed,
            resolution: 50,
            bandwidth: shape.sigma(),
            budget: CURE_BUDGET,
        }
    }

    /// Gaussian cloud whose hub sits about 1.7σ inside `x1 ≤ 0.5`.
    pub fn wasserstein(seed: u64) -> Self {
        let mut s = Self::preset(ScenarioKind::Gaussian, seed);
        s.hub = alloc::vec![0.45, 0.30, 0.25];
        s
    }

    pub fn with_constraint(mut self, c: LinearConstraint) -> Self {
        self.constraint = c;
        self
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::new(self.shape, self.samples, self.seed)
    }

    pub fn slice(&self) -> Result<LatticeSpace> {
        LatticeSpace::with_constraints(self.hub.len() - 1, self.resolution, alloc::vec![self.constraint.clone()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CureVerdict {
    Approved,
    Denied,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Safe => "Safe",
            Verdict::Rejected => "Rejected",
        })
    }
}

impl fmt::Display for CureVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CureVerdict::Approved => "Approved",
            CureVerdict::Denied => "Denied",
        })
    }
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Safe
    } else {
        Verdict::Rejected
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub scenario: ScenarioKind,
    pub constraint: String,
    pub radius: f64,
    pub eroded: usize,
    pub radius_verdict: Verdict,
    pub hdr_mass: f64,
    pub hdr_region: usize,
    pub hdr_verdict: Verdict,
    pub cure_cost: f64,
    pub violation_rate: f64,
    pub cure_verdict: CureVerdict,
}

impl fmt::Display for ComparisonRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({}): radius {} (r = {:.3}) | HDR {} ({} points) | Wasserstein {} (W1 = {:.4})",
            self.scenario.name(),
            self.constraint,
            self.radius_verdict,
            self.radius,
            self.hdr_verdict,
            self.hdr_region,
            self.cure_verdict,
            self.cure_cost
        )
    }
}

/// Evaluates one scenario under the radius, HDR and cure semantics on a shared cloud.
pub fn three_way_compare(s: &Scenario) -> Result<ComparisonRow> {
    let cloud = sample_kernel(&s.kernel(), &s.hub)?;
    let slice = s.slice()?;
    let radius = safety_radius(&cloud, &cloud.center, s.epsilon)?;
    let erosion = metric_pullback_check(&cloud.center, &slice, radius.r)?;
    let hdr = hdr_pullback_check(&cloud, &slice, s.epsilon, s.bandwidth)?;
    let cure = wasserstein_cure(&cloud, &slice, None)?;
    Ok(ComparisonRow {
        scenario: s.kind,
        constraint: alloc::format!("{}", s.constraint),
        radius: radius.r,
        eroded: erosion.eroded.len(),
        radius_verdict: verdict(erosion.accepted),
        hdr_mass: hdr.mass,
        hdr_region: hdr.region_size,
        hdr_verdict: verdict(hdr.robust),
        cure_cost: cure.mean_cost,
        violation_rate: cure.violation_rate,
        cure_verdict: if cure.mean_cost <= s.budget { CureVerdict::Approved } else { CureVerdict::Denied },
    })
}
