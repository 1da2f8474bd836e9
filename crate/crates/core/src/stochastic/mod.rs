//! Stochastic re-implementations and three compliance semantics for them.

mod compare;
mod cure;
mod hdr;
mod radius;

pub use compare::{
    three_way_compare, ComparisonRow, CureVerdict, Scenario, ScenarioKind, Verdict, BANANA_CURVATURE, BANANA_SIGMA,
    BIMODAL_OFFSET, CURE_BUDGET, DEFAULT_SIGMA,
};
pub use cure::{halfspace_cure_cost, lattice_cure_cost, wasserstein_cure, CureResult};
pub use hdr::{hdr, hdr_pullback_check, kde, lattice_components, HdrCheck, HdrResult};
pub use radius::{
    compose_radius, erode, metric_pullback, metric_pullback_check, metric_pushforward, safety_radius, ErosionVerdict,
    RadiusMode, SafetyRadius,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::geometry::in_simplex;
use crate::optimize::ReimplMap;

/// Smallest Monte Carlo sample size accepted.
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelShape {
    /// `x + σξ`.
    Gaussian { sigma: f64 },
    /// Equal mixture of `x ± δ e₁` plus `σξ`.
    Bimodal { sigma: f64, offset: f64 },
    /// `x + (t, κt² + η, −(t + κt² + η))`, `t ~ N(0, (3σ)²)`, `η ~ N(0, σ²)`.
    Banana { sigma: f64, curvature: f64 },
}

impl KernelShape {
    pub fn sigma(&self) -> f64 {
        match *self {
            KernelShape::Gaussian { sigma } | KernelShape::Bimodal { sigma, .. } | KernelShape::Banana { sigma, .. } => {
                sigma
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelShape::Gaussian { .. } => "gaussian",
            KernelShape::Bimodal { .. } => "bimodal",
            KernelShape::Banana { .. } => "banana",
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub shape: KernelShape,
    /// Deterministic centre map; identity when absent.
    pub center: Option<ReimplMap>,
    pub samples: usize,
    pub seed: u64,
}

impl KernelSpec {
    pub fn new(shape: KernelShape, samples: usize, seed: u64) -> Self {
        Self { shape, center: None, samples, seed }
    }

    fn validate(&self) -> Result<()> {
        let sigma = self.shape.sigma();
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid!("sigma must be positive, got {sigma}"));
        }
        if self.samples < MIN_SAMPLES {
            return Err(invalid!("need at least {MIN_SAMPLES} samples, got {}", self.samples));
        }
        match self.shape {
            KernelShape::Bimodal { offset, .. } if !offset.is_finite() => Err(invalid!("offset must be finite")),
            KernelShape::Banana { curvature, .. } if !curvature.is_finite() => {
                Err(invalid!("curvature must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Monte Carlo realization of `P(x, ·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    pub hub: Vec<f64>,
    pub center: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub provenance: String,
}

impl SampleCloud {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Generator for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// One draw of `shape` around `center`, projected onto the simplex.
pub fn draw(shape: &KernelShape, center: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v = center.to_vec();
    match *shape {
        KernelShape::Gaussian { sigma } => {
            for c in v.iter_mut() {
                *c += sigma * normal(rng);
            }
        }
        KernelShape::Bimodal { sigma, offset } => {
            let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
            v[0] += side * offset;
            for c in v.iter_mut() {
                *c += sigma * normal(rng);
            }
        }
        KernelShape::Banana { sigma, curvature } => {
            let t = 3.0 * sigma * normal(rng);
            let eta = sigma * normal(rng);
            let bend = curvature * t * t + eta;
            v[0] += t;
            v[1] += bend;
            v[2] -= t + bend;
        }
    }
    project_to_simplex(&v)
}

/// Sample cloud for `spec` at hub `x`; sample `i` uses its own stream, so order never matters.
pub fn sample_kernel(spec: &KernelSpec, x: &[f64]) -> Result<SampleCloud> {
    spec.validate()?;
    if !in_simplex(x) {
        return Err(invalid!("hub {x:?} is not on the simplex"));
    }
    if matches!(spec.shape, KernelShape::Banana { .. }) && x.len() < 3 {
        return Err(invalid!("the banana kernel needs at least three assets"));
    }
    let center = match &spec.center {
        Some(f) => f.apply(x),
        None => x.to_vec(),
    };
    let samples =
        (0..spec.samples).map(|i| draw(&spec.shape, &center, &mut sample_rng(spec.seed, i as u64))).collect();
    Ok(SampleCloud {
        hub: x.to_vec(),
        center,
        samples,
        provenance: format!("{:?} n={} seed={}", spec.shape, spec.samples, spec.seed),
    })
}

/// Two-stage cloud: `y ~ P(x)`, then `z ~ Q(y)`, with stream `i` of each seed.
pub fn sample_composed(p: &KernelSpec, q: &KernelSpec, x: &[f64]) -> Result<SampleCloud> {
    p.validate()?;
    q.validate()?;
    if p.samples != q.samples {
        return Err(invalid!("composed kernels need equal sample counts"));
    }
    let first = sample_kernel(p, x)?;
    let samples = first
        .samples
        .iter()
        .enumerate()
        .map(|(i, y)| draw(&q.shape, y, &mut sample_rng(q.seed, i as u64)))
        .collect();
    Ok(SampleCloud {
        hub: x.to_vec(),
        center: first.center,
        samples,
        provenance: format!("{} then {:?} seed={}", first.provenance, q.shape, q.seed),
    })
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    // Renormalize the rounding residue so sums stay within 1e-12.
    let s: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= s;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use num_traits::Float;

    #[test]
    fn projection_fixes_simplex_points() {
        let x = [0.2, 0.3, 0.5];
        let p = project_to_simplex(&x);
        for (a, b) in p.iter().zip(x) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(project_to_simplex(&[2.0, 0.0, 0.0]), vec![1.0, 0.0, 0.0]);
        let q = project_to_simplex(&[0.5, 0.5, 0.5]);
        assert!(q.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn vanishing_noise_keeps_the_hub() {
        let x = [0.45, 0.30, 0.25];
        let spec = KernelSpec::new(KernelShape::Gaussian { sigma: 1e-9 }, 200, 7);
        let cloud = sample_kernel(&spec, &x).unwrap();
        for s in &cloud.samples {
            assert!(crate::geometry::linf(s, &x) < 1e-6);
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_order_free() {
        let spec = KernelSpec::new(KernelShape::Bimodal { sigma: 0.03, offset: 0.09 }, 300, 11);
        let a = sample_kernel(&spec, &[0.3, 0.3, 0.4]).unwrap();
        let b = sample_kernel(&spec, &[0.3, 0.3, 0.4]).unwrap();
        assert_eq!(a, b);
        let lone = draw(&spec.shape, &a.center, &mut sample_rng(11, 123));
        assert_eq!(lone, a.samples[123]);
    }

    #[test]
    fn in_plane_spread_matches_projected_gaussian() {
        // An interior iid Gaussian projects to its in-plane part: per-coordinate variance σ²(1 − 1/3).
        let sigma = 0.03;
        let spec = KernelSpec::new(KernelShape::Gaussian { sigma }, 20_000, 3);
        let x = [1.0 / 3.0; 3];
        let cloud = sample_kernel(&spec, &x).unwrap();
        let n = cloud.len() as f64;
        let mean = cloud.samples.iter().map(|s| s[0]).sum::<f64>() / n;
        let var = cloud.samples.iter().map(|s| (s[0] - mean) * (s[0] - mean)).sum::<f64>() / n;
        let want = sigma * Float::sqrt(2.0 / 3.0);
        assert!((Float::sqrt(var) / want - 1.0).abs() < 0.03);
    }

    #[test]
    fn bimodal_modes_sit_two_offsets_apart() {
        let offset = 0.09;
        let spec = KernelSpec::new(KernelShape::Bimodal { sigma: 0.01, offset }, 4000, 5);
        let cloud = sample_kernel(&spec, &[1.0 / 3.0; 3]).unwrap();
        let c = cloud.center[0];
        let (hi, lo): (Vec<f64>, Vec<f64>) = cloud.samples.iter().map(|s| s[0]).partition(|v| *v > c);
        let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        // Projection keeps 2/3 of a shift along one coordinate.
        let gap = m(&hi) - m(&lo);
        assert!((gap / (2.0 * offset * 2.0 / 3.0) - 1.0).abs() < 0.05, "gap {gap}");
        let near_centre = cloud.samples.iter().filter(|s| (s[0] - c).abs() < 0.01).count();
        assert!(near_centre < cloud.len() / 50);
    }

    #[test]
    fn rejects_bad_specs() {
        let x = [0.5, 0.5, 0.0];
        assert!(sample_kernel(&KernelSpec::new(KernelShape::Gaussian { sigma: 0.0 }, 100, 1), &x).is_err());
        assert!(sample_kernel(&KernelSpec::new(KernelShape::Gaussian { sigma: 0.1 }, 99, 1), &x).is_err());
        assert!(sample_kernel(&KernelSpec::new(KernelShape::Gaussian { sigma: 0.1 }, 100, 1), &[0.6, 0.6]).is_err());
    }
}
