use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_traits::Float;

use super::SampleCloud;
use crate::error::{invalid, Result};
use crate::geometry::{snap_largest_remainder, GridPoint, LatticeSpace};

/// Gaussian kernel density estimate at `y`, with in-plane dimension `len − 1`.
pub fn kde(samples: &[Vec<f64>], bandwidth: f64, y: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let d = y.len().saturating_sub(1).max(1) as i32;
    let two_h2 = 2.0 * bandwidth * bandwidth;
    let norm = Float::powi(Float::sqrt(core::f64::consts::PI * two_h2), d);
    let total: f64 = samples
        .iter()
        .map(|s| {
            let q: f64 = s.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            Float::exp(-q / two_h2)
        })
        .sum();
    total / (samples.len() as f64 * norm)
}

/// Superlevel set `{y : ρ̂(y) ≥ λ_ε}` on an evaluation lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrResult {
    pub threshold: f64,
    pub region: Vec<GridPoint>,
    pub bandwidth: f64,
    /// Fraction of samples with density at least the threshold.
    pub mass: f64,
    pub components: usize,
}

fn degenerate(cloud: &SampleCloud) -> bool {
    let first = &cloud.samples[0];
    cloud.samples.iter().all(|s| s == first)
}

/// `λ_ε` is the nearest-rank `ε`-quantile of `ρ̂` at the samples.
pub fn hdr(cloud: &SampleCloud, bandwidth: f64, epsilon: f64, eval: &LatticeSpace) -> Result<HdrResult> {
    if cloud.is_empty() {
        return Err(invalid!("empty sample cloud"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(invalid!("bandwidth must be positive"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    if cloud.samples[0].len() != eval.assets() {
        return Err(invalid!("cloud has {} assets, lattice {}", cloud.samples[0].len(), eval.assets()));
    }
    if degenerate(cloud) {
        let atom = snap_largest_remainder(&cloud.samples[0], eval.resolution())?;
        let region = if eval.index_of_grid(&atom).is_some() { alloc::vec![atom] } else { Vec::new() };
        let components = region.len();
        return Ok(HdrResult { threshold: f64::INFINITY, region, bandwidth, mass: 1.0, components });
    }
    let mut dens: Vec<f64> = cloud.samples.iter().map(|s| kde(&cloud.samples, bandwidth, s)).collect();
    dens.sort_by(f64::total_cmp);
    let n = dens.len();
    let k = (Float::floor(epsilon * n as f64) as usize).min(n - 1);
    let threshold = dens[k];
    let mass = dens.iter().filter(|d| **d >= threshold).count() as f64 / n as f64;
    let region: Vec<GridPoint> = eval
        .points()
        .iter()
        .zip(eval.cells())
        .filter(|(_, c)| kde(&cloud.samples, bandwidth, c.weights()) >= threshold)
        .map(|(g, _)| g.clone())
        .collect();
    let components = lattice_components(&region).len();
    Ok(HdrResult { threshold, region, bandwidth, mass, components })
}

/// Connected components under unit moves `e_i − e_j`.
pub fn lattice_components(points: &[GridPoint]) -> Vec<Vec<GridPoint>> {
    let index: BTreeMap<&[u32], usize> = points.iter().enumerate().map(|(i, p)| (p.coords(), i)).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for start in 0..points.len() {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = alloc::vec![start];
        while let Some(i) = stack.pop() {
            let c = points[i].coords();
            comp.push(points[i].clone());
            for a in 0..c.len() {
                for b in 0..c.len() {
                    if a == b || c[a] == 0 {
                        continue;
                    }
                    let mut nb = c.to_vec();
                    nb[a] -= 1;
                    nb[b] += 1;
                    if let Some(&j) = index.get(nb.as_slice()) {
                        if seen.insert(j) {
                            stack.push(j);
                        }
                    }
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdrCheck {
    /// Fraction of samples inside the slice.
    pub mass: f64,
    /// `mass ≥ 1 − ε`.
    pub accepted: bool,
    /// HDR region on the ambient lattice lies inside the slice.
    pub robust: bool,
    pub region_size: usize,
}

pub fn hdr_pullback_check(cloud: &SampleCloud, slice: &LatticeSpace, epsilon: f64, bandwidth: f64) -> Result<HdrCheck> {
    if cloud.is_empty() {
        return Err(invalid!("empty sample cloud"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let inside = cloud.samples.iter().filter(|s| slice.contains_weights(s)).count();
    let mass = inside as f64 / cloud.len() as f64;
    let ambient = slice.ambient()?;
    let region = hdr(cloud, bandwidth, epsilon, &ambient)?;
    let robust = region.region.iter().all(|g| slice.index_of_grid(g).is_some());
    Ok(HdrCheck { mass, accepted: mass >= 1.0 - epsilon, robust, region_size: region.region.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LinearConstraint;
    use crate::stochastic::{sample_kernel, KernelShape, KernelSpec};
    use alloc::vec;

    fn gp(c: &[u32], n: u32) -> GridPoint {
        GridPoint::new(c.to_vec(), n).unwrap()
    }

    #[test]
    fn kde_integrates_to_one_on_a_fine_line() {
        // One in-plane dimension: Riemann sum over Δ¹ with spacing √2/N.
        let samples = vec![vec![0.5, 0.5]];
        let n = 2000;
        let h = 0.03;
        let step = Float::sqrt(2.0) / n as f64;
        let total: f64 = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                kde(&samples, h, &[t, 1.0 - t]) * step
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn components_follow_unit_moves() {
        let pts = vec![gp(&[0, 0, 4], 4), gp(&[1, 0, 3], 4), gp(&[4, 0, 0], 4), gp(&[2, 0, 2], 4)];
        let comps = lattice_components(&pts);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].len(), 3);
    }

    #[test]
    fn region_shrinks_as_epsilon_grows() {
        let spec = KernelSpec::new(KernelShape::Gaussian { sigma: 0.03 }, 1000, 9);
        let cloud = sample_kernel(&spec, &[0.4, 0.3, 0.3]).unwrap();
        let eval = LatticeSpace::enumerate_simplex(2, 50).unwrap();
        let wide = hdr(&cloud, 0.03, 0.05, &eval).unwrap();
        let narrow = hdr(&cloud, 0.03, 0.20, &eval).unwrap();
        assert!(narrow.threshold >= wide.threshold);
        assert!(narrow.region.iter().all(|g| wide.region.contains(g)));
        assert!(wide.mass >= 0.95 && narrow.mass >= 0.80);
        assert_eq!(wide.components, 1);
    }

    #[test]
    fn point_mass_cloud_reports_its_atom() {
        let cloud = SampleCloud {
            hub: vec![0.5, 0.5],
            center: vec![0.5, 0.5],
            samples: vec![vec![0.5, 0.5]; 100],
            provenance: "atom".into(),
        };
        let eval = LatticeSpace::enumerate_simplex(1, 10).unwrap();
        let r = hdr(&cloud, 0.05, 0.05, &eval).unwrap();
        assert_eq!(r.region, vec![gp(&[5, 5], 10)]);
        assert_eq!(r.mass, 1.0);
    }

    #[test]
    fn full_simplex_accepts_and_deep_interior_accepts() {
        let spec = KernelSpec::new(KernelShape::Gaussian { sigma: 0.03 }, 500, 4);
        let cloud = sample_kernel(&spec, &[0.3, 0.35, 0.35]).unwrap();
        let full = LatticeSpace::enumerate_simplex(2, 30).unwrap();
        let c = hdr_pullback_check(&cloud, &full, 0.05, 0.03).unwrap();
        assert_eq!(c.mass, 1.0);
        assert!(c.accepted && c.robust);
        let cap = LatticeSpace::with_constraints(2, 30, vec![LinearConstraint::parse("x1<=0.9", 3).unwrap()]).unwrap();
        let c = hdr_pullback_check(&cloud, &cap, 0.05, 0.03).unwrap();
        assert!(c.accepted && c.robust);
    }
}
