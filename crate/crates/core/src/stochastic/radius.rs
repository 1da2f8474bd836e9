use alloc::vec::Vec;

use num_traits::Float;

use super::SampleCloud;
use crate::error::{invalid, Result};
use crate::geometry::{l2, GridPoint, LatticeSpace};
use crate::optimize::ReimplMap;
use crate::relations::Relation;

/// `r_ε` with at least `⌈(1−ε)N⌉` samples inside `B(center, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyRadius {
    pub r: f64,
    pub epsilon: f64,
    pub center: Vec<f64>,
}

/// Nearest-rank `(1−ε)`-quantile of distances to `center`.
pub fn safety_radius(cloud: &SampleCloud, center: &[f64], epsilon: f64) -> Result<SafetyRadius> {
    if cloud.is_empty() {
        return Err(invalid!("empty sample cloud"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let mut d: Vec<f64> = cloud.samples.iter().map(|s| l2(s, center)).collect();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    // The 1e-9 slack keeps (1 − 0.05)·4000 from rounding up to 3801.
    let rank = (Float::ceil((1.0 - epsilon) * n as f64 - 1e-9) as usize).clamp(1, n);
    Ok(SafetyRadius { r: d[rank - 1], epsilon, center: center.to_vec() })
}

fn outside_points(slice: &LatticeSpace) -> Result<Vec<Vec<f64>>> {
    let ambient = slice.ambient()?;
    Ok(ambient
        .cells()
        .iter()
        .filter(|c| slice.index_of(c).is_none())
        .map(|c| c.weights().to_vec())
        .collect())
}

fn clear_of(outside: &[Vec<f64>], z: &[f64], r: f64) -> bool {
    outside.iter().all(|o| l2(o, z) > r)
}

/// Inner parallel set: points of `slice` with no outside lattice point within `r`.
pub fn erode(slice: &LatticeSpace, r: f64) -> Result<Vec<GridPoint>> {
    if !(r >= 0.0) {
        return Err(invalid!("radius must be non-negative"));
    }
    let outside = outside_points(slice)?;
    Ok(slice
        .points()
        .iter()
        .zip(slice.cells())
        .filter(|(_, c)| clear_of(&outside, c.weights(), r))
        .map(|(g, _)| g.clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErosionVerdict {
    pub accepted: bool,
    pub eroded: Vec<GridPoint>,
    pub radius: f64,
}

/// Accepts iff `center` satisfies the slice and no outside lattice point lies within `r` of it.
pub fn metric_pullback_check(center: &[f64], slice: &LatticeSpace, r: f64) -> Result<ErosionVerdict> {
    let eroded = erode(slice, r)?;
    let outside = outside_points(slice)?;
    let accepted = slice.contains_weights(center) && clear_of(&outside, center, r);
    Ok(ErosionVerdict { accepted, eroded, radius: r })
}

/// Minkowski dilation `{(y, z) : ∃(x, z) in R, ‖y − f(x)‖₂ ≤ r}`.
pub fn metric_pushforward(f: &ReimplMap, r: &Relation, radius: f64) -> Result<Relation> {
    Relation::metric_pushforward_of(f, r, radius)
}

/// `{(x, z) : every lattice y with ‖y − f(x)‖₂ ≤ r has (y, z) in S}`.
pub fn metric_pullback(f: &ReimplMap, s: &Relation, radius: f64) -> Result<Relation> {
    Relation::metric_pullback_of(f, s, radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusMode {
    Linear,
    Quadratic,
}

/// `L r_P + r_Q` or `sqrt((L r_P)² + r_Q²)`.
pub fn compose_radius(rp: f64, rq: f64, lipschitz: f64, mode: RadiusMode) -> Result<f64> {
    if !(rp >= 0.0 && rq >= 0.0) || !(lipschitz > 0.0) {
        return Err(invalid!("radii must be non-negative and L positive"));
    }
    Ok(match mode {
        RadiusMode::Linear => lipschitz * rp + rq,
        RadiusMode::Quadratic => Float::sqrt((lipschitz * rp) * (lipschitz * rp) + rq * rq),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LinearConstraint;
    use crate::stochastic::{sample_kernel, KernelShape, KernelSpec};
    use alloc::vec;

    fn cap(b: &str, n: u32) -> LatticeSpace {
        LatticeSpace::with_constraints(2, n, vec![LinearConstraint::parse(&alloc::format!("x1<={b}"), 3).unwrap()])
            .unwrap()
    }

    #[test]
    fn nearest_rank_quantile() {
        let cloud = SampleCloud {
            hub: vec![0.5, 0.5],
            center: vec![0.5, 0.5],
            samples: (1..=100).map(|i| vec![0.5 + i as f64 * 1e-3, 0.5 - i as f64 * 1e-3]).collect(),
            provenance: "ladder".into(),
        };
        let r = safety_radius(&cloud, &[0.5, 0.5], 0.05).unwrap();
        assert!((r.r - 95e-3 * Float::sqrt(2.0)).abs() < 1e-12);
        assert!(safety_radius(&cloud, &[0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn gaussian_radius_matches_chi_quantile() {
        let sigma = 0.03;
        let spec = KernelSpec::new(KernelShape::Gaussian { sigma }, 10_000, 2024);
        let x = [1.0 / 3.0; 3];
        let cloud = sample_kernel(&spec, &x).unwrap();
        let r = safety_radius(&cloud, &x, 0.05).unwrap().r;
        let oracle = sigma * Float::sqrt(2.0 * Float::ln(20.0));
        assert!((r / oracle - 1.0).abs() < 0.05, "r={r} oracle={oracle}");
    }

    #[test]
    fn zero_radius_erodes_nothing() {
        let s = cap("0.4", 50);
        assert_eq!(erode(&s, 0.0).unwrap(), s.points());
    }

    #[test]
    fn erosion_counts_step_with_the_radius() {
        let s = cap("0.4", 50);
        // Below the first outside distance sqrt(2)/50 nothing moves.
        assert_eq!(erode(&s, 0.028).unwrap().len(), 861);
        assert_eq!(erode(&s, 0.0734).unwrap().len(), 798);
        assert_eq!(erode(&s, 0.125).unwrap().len(), 700);
        assert_eq!(erode(&s, 0.13).unwrap().len(), 698);
    }

    #[test]
    fn radius_composition_formulas() {
        let lin = compose_radius(0.060, 0.049, 1.0, RadiusMode::Linear).unwrap();
        let quad = compose_radius(0.060, 0.049, 1.0, RadiusMode::Quadratic).unwrap();
        assert!((lin - 0.109).abs() < 1e-12);
        assert!((quad - 0.0775).abs() < 5e-4);
        assert_eq!(compose_radius(0.06, 0.0, 2.0, RadiusMode::Quadratic).unwrap(), 0.12);
        assert!(compose_radius(-0.1, 0.0, 1.0, RadiusMode::Linear).is_err());
    }
}
