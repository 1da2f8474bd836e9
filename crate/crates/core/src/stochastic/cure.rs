use alloc::vec::Vec;

use super::SampleCloud;
use crate::error::{invalid, Error, Result};
use crate::geometry::{check_finite, LatticeSpace, LinearConstraint, Sense};

/// Monte Carlo cure budget: expected minimal L1 turnover into the constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct CureResult {
    /// Mean of `per_sample`; zero exactly when every sample complies.
    pub mean_cost: f64,
    /// `0` for compliant samples, distance to the nearest compliant point otherwise.
    pub per_sample: Vec<f64>,
    pub violation_rate: f64,
    /// Mean distance from every sample to its nearest constraint-lattice point.
    pub lattice_w1: f64,
}

fn weighted_l1(a: &[f64], b: &[f64], tau: Option<&[f64]>) -> f64 {
    match tau {
        Some(t) => a.iter().zip(b).zip(t).map(|((x, y), w)| w * (x - y).abs()).sum(),
        None => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
    }
}

/// Exhaustive minimum of `d_τ(y, z)` over the lattice points of `s`.
pub fn lattice_cure_cost(y: &[f64], s: &LatticeSpace, tau: Option<&[f64]>) -> f64 {
    s.cells().iter().map(|z| weighted_l1(y, z.weights(), tau)).fold(f64::INFINITY, f64::min)
}

/// Continuous L1 distance from `y` to `{w in Δ : c(w)}` for one half-space, by greedy mass transfer.
///
/// `None` when the simplex slice is empty.
pub fn halfspace_cure_cost(y: &[f64], c: &LinearConstraint) -> Option<f64> {
    let sign = match c.sense() {
        Sense::Le => 1.0,
        Sense::Ge => -1.0,
        Sense::Eq => return None,
    };
    let a: Vec<f64> = c.coeffs_f64().iter().map(|v| sign * v).collect();
    let b = sign * c.bound_f64();
    let mut excess: f64 = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>() - b;
    if excess <= 0.0 {
        return Some(0.0);
    }
    let (sink, &a_min) = a.iter().enumerate().min_by(|p, q| p.1.total_cmp(q.1))?;
    let mut order: Vec<usize> = (0..a.len()).filter(|&i| i != sink && a[i] > a_min).collect();
    order.sort_by(|&i, &j| a[j].total_cmp(&a[i]));
    let mut moved = 0.0;
    for i in order {
        let gain = a[i] - a_min;
        let t = y[i].min(excess / gain);
        moved += t;
        excess -= t * gain;
        if excess <= 1e-15 {
            return Some(2.0 * moved);
        }
    }
    None
}

fn fast_path<'a>(s: &'a LatticeSpace, tau: Option<&[f64]>) -> Option<&'a LinearConstraint> {
    let unit = tau.is_none_or(|t| t.iter().all(|w| *w == 1.0));
    match s.constraints() {
        [c] if unit && !s.is_carved() && c.sense() != Sense::Eq => Some(c),
        _ => None,
    }
}

/// Cure cost of `cloud` against `s`, with optional per-asset weights `τ`.
pub fn wasserstein_cure(cloud: &SampleCloud, s: &LatticeSpace, tau: Option<&[f64]>) -> Result<CureResult> {
    if s.is_empty() {
        return Err(Error::Infeasible("constraint set has no lattice points".into()));
    }
    if cloud.is_empty() {
        return Err(invalid!("empty sample cloud"));
    }
    if let Some(t) = tau {
        check_finite(t, "weights")?;
        if t.len() != s.assets() || t.iter().any(|w| *w <= 0.0) {
            return Err(invalid!("weights must be {} positive numbers", s.assets()));
        }
    }
    // Unit weights take the unweighted path so the two agree bit for bit.
    let tau = tau.filter(|t| t.iter().any(|w| *w != 1.0));
    let fast = fast_path(s, tau);
    let mut per_sample = Vec::with_capacity(cloud.len());
    let mut w1 = 0.0;
    let mut violations = 0usize;
    for y in &cloud.samples {
        let nearest = lattice_cure_cost(y, s, tau);
        w1 += nearest;
        if s.contains_weights(y) {
            per_sample.push(0.0);
            continue;
        }
        violations += 1;
        per_sample.push(fast.and_then(|c| halfspace_cure_cost(y, c)).unwrap_or(nearest));
    }
    let n = cloud.len() as f64;
    Ok(CureResult {
        mean_cost: per_sample.iter().sum::<f64>() / n,
        per_sample,
        violation_rate: violations as f64 / n,
        lattice_w1: w1 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{sample_kernel, KernelShape, KernelSpec};
    use alloc::format;
    use alloc::vec;

    fn cap(b: f64, n: u32) -> LatticeSpace {
        LatticeSpace::with_constraints(2, n, vec![LinearConstraint::parse(&format!("x1<={b}"), 3).unwrap()]).unwrap()
    }

    fn cloud() -> SampleCloud {
        let spec = KernelSpec::new(KernelShape::Gaussian { sigma: 0.03 }, 1000, 42);
        sample_kernel(&spec, &[0.45, 0.30, 0.25]).unwrap()
    }

    #[test]
    fn halfspace_oracle_is_twice_the_excess() {
        let c = LinearConstraint::parse("x1<=0.5", 3).unwrap();
        let cost = halfspace_cure_cost(&[0.6, 0.3, 0.1], &c).unwrap();
        assert!((cost - 0.2).abs() < 1e-12);
        assert_eq!(halfspace_cure_cost(&[0.4, 0.3, 0.3], &c), Some(0.0));
        let fee = LinearConstraint::parse("10x1+5x2<=6", 3).unwrap();
        // Excess 1.5: move 0.15 from x1 to x3 (gain 10 each).
        let cost = halfspace_cure_cost(&[0.6, 0.3, 0.1], &fee).unwrap();
        assert!((cost - 0.3).abs() < 1e-12);
    }

    #[test]
    fn fast_path_agrees_with_the_lattice_scan() {
        let n = 50;
        let s = cap(0.5, n);
        for y in cloud().samples.iter().filter(|y| !s.contains_weights(y)) {
            let exact = halfspace_cure_cost(y, &s.constraints()[0]).unwrap();
            let scan = lattice_cure_cost(y, &s, None);
            assert!(scan >= exact - 1e-12);
            assert!(scan - exact <= 2.0 / n as f64 + 1e-12, "{scan} vs {exact}");
        }
    }

    #[test]
    fn compliant_cloud_costs_nothing() {
        let r = wasserstein_cure(&cloud(), &cap(1.0, 50), None).unwrap();
        assert_eq!(r.mean_cost, 0.0);
        assert_eq!(r.violation_rate, 0.0);
        assert!(r.per_sample.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn cost_is_zero_exactly_on_compliant_samples() {
        let s = cap(0.5, 50);
        let c = cloud();
        let r = wasserstein_cure(&c, &s, None).unwrap();
        for (y, cost) in c.samples.iter().zip(&r.per_sample) {
            assert_eq!(*cost == 0.0, s.contains_weights(y));
        }
        let mean = r.per_sample.iter().sum::<f64>() / r.per_sample.len() as f64;
        assert_eq!(mean, r.mean_cost);
    }

    #[test]
    fn unit_weights_match_unweighted() {
        let s = cap(0.5, 50);
        let a = wasserstein_cure(&cloud(), &s, None).unwrap();
        let b = wasserstein_cure(&cloud(), &s, Some(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn relaxing_the_bound_lowers_cost_by_at_most_two_h() {
        let c = cloud();
        let h = 0.02;
        for tau in [None, Some(&[2.0, 1.0, 0.5][..])] {
            let tight = wasserstein_cure(&c, &cap(0.46, 50), tau).unwrap().mean_cost;
            let loose = wasserstein_cure(&c, &cap(0.48, 50), tau).unwrap().mean_cost;
            let slope = tau.map_or(2.0, |t| t.iter().sum());
            assert!(loose <= tight + 1e-12 && tight - loose <= slope * h + 1e-12);
        }
    }

    #[test]
    fn rejects_empty_sets_and_bad_weights() {
        let empty = LatticeSpace::enumerate_simplex(2, 10).unwrap().carve(|_| false);
        assert!(matches!(wasserstein_cure(&cloud(), &empty, None), Err(Error::Infeasible(_))));
        assert!(wasserstein_cure(&cloud(), &cap(0.5, 10), Some(&[1.0, -1.0, 1.0])).is_err());
        assert!(wasserstein_cure(&cloud(), &cap(0.5, 10), Some(&[1.0, 1.0])).is_err());
    }
}
