use hubspoke_core::geometry::{LatticeSpace, LinearConstraint};
use hubspoke_core::stochastic::{
    compose_radius, draw, hdr, metric_pullback_check, safety_radius, sample_composed, sample_kernel, sample_rng,
    three_way_compare, wasserstein_cure, CureVerdict, KernelShape, KernelSpec, RadiusMode, Scenario, ScenarioKind,
    Verdict,
};

const HUB: [f64; 3] = [1.0 / 3.0; 3];

fn cap(text: &str, n: u32) -> LatticeSpace {
    LatticeSpace::with_constraints(2, n, vec![LinearConstraint::parse(text, 3).unwrap()]).unwrap()
}

fn radius(kind: ScenarioKind, seed: u64) -> f64 {
    let s = Scenario::preset(kind, seed);
    let cloud = sample_kernel(&s.kernel(), &s.hub).unwrap();
    safety_radius(&cloud, &s.hub, 0.05).unwrap().r
}

#[test]
fn shape_radii_are_ordered_on_every_seed() {
    for seed in 0..10 {
        let (g, b, n) =
            (radius(ScenarioKind::Gaussian, seed), radius(ScenarioKind::SplitPeak, seed), radius(ScenarioKind::Banana, seed));
        assert!(g < b && b < n, "seed {seed}: {g} {b} {n}");
        assert!((0.063..=0.085).contains(&g));
    }
}

#[test]
fn banana_hub_is_rejected_with_seven_hundred_survivors() {
    let slice = cap("x1<=0.4", 50);
    for seed in 0..10 {
        let s = Scenario::preset(ScenarioKind::Banana, seed);
        let r = radius(ScenarioKind::Banana, seed);
        let v = metric_pullback_check(&s.hub, &slice, r).unwrap();
        assert!(!v.accepted, "seed {seed}");
        assert!(v.eroded.len().abs_diff(700) <= 5, "seed {seed}: {}", v.eroded.len());
    }
    let g = radius(ScenarioKind::Gaussian, 42);
    assert_eq!(metric_pullback_check(&HUB, &slice, g).unwrap().eroded.len(), 798);
}

#[test]
fn measured_composed_radius_sits_between_the_formulas() {
    let p = KernelSpec::new(KernelShape::Gaussian { sigma: 0.025 }, 4000, 42);
    let q = KernelSpec::new(KernelShape::Gaussian { sigma: 0.020 }, 4000, 1042);
    let rp = safety_radius(&sample_kernel(&p, &HUB).unwrap(), &HUB, 0.05).unwrap().r;
    let rq = safety_radius(&sample_kernel(&q, &HUB).unwrap(), &HUB, 0.05).unwrap().r;
    let measured = safety_radius(&sample_composed(&p, &q, &HUB).unwrap(), &HUB, 0.05).unwrap().r;
    assert!((rp / 0.060 - 1.0).abs() <= 0.10 && (rq / 0.049 - 1.0).abs() <= 0.10);
    assert!((measured / 0.080 - 1.0).abs() <= 0.10);
    assert!(compose_radius(rp, rq, 1.0, RadiusMode::Linear).unwrap() >= measured);
}

#[test]
fn calibrated_cure_lands_in_the_band() {
    let s = Scenario::wasserstein(42);
    let cloud = sample_kernel(&s.kernel(), &s.hub).unwrap();
    let slice = s.slice().unwrap();
    let cure = wasserstein_cure(&cloud, &slice, None).unwrap();
    assert!((0.015..=0.045).contains(&cure.violation_rate), "{}", cure.violation_rate);
    assert!((0.008..=0.023).contains(&cure.lattice_w1), "{}", cure.lattice_w1);
    assert!(cure.mean_cost > 0.0 && cure.mean_cost < cure.lattice_w1);
    let unit = wasserstein_cure(&cloud, &slice, Some(&[1.0, 1.0, 1.0])).unwrap();
    assert_eq!(unit.mean_cost, cure.mean_cost);
}

#[test]
fn split_peak_hdr_separates_and_nests() {
    let s = Scenario::preset(ScenarioKind::SplitPeak, 42);
    let cloud = sample_kernel(&s.kernel(), &s.hub).unwrap();
    let eval = LatticeSpace::enumerate_simplex(2, 50).unwrap();
    let wide = hdr(&cloud, s.bandwidth, 0.05, &eval).unwrap();
    let core = hdr(&cloud, s.bandwidth, 0.20, &eval).unwrap();
    assert!(core.components >= 2);
    assert!(core.region.iter().all(|p| wide.region.contains(p)));
    assert!(core.region.len() < wide.region.len());
}

#[test]
fn three_way_table_matches_the_reference_pattern() {
    let want = [
        (ScenarioKind::Gaussian, Verdict::Safe),
        (ScenarioKind::SplitPeak, Verdict::Safe),
        (ScenarioKind::Banana, Verdict::Rejected),
    ];
    for (kind, radius_verdict) in want {
        let row = three_way_compare(&Scenario::preset(kind, 42)).unwrap();
        assert_eq!(row.radius_verdict, radius_verdict, "{row}");
        assert_eq!(row.hdr_verdict, Verdict::Safe, "{row}");
        assert_eq!(row.cure_verdict, CureVerdict::Approved, "{row}");
    }
}

#[test]
fn two_stage_acceptance_implies_composite_acceptance() {
    let (delta, eps) = (0.10, 0.05);
    let p = KernelShape::Gaussian { sigma: 0.03 };
    let q = KernelShape::Gaussian { sigma: 0.02 };
    let inside = |w: &[f64]| w[0] <= 0.5 + 1e-12;
    let mut decisive = 0;
    for (k, x0) in [0.30, 0.36, 0.40, 0.42, 0.44, 0.47].iter().enumerate() {
        let hub = [*x0, (1.0 - x0) / 2.0, (1.0 - x0) / 2.0];
        let mut per_stage = Vec::new();
        for i in 0..300u64 {
            let y = draw(&p, &hub, &mut sample_rng(k as u64, i));
            let hits = (0..300u64).filter(|j| inside(&draw(&q, &y, &mut sample_rng(1000 + i, *j)))).count();
            per_stage.push(hits as f64 / 300.0);
        }
        let first = per_stage.iter().filter(|m| **m >= 1.0 - eps).count() as f64 / 300.0;
        let composite = per_stage.iter().sum::<f64>() / 300.0;
        if first >= 1.0 - delta {
            decisive += 1;
            assert!(composite >= 1.0 - delta - eps, "hub {x0}: {composite}");
        }
    }
    assert!(decisive >= 2);
}
