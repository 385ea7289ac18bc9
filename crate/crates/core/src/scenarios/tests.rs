use super::*;
use crate::ambient::{WarpedProduct, WarpingProfile};
use crate::fiber::FiberChart;
use crate::hypersurface::{evaluate_geometry, DiscretizationConfig, Domain, GraphFamily, GraphImmersion};

const SPHERE: FiberChart = FiberChart::Sphere { scale: 1.0 };

fn geometry(profile: WarpingProfile, chart: FiberChart, n: usize, res: usize, fam: GraphFamily) -> GeometryGrid {
    let w = WarpedProduct::new(profile, chart, n);
    let imm = GraphImmersion::sample(&w, Domain::default_for(chart), res, &fam).unwrap();
    evaluate_geometry(&imm, &DiscretizationConfig::default()).unwrap()
}

fn slice(profile: WarpingProfile, chart: FiberChart, n: usize, t0: f64) -> GeometryGrid {
    geometry(profile, chart, n, 12, GraphFamily::Slice { t0 })
}

fn bump(t0: f64, amplitude: f64) -> GraphFamily {
    GraphFamily::Bump { t0, amplitude, width: 0.8, center: vec![1.0, 2.0] }
}

#[test]
fn slices_are_consistent_for_every_theorem() {
    let cases: Vec<(TheoremId, GeometryGrid, usize)> = vec![
        (TheoremId::CompactH2, slice(WarpingProfile::exponential(), SPHERE, 2, 0.3), 2),
        (TheoremId::CompleteH2, slice(WarpingProfile::cosh(), SPHERE, 2, 1.0), 2),
        (TheoremId::CompactHk, slice(WarpingProfile::cosh(), SPHERE, 3, 1.0), 3),
        (TheoremId::CompleteHk, slice(WarpingProfile::cosh(), SPHERE, 3, 1.0), 3),
        (TheoremId::CompactFiberCurvature, slice(WarpingProfile::cosh(), SPHERE, 2, 1.0), 2),
        (TheoremId::ParabolicFiberCurvature, slice(WarpingProfile::cosh(), SPHERE, 2, 1.0), 2),
        (TheoremId::ParabolicCmc, slice(WarpingProfile::cosh(), SPHERE, 2, 1.0), 1),
    ];
    for (id, geo, k) in cases {
        let r = theorem_audit(&geo, id, k).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent, "{id}: {r:#?}");
        assert!(!r.invariant_violation(), "{id}: {r:#?}");
        assert!(r.conclusions.iter().all(|c| c.pass));
        if id == TheoremId::CompactH2 {
            assert!(r.proof_lines.iter().any(|c| c.name == "lcal-sigma-extrema"));
            assert!(r.residuals.iter().all(|s| s.max < 1e-10));
        }
    }
}

#[test]
fn perturbed_slice_violates_constancy() {
    let geo = geometry(WarpingProfile::exponential(), FiberChart::Flat, 2, 24, bump(0.0, 0.05));
    let r = theorem_audit(&geo, TheoremId::CompactH2, 2).unwrap();
    assert_eq!(r.verdict, Verdict::HypothesisViolated);
    assert!(!r.hypothesis("h2-constant").unwrap().pass);
    assert!(r.conclusions.iter().any(|c| c.name == "slice" && !c.pass));
}

#[test]
fn orientation_flip_keeps_verdict() {
    for fam in [GraphFamily::Slice { t0: 0.4 }, bump(0.4, 0.05)] {
        let geo = geometry(WarpingProfile::cosh(), FiberChart::Flat, 2, 16, fam);
        for id in [TheoremId::CompactH2, TheoremId::CompleteH2, TheoremId::ParabolicCmc] {
            let k = id.orders(2).0;
            let a = theorem_audit(&geo, id, k).unwrap();
            let b = theorem_audit(&geo.flipped(), id, k).unwrap();
            assert_eq!(a.verdict, b.verdict, "{id}");
        }
    }
}

#[test]
fn mixed_theta_violates_sign_hypothesis() {
    let mut geo = slice(WarpingProfile::exponential(), SPHERE, 2, 0.2);
    let half = geo.nodes.len() / 2;
    for g in geo.nodes.iter_mut().take(half) {
        if let Some(p) = g.as_mut() {
            *p = p.flipped();
        }
    }
    let r = theorem_audit(&geo, TheoremId::CompactH2, 2).unwrap();
    assert_eq!(r.verdict, Verdict::HypothesisViolated);
    assert!(!r.hypothesis("theta-one-sign").unwrap().pass);
}

#[test]
fn patch_is_not_complete() {
    let w = WarpedProduct::new(WarpingProfile::cosh(), FiberChart::Flat, 2);
    let imm = GraphImmersion::sample(&w, Domain::FlatPatch { lo: -1.0, hi: 1.0 }, 16, &GraphFamily::Slice { t0: 1.0 })
        .unwrap();
    let geo = evaluate_geometry(&imm, &DiscretizationConfig::default()).unwrap();
    let r = theorem_audit(&geo, TheoremId::CompleteH2, 2).unwrap();
    assert!(!r.hypothesis("complete").unwrap().pass);
    assert_eq!(r.verdict, Verdict::HypothesisViolated);
}

#[test]
fn flat_ambient_slice_is_a_geodesic_sphere() {
    let geo = slice(WarpingProfile::linear(), SPHERE, 2, 1.5);
    let r = theorem_audit(&geo, TheoremId::CompactFiberCurvature, 2).unwrap();
    assert_eq!(r.verdict, Verdict::Consistent, "{r:#?}");
    let c = &r.conclusions[0];
    assert!(c.pass && c.detail.contains("umbilicity"));
}

#[test]
fn order_and_id_errors() {
    let geo = slice(WarpingProfile::cosh(), SPHERE, 2, 1.0);
    assert!(theorem_audit(&geo, TheoremId::CompactHk, 3).is_err());
    assert!(matches!("no-such-theorem".parse::<TheoremId>(), Err(Error::Config(_))));
    for id in TheoremId::ALL {
        assert_eq!(id.as_str().parse::<TheoremId>().unwrap(), id);
    }
}

#[test]
fn slice_saturates_estimates() {
    let geo = slice(WarpingProfile::cosh(), SPHERE, 3, 0.7);
    for k in 1..=3 {
        let r = curvature_estimate_scenario(&geo, k).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent, "{r:#?}");
        assert!(r.conclusions[0].margin.abs() < 1e-12, "k = {k}: {}", r.conclusions[0].margin);
    }
}

#[test]
fn random_graphs_respect_mean_curvature_estimate() {
    for seed in 0..10 {
        let fam = GraphFamily::random(FiberChart::Flat, 2, 0.0, 0.3, 2, seed);
        let geo = geometry(WarpingProfile::exponential(), FiberChart::Flat, 2, 24, fam);
        let r = curvature_estimate_scenario(&geo, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent, "seed {seed}");
        assert!(r.conclusions[0].margin >= -ESTIMATE_TOL);
    }
}

#[test]
fn saddle_has_no_elliptic_point() {
    let w = WarpedProduct::new(WarpingProfile::constant(1.0).unwrap(), FiberChart::Flat, 2);
    let imm = GraphImmersion::sample(
        &w,
        Domain::FlatPatch { lo: -1.0, hi: 1.0 },
        16,
        &GraphFamily::Saddle { t0: 0.0, a: 0.5 },
    )
    .unwrap();
    let geo = evaluate_geometry(&imm, &DiscretizationConfig::default()).unwrap();
    let e = elliptic_point_and_signs(&geo).unwrap();
    assert!(e.elliptic_node.is_none());
    assert!(e.sign_lemma.is_none());
    let r = curvature_estimate_scenario(&geo, 2).unwrap();
    assert_eq!(r.verdict, Verdict::HypothesisViolated);
}

#[test]
fn bump_sign_pattern() {
    let geo = geometry(WarpingProfile::exponential(), FiberChart::Flat, 2, 24, bump(0.0, 0.1));
    let e = elliptic_point_and_signs(&geo).unwrap();
    assert_eq!(e.theta_pattern, "theta <= 0");
    assert!((e.hcal_range.0 - 1.0).abs() < 1e-12 && (e.hcal_range.1 - 1.0).abs() < 1e-12);
    assert!(e.sign_lemma.unwrap().pass);

    let s = elliptic_point_and_signs(&slice(WarpingProfile::cosh(), SPHERE, 2, 0.5)).unwrap();
    assert_eq!(s.elliptic_node, Some(s.elliptic_node.unwrap()));
    assert_eq!(s.elliptic_sign, Some(1.0));
}

#[test]
fn parabolicity_examples() {
    let flat = RadialModel::flat(2, 1e4).unwrap();
    let p = parabolicity_integral(&flat, |_| 1.0, 1.0, 1000).unwrap();
    assert!(p.divergent);
    assert!((p.partial_integral - 1e4f64.ln() / (2.0 * std::f64::consts::PI)).abs() < 1e-8);

    let hyp = RadialModel::hyperbolic(2, 20.0).unwrap();
    let q = parabolicity_integral(&hyp, |_| 1.0, 1.0, 1000).unwrap();
    assert!(!q.divergent);

    let forced = parabolicity_integral(&hyp, |t| 1.0 / (2.0 * std::f64::consts::PI * t.sinh()), 1.0, 1000).unwrap();
    assert!(forced.divergent);
    assert!((forced.partial_integral - 19.0).abs() < 1e-8);

    assert!(matches!(parabolicity_integral(&hyp, |t| 1.0 - t, 0.5, 100), Err(Error::Degenerate(_))));
}

#[test]
fn sphere_volumes() {
    let pi = std::f64::consts::PI;
    assert_eq!(unit_sphere_volume(0), 2.0);
    assert!((unit_sphere_volume(1) - 2.0 * pi).abs() < 1e-14);
    assert!((unit_sphere_volume(2) - 4.0 * pi).abs() < 1e-14);
    assert!((unit_sphere_volume(3) - 2.0 * pi * pi).abs() < 1e-13);
}
