use warpcurv::ambient::{WarpedProduct, WarpingProfile};
use warpcurv::fiber::FiberChart;
use warpcurv::hypersurface::{DiscretizationConfig, Domain, GraphFamily, GraphImmersion};
use warpcurv::residual::ConvergenceVerdict;
use warpcurv::suite::{identity_suite_study, IdentityClass, CONVERGENCE_IDS, MIN_SLOPE, SLICE_TOL};

fn immersion(profile: WarpingProfile, chart: FiberChart, family: GraphFamily, resolution: usize) -> GraphImmersion {
    let w = WarpedProduct::new(profile, chart, 2);
    GraphImmersion::sample(&w, Domain::default_for(chart), resolution, &family).unwrap()
}

#[test]
fn random_torus_graph_converges_at_second_order() {
    let fam = GraphFamily::random(FiberChart::Flat, 2, 0.0, 0.2, 1, 11);
    let imm = immersion(WarpingProfile::exponential(), FiberChart::Flat, fam, 32);
    let r = identity_suite_study(&imm, &DiscretizationConfig::default(), 3, SLICE_TOL, MIN_SLOPE).unwrap();
    assert_eq!(r.resolutions, vec![32, 64, 128]);
    for id in CONVERGENCE_IDS {
        let vs: Vec<_> = r.verdicts.iter().filter(|v| v.id == id).collect();
        assert!(!vs.is_empty(), "{id}");
        for v in vs {
            assert_eq!(v.class, IdentityClass::Differenced);
            assert!(v.slope.unwrap() >= MIN_SLOPE, "{id} k={:?}: {:?}", v.k, v.slope);
        }
    }
    assert!(r.pass);
}

#[test]
fn residuals_shrink_monotonically_under_refinement() {
    let fam = GraphFamily::random(FiberChart::Sphere { scale: 1.0 }, 2, 0.6, 0.2, 1, 4);
    let imm = immersion(WarpingProfile::cosh(), FiberChart::Sphere { scale: 1.0 }, fam, 32);
    let r = identity_suite_study(&imm, &DiscretizationConfig::default(), 3, SLICE_TOL, MIN_SLOPE).unwrap();
    for res in r.residuals.iter().filter(|x| CONVERGENCE_IDS.contains(&x.id.as_str())) {
        let c = res.convergence.as_ref().unwrap();
        assert!(c.residuals.windows(2).all(|w| w[1] < w[0] / 3.0), "{} {:?}", res.id, c.residuals);
    }
    assert!(r.pass);
}

#[test]
fn slice_residuals_are_exact_or_analytic() {
    let chart = FiberChart::Sphere { scale: 1.0 };
    let imm = immersion(WarpingProfile::cosh(), chart, GraphFamily::Slice { t0: 0.7 }, 16);
    let r = identity_suite_study(&imm, &DiscretizationConfig::default(), 3, SLICE_TOL, MIN_SLOPE).unwrap();
    for res in &r.residuals {
        if let Some(c) = &res.convergence {
            let exact = c.verdict == ConvergenceVerdict::Exact;
            let tiny = c.residuals.iter().all(|&x| x <= SLICE_TOL);
            assert!(exact || tiny, "{} {:?}", res.id, c.residuals);
        }
    }
    assert!(r.pass);
}
