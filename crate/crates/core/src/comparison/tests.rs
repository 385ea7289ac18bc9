use super::*;

#[test]
fn unit_growth_gives_sinh() {
    let sol = solve_comparison(&GrowthFunction::constant(1.0), 10.0, 1000).unwrap();
    for (i, &t) in sol.t.iter().enumerate() {
        assert!(((sol.phi[i] - t.sinh()) / t.sinh()).abs() < 1e-8, "t = {t}");
        assert!(((sol.psi[i] - t.exp_m1()) / t.exp_m1()).abs() < 1e-10);
    }
    let i = sol.t.iter().position(|&t| (t - 1.0).abs() < 1e-12).unwrap();
    assert!((sol.phi_ratio(i) - 1.0 / 1f64.tanh()).abs() < 1e-8);
    assert!((sol.psi_ratio(i) - 1f64.exp() / 1f64.exp_m1()).abs() < 1e-10);
    assert!(sol.sturm_holds);
}

#[test]
fn scaled_constant_growth() {
    let c = 1.7;
    let sol = solve_comparison(&GrowthFunction::constant(c * c), 6.0, 300).unwrap();
    for (i, &t) in sol.t.iter().enumerate() {
        let exact = (c * t).sinh() / c;
        assert!(((sol.phi[i] - exact) / exact).abs() < 1e-8);
    }
}

#[test]
fn initial_slopes() {
    for g in [GrowthFunction::constant(1.0), GrowthFunction::one_plus_square()] {
        let sol = solve_comparison(&g, 1e-3, 10).unwrap();
        assert!((sol.phi[0] / sol.t[0] - 1.0).abs() < 1e-6);
        assert!((sol.psi[0] / sol.t[0] - 1.0).abs() < 1e-4);
    }
}

#[test]
fn sturm_on_quadratic_growth() {
    let sol = solve_comparison(&GrowthFunction::one_plus_square(), 8.0, 2000).unwrap();
    assert!(sol.sturm_holds, "margin {}", sol.sturm_margin);
    assert!(sol.psi_supersolution_min > 0.0);
    assert!(sol.psi_constant >= 1.0 && sol.psi_constant < 1.0 + 1e-3);
    // the Riccati quantity of the Sturm solution is not sign-definite
    assert!(sol.riccati_min < 0.0);
}

#[test]
fn negative_growth_rejected() {
    let g = GrowthFunction::custom("negative", |_| -1.0, |_| 0.0, true);
    assert!(solve_comparison(&g, 1.0, 10).is_err());
    let r = check_cond_g(&g, 5.0, 100).unwrap();
    assert!(!r.pass());
    assert_eq!(r.checks.len(), 1);
}

#[test]
fn cond_g_examples() {
    let unit = check_cond_g(&GrowthFunction::constant(1.0), 50.0, 500).unwrap();
    assert!(unit.check("g0-positive").unwrap().pass);
    assert!(unit.check("g-nondecreasing").unwrap().pass);
    assert!(unit.check("inverse-root-divergent").unwrap().pass);
    // t G(sqrt t) / G(t) = t for constant G
    let q = unit.check("quadratic-ratio-bounded").unwrap();
    assert!(!q.pass && (q.value - 1.0).abs() < 1e-12);

    let quad = check_cond_g(&GrowthFunction::one_plus_square(), 100.0, 1000).unwrap();
    assert!(quad.pass(), "{quad:?}");

    let exp = check_cond_g(&GrowthFunction::exp_square(), 5.0, 500).unwrap();
    assert!(!exp.check("inverse-root-divergent").unwrap().pass);
    let total = GrowthFunction::exp_square().inverse_root_integral(5.0);
    assert!((total - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-6);
}

#[test]
fn barrier_identity_half_coefficient() {
    for (g, t) in [(GrowthFunction::constant(1.0), 10.0), (GrowthFunction::one_plus_square(), 10.0)] {
        let b = barrier_identity(&g, t, 2000).unwrap();
        assert!(b.curvature_min >= -1e-8);
        assert!(b.half_form_error < 1e-12);
        assert!(b.differenced_half_error < 1e-4, "{}", b.differenced_half_error);
    }
    let b = barrier_identity(&GrowthFunction::one_plus_square(), 10.0, 2000).unwrap();
    assert!(b.differenced_two_error > 0.1);
    assert!(b.ratio_constant.unwrap() < 1.5);
}

#[test]
fn hessian_comparison_examples() {
    let unit = GrowthFunction::constant(1.0);
    let hyp = hessian_comparison_check(&RadialModel::hyperbolic(2, 5.0).unwrap(), &unit, 500).unwrap();
    assert!(hyp.applicability.is_applicable());
    assert!(hyp.shape_holds.unwrap());
    assert!(hyp.shape_margin.unwrap().abs() < 1e-8);
    let c = hyp.gamma_constant.unwrap();
    assert!((c - 2.0 / 2.5f64.tanh()).abs() < 1e-9);

    let flat = hessian_comparison_check(&RadialModel::flat(3, 5.0).unwrap(), &unit, 500).unwrap();
    assert!(flat.shape_holds.unwrap() && flat.shape_margin.unwrap() > 0.0);

    let scaled = hessian_comparison_check(&RadialModel::hyperbolic_scaled(2, 5.0).unwrap(), &unit, 500).unwrap();
    assert!(!scaled.applicability.is_applicable());
    assert!((scaled.curvature_margin + 3.0).abs() < 1e-9);
}

#[test]
fn omori_yau_tanh() {
    let model = RadialModel::hyperbolic(2, 8.0).unwrap();
    let p = omori_yau_probe(&model, &RadialFunction::tanh(), &GrowthFunction::constant(1.0), &ProbeOptions::default())
        .unwrap();
    assert_eq!(p.records.len(), 20);
    assert!(p.gap_decreasing && p.gradient_decreasing && p.below_bound, "{p:#?}");
    assert!(!p.unbounded_warning);
    // first-order condition sinh(2r) r = j for the unit barrier
    for rec in &p.records {
        let foc = (2.0 * rec.r).sinh() * rec.r - rec.j as f64;
        assert!(foc.abs() < 1e-5, "{rec:?} {foc:e}");
        let r = rec.r;
        let lap = (1.0 / r.cosh().powi(2)) * (1.0 / r.tanh() - 2.0 * r.tanh());
        assert!((rec.lu - lap).abs() < 1e-12);
    }
}

#[test]
fn omori_yau_origin_normalization() {
    let model = RadialModel::hyperbolic(2, 8.0).unwrap();
    let opts = ProbeOptions { base: BasePoint::Origin, ..ProbeOptions::default() };
    let p = omori_yau_probe(&model, &RadialFunction::tanh(), &GrowthFunction::constant(1.0), &opts).unwrap();
    assert!(!p.below_bound);
    assert!(p.records[0].lu > 1.0);
    assert!(p.gap_decreasing && p.gradient_decreasing);
}

#[test]
fn omori_yau_degenerate_fields() {
    let model = RadialModel::hyperbolic(3, 4.0).unwrap();
    let unit = GrowthFunction::constant(1.0);
    let opts = ProbeOptions { base: BasePoint::Origin, ..ProbeOptions::default() };
    let c = omori_yau_probe(&model, &RadialFunction::constant(2.0), &unit, &opts).unwrap();
    for rec in &c.records {
        assert_eq!((rec.r, rec.gap, rec.gradient, rec.lu), (0.0, 0.0, 0.0, 0.0));
    }

    let bump =
        omori_yau_probe(&model, &RadialFunction::inverted_parabola(1.0), &unit, &ProbeOptions::default()).unwrap();
    let last = bump.records.last().unwrap();
    assert!((last.r - 1.0).abs() < 0.1);
    assert!(last.lu <= 0.0);
}

#[test]
fn trace_operator_with_identity_matches_laplacian() {
    let model = RadialModel::hyperbolic(3, 8.0).unwrap();
    let unit = GrowthFunction::constant(1.0);
    let a = omori_yau_probe(&model, &RadialFunction::tanh(), &unit, &ProbeOptions::default()).unwrap();
    let opts = ProbeOptions { operator: ProbeOperator::Trace { mu_r: 1.0, mu_t: 1.0 }, ..ProbeOptions::default() };
    let b = omori_yau_probe(&model, &RadialFunction::tanh(), &unit, &opts).unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.lu.to_bits(), y.lu.to_bits());
        assert_eq!(x.r.to_bits(), y.r.to_bits());
    }
}

#[test]
fn unbounded_field_flagged() {
    let model = RadialModel::flat(2, 3.0).unwrap();
    let u = RadialFunction::new("r", |r| [r, 1.0, 0.0]);
    let opts = ProbeOptions { jmax: 3, ..ProbeOptions::default() };
    let p = omori_yau_probe(&model, &u, &GrowthFunction::constant(1.0), &opts).unwrap();
    assert!(p.unbounded_warning);
}

#[test]
fn registry() {
    assert!(GrowthFunction::by_name("unit").is_ok());
    assert_eq!(GrowthFunction::by_name("constant:4").unwrap().g(3.0), 4.0);
    assert!(matches!(GrowthFunction::by_name("cubic"), Err(Error::UnknownProfile { .. })));
    assert!(RadialModel::by_name("hyperbolic", 2, 1.0).is_ok());
    assert!(RadialModel::new("bad", 2, RadialFunction::new("cosh", |r| [r.cosh(), r.sinh(), r.cosh()]), 1.0).is_err());
}
