use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use warpcurv::ambient::{
    curvature_tensor, sectional_closed_form, sectional_curvature, sigma, sigma_by_quadrature, slice_geometry,
    warping_local, Orientation, WarpedProduct, WarpingProfile,
};
use warpcurv::fiber::FiberChart;
use warpcurv::symfun::{
    bk_telescope, calligraphic_newton, calligraphic_recursion_residual, elementary_symmetric, garding_chain,
    newton_family, p1_ellipticity_check, trace_and_norm_identities,
};

fn symmetric(max_n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| {
            let m = DMatrix::from_vec(n, n, v);
            (&m + m.transpose()) * 0.5
        })
    })
}

/// `S_k` as a sum over all `k`-subsets.
fn subset_sum(kappa: &[f64], k: usize) -> f64 {
    let n = kappa.len();
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| kappa[i]).product::<f64>())
        .sum()
}

fn scale(a: &DMatrix<f64>) -> f64 {
    a.norm().max(1.0)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn elementary_symmetric_matches_subset_sums(kappa in prop::collection::vec(-3.0f64..3.0, 1..=7)) {
        let p = elementary_symmetric(&kappa);
        for k in 0..=kappa.len() {
            let e = subset_sum(&kappa, k);
            prop_assert!((p.s[k] - e).abs() <= 1e-12 * 3f64.powi(k as i32) * 100.0, "k = {k}: {} vs {e}", p.s[k]);
        }
    }

    #[test]
    fn trace_identities_hold(a in symmetric(6)) {
        let r = trace_and_norm_identities(&a).unwrap();
        prop_assert!(r.max_relative < 1e-10, "{r:?}");
    }

    #[test]
    fn newton_tensors_are_diagonal_in_principal_frame(a in symmetric(6)) {
        let fam = newton_family(&a).unwrap();
        for k in 0..=fam.n() {
            let d = fam.directions.transpose() * fam.pk(k) * &fam.directions;
            let mu = fam.newton_eigenvalues(k);
            let tol = 1e-9 * scale(&a).powi(k as i32);
            for i in 0..fam.n() {
                prop_assert!((d[(i, i)] - mu[i]).abs() <= tol);
                for j in 0..fam.n() {
                    if i != j {
                        prop_assert!(d[(i, j)].abs() <= tol);
                    }
                }
            }
        }
    }

    #[test]
    fn flipped_family_is_family_of_negation(a in symmetric(5)) {
        let fam = newton_family(&a).unwrap();
        let flip = fam.flipped();
        let direct = newton_family(&(-&a)).unwrap();
        for k in 0..=fam.n() {
            let tol = 1e-10 * scale(&a).powi(k as i32);
            prop_assert!(max_abs(&(flip.pk(k) - direct.pk(k))) <= tol);
            prop_assert!((flip.pack.s[k] - direct.pack.s[k]).abs() <= tol);
        }
        for (x, y) in flip.kappa.iter().zip(&direct.kappa) {
            prop_assert!((x - y).abs() <= 1e-10 * scale(&a));
        }
    }

    #[test]
    fn telescope_recovers_previous_newton_tensor(a in symmetric(6)) {
        for k in 1..=a.nrows() {
            prop_assert!(bk_telescope(&a, k).unwrap().relative < 1e-10);
        }
    }

    #[test]
    fn garding_chain_in_positive_cone(kappa in prop::collection::vec(0.01f64..3.0, 2..=6)) {
        for k in 1..=kappa.len() {
            let r = garding_chain(&kappa, k).unwrap();
            prop_assert!(r.applicability.is_applicable());
            prop_assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn p1_positive_when_h2_positive(a in symmetric(6)) {
        prop_assume!(a.nrows() >= 2);
        let r = p1_ellipticity_check(&a).unwrap();
        prop_assert!(r.prediction_residual <= 1e-9 * scale(&a));
        if r.applicability.is_applicable() && r.h2 > 1e-6 {
            prop_assert!(r.positive_definite, "{r:?}");
        }
    }

    #[test]
    fn calligraphic_recursion_holds(a in symmetric(6), hcal in -2.0f64..2.0, theta in -1.0f64..1.0) {
        let fam = newton_family(&a).unwrap();
        for m in 1..fam.n() {
            let s = (scale(&a) * hcal.abs().max(1.0)).powi(m as i32);
            prop_assert!(calligraphic_recursion_residual(&fam, m, hcal, theta).unwrap() <= 1e-10 * s);
        }
        if fam.n() > 1 {
            let q0 = calligraphic_newton(&fam, 0, hcal, theta).unwrap();
            prop_assert!(max_abs(&(q0 - DMatrix::identity(fam.n(), fam.n()))) == 0.0);
        }
    }
}

fn profiles() -> Vec<WarpingProfile> {
    vec![
        WarpingProfile::exponential(),
        WarpingProfile::cosh(),
        WarpingProfile::linear(),
        WarpingProfile::sine(0.3).unwrap(),
        WarpingProfile::constant(2.0).unwrap(),
    ]
}

fn charts() -> Vec<FiberChart> {
    vec![FiberChart::Flat, FiberChart::Sphere { scale: 1.5 }, FiberChart::Hyperbolic { scale: 0.7 }]
}

fn ambient_case() -> impl Strategy<Value = (WarpedProduct, f64)> {
    (0..5usize, 0..3usize, 2..=4usize, 0.2f64..3.0)
        .prop_map(|(p, c, n, t)| (WarpedProduct::new(profiles().swap_remove(p), charts().swap_remove(c), n), t))
}

fn vectors(count: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), count)
}

fn gram_schmidt(u: &DVector<f64>, v: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let e1 = u.normalize();
    let w = v - &e1 * e1.dot(v);
    (u.norm() > 0.1 && w.norm() > 0.1).then(|| (e1, w.normalize()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn curvature_tensor_symmetries((w, t) in ambient_case(), raw in vectors(4)) {
        let dim = w.n + 1;
        let v: Vec<DVector<f64>> = raw.iter().map(|r| DVector::from_column_slice(&r[..dim])).collect();
        let r = |a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>| curvature_tensor(&w, t, a, b, c).unwrap();
        let rm = |a, b, c, d: &DVector<f64>| r(a, b, c).dot(d);
        let val = warping_local(&w.profile, t).unwrap();
        let tol = 1e-12 * (1.0 + val.hcal.powi(2) + val.dhcal.abs() + w.kappa().abs() / val.rho.powi(2));
        let (x, y, z, u) = (&v[0], &v[1], &v[2], &v[3]);
        prop_assert!((r(x, y, z) + r(y, x, z)).amax() <= tol);
        prop_assert!((rm(x, y, z, u) + rm(x, y, u, z)).abs() <= tol);
        prop_assert!((rm(x, y, z, u) - rm(z, u, x, y)).abs() <= tol);
        prop_assert!((r(x, y, z) + r(y, z, x) + r(z, x, y)).amax() <= tol);
    }

    #[test]
    fn sectional_curvature_matches_angle_formula((w, t) in ambient_case(), raw in vectors(2)) {
        let dim = w.n + 1;
        let (u, v) = match gram_schmidt(&DVector::from_column_slice(&raw[0][..dim]), &DVector::from_column_slice(&raw[1][..dim])) {
            Some(p) => p,
            None => return Ok(()),
        };
        let val = warping_local(&w.profile, t).unwrap();
        let k = sectional_curvature(&w, t, &u, &v).unwrap();
        let closed = sectional_closed_form(w.kappa(), &val, u[0], v[0]);
        prop_assert!((k - closed).abs() <= 1e-12 * (1.0 + closed.abs()), "{k} vs {closed}");
    }

    #[test]
    fn sigma_closed_forms_match_quadrature(p in 0..4usize, t in 0.1f64..4.0) {
        let prof = profiles().swap_remove(p);
        let a = sigma(&prof, t);
        let b = sigma_by_quadrature(&prof, t);
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        // sigma' = rho
        let h = 1e-5;
        let fd = (sigma(&prof, t + h) - sigma(&prof, t - h)) / (2.0 * h);
        prop_assert!((fd - prof.triple(t)[0]).abs() <= 1e-6 * prof.triple(t)[0].max(1.0));
    }

    #[test]
    fn slices_are_umbilic_with_hcal_curvatures((w, t) in ambient_case(), up in any::<bool>()) {
        let o = if up { Orientation::Up } else { Orientation::Down };
        let s = slice_geometry(&w, t, o).unwrap();
        let flipped = slice_geometry(&w, t, o.flipped()).unwrap();
        let kappa = o.sign() * s.values.hcal;
        for k in 0..=w.n {
            prop_assert!((s.pack.h[k] - kappa.powi(k as i32)).abs() <= 1e-12 * kappa.abs().max(1.0).powi(k as i32));
            let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((flipped.pack.h[k] - parity * s.pack.h[k]).abs() <= 1e-12 * kappa.abs().max(1.0).powi(k as i32));
        }
        prop_assert_eq!(s.theta, -flipped.theta);
    }
}
