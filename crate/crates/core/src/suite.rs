//! Batched verification suites: random Newton-tensor algebra, slice
//! exactness, the full identity suite with grid refinement, and ambient
//! curvature-tensor symmetries.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ambient::{curvature_tensor_with, sectional_closed_form, warping_local, WarpedProduct};
use crate::error::{Error, Result};
use crate::hypersurface::{
    evaluate_geometry, structure_identities, DiscretizationConfig, GeometryGrid, GraphFamily, GraphImmersion,
};
use crate::operators::{
    calligraphic_ops, div_pk, frak_phi, height_sigma_identities, identity_study, theta_hat_identity, IdentityResidual,
};
use crate::residual::ConvergenceVerdict;
use crate::symfun::{bk_telescope, calligraphic_recursion_residual, newton_family, trace_and_norm_identities};

pub const ALGEBRAIC_TOL: f64 = 1e-10;
pub const SLICE_TOL: f64 = 1e-10;
pub const CURVATURE_TOL: f64 = 1e-10;
pub const MIN_SLOPE: f64 = 1.9;

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraicSuiteReport {
    pub samples: usize,
    pub max_n: usize,
    pub seed: u64,
    pub trace_identities: f64,
    pub telescope: f64,
    pub recursion: f64,
    pub tol: f64,
    pub pass: bool,
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-2.0..2.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Trace and norm identities, `B_k` telescoping and one step of the mixed
/// Newton recursion on random symmetric matrices of size `1..=max_n`.
/// Residuals are relative to `max(1, |A|)^k` (and `max(1,|hcal|)^m` for
/// the recursion).
pub fn algebraic_suite(samples: usize, max_n: usize, seed: u64) -> Result<AlgebraicSuiteReport> {
    if max_n == 0 {
        return Err(Error::Config("algebraic suite needs max_n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut tr, mut tel, mut rec) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let n = rng.gen_range(1..=max_n);
        let a = random_symmetric(&mut rng, n);
        tr = tr.max(trace_and_norm_identities(&a)?.max_relative);
        for k in 1..=n {
            tel = tel.max(bk_telescope(&a, k)?.relative);
        }
        let fam = newton_family(&a)?;
        let hcal: f64 = rng.gen_range(-2.0..2.0);
        let theta = rng.gen_range(-1.0..1.0);
        let scale = a.norm().max(1.0) * f64::max(1.0, hcal.abs());
        for m in 1..n {
            let r = calligraphic_recursion_residual(&fam, m, hcal, theta)?;
            rec = rec.max(r / scale.powi(m as i32));
        }
    }
    let pass = tr <= ALGEBRAIC_TOL && tel <= ALGEBRAIC_TOL && rec <= ALGEBRAIC_TOL;
    Ok(AlgebraicSuiteReport {
        samples,
        max_n,
        seed,
        trace_identities: tr,
        telescope: tel,
        recursion: rec,
        tol: ALGEBRAIC_TOL,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceSuiteReport {
    pub profile: String,
    pub chart: String,
    pub n: usize,
    pub t0: f64,
    /// `max |H_k - hcal(t0)^k|` over audit nodes and `k`.
    pub hk_error: f64,
    /// `max |theta + 1|`.
    pub theta_error: f64,
    /// Both sides of each identity as separate entries.
    pub quantities: Vec<IdentityResidual>,
    /// Orders skipped for the four-term decomposition because `H_k <= 0`.
    pub decomposition_skipped: Vec<usize>,
    pub max: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Evaluates the slice `t = t0` and reports every quantity that must vanish.
pub fn slice_suite(w: &WarpedProduct, t0: f64, resolution: usize, tol: f64) -> Result<SliceSuiteReport> {
    let imm = GraphImmersion::sample(
        w,
        crate::hypersurface::Domain::default_for(w.chart),
        resolution,
        &GraphFamily::Slice { t0 },
    )?;
    let geo = evaluate_geometry(&imm, &DiscretizationConfig::default())?;
    let n = geo.n();
    let hcal = warping_local(&w.profile, t0)?.hcal;
    let mut hk_error = 0.0f64;
    let mut theta_error = 0.0f64;
    for (_, g) in geo.audited() {
        for k in 0..=n {
            hk_error = hk_error.max((g.newton.pack.h[k] - hcal.powi(k as i32)).abs());
        }
        theta_error = theta_error.max((g.theta + 1.0).abs());
    }
    let hess_h = |g: &crate::hypersurface::PointGeometry| g.height_hessian();
    let mut q = Vec::new();
    for k in 0..n {
        let p = |g: &crate::hypersurface::PointGeometry| g.newton.p[k].clone();
        q.push(IdentityResidual::over_audit(&geo, "lk-height-lhs", Some(k), |_, g| {
            Some(p(g).component_mul(&hess_h(g)).sum().abs())
        }));
        q.push(IdentityResidual::over_audit(&geo, "lk-height-rhs", Some(k), |_, g| {
            Some(crate::operators::height_rhs(g, k).abs())
        }));
        q.push(IdentityResidual::over_audit(&geo, "lk-sigma-lhs", Some(k), |_, g| {
            Some(p(g).component_mul(&g.sigma_hessian()).sum().abs())
        }));
        q.push(IdentityResidual::over_audit(&geo, "lk-sigma-rhs", Some(k), |_, g| {
            Some(crate::operators::sigma_rhs(g, k).abs())
        }));
        let hs = height_sigma_identities(&geo, k)?;
        q.push(hs.height_differenced);
        q.push(hs.sigma_differenced);
    }
    for k in 1..n {
        let d = div_pk(&geo, k)?;
        q.push(IdentityResidual::over_audit(&geo, "div-pk-closed-value", Some(k), |i, _| {
            d.closed[i].as_ref().map(|v| v.amax())
        }));
        q.push(IdentityResidual::over_audit(&geo, "div-pk-curvature-sum-value", Some(k), |i, _| {
            d.curvature_sum[i].as_ref().map(|v| v.amax())
        }));
    }
    for k in 2..=n {
        let c = calligraphic_ops(&geo, k)?;
        q.push(IdentityResidual::over_audit(&geo, "lcal-sigma-rhs", Some(k), |_, g| {
            Some(crate::operators::calligraphic_sigma_rhs(g, k).abs())
        }));
        q.push(c.analytic);
        q.push(c.recursion);
    }
    let mut decomposition_skipped = Vec::new();
    for k in 1..=n {
        let f = frak_phi(&geo, k)?;
        match f.decomposition {
            Some(d) => {
                q.push(IdentityResidual::over_audit(&geo, "frak-phi-lhs", Some(k), |i, _| f.lhs[i].map(f64::abs)));
                q.push(IdentityResidual::over_audit(&geo, "frak-phi-terms", Some(k), |i, _| {
                    f.terms[i].map(|t| t.iter().fold(0.0f64, |m, x| m.max(x.abs())))
                }));
                q.push(d);
            }
            None => decomposition_skipped.push(k),
        }
    }
    let max = q.iter().map(|r| r.max()).fold(hk_error.max(theta_error), f64::max);
    Ok(SliceSuiteReport {
        profile: w.profile.name.clone(),
        chart: w.chart.name().to_string(),
        n,
        t0,
        hk_error,
        theta_error,
        quantities: q,
        decomposition_skipped,
        max,
        tol,
        pass: max <= tol,
    })
}

/// Residuals whose both sides are closed-form; they must sit at the
/// exactness floor on every level rather than converge.
pub const ANALYTIC_IDS: [&str; 8] = [
    "gradient-norm",
    "tangent-projection",
    "lk-height-analytic",
    "lk-sigma-analytic",
    "div-pk-closed-vs-curvature",
    "beta-eigenframe",
    "lcal-sigma-analytic",
    "lcal-recursion",
];

/// The differenced residuals that carry the convergence claims: `hess h`,
/// `L_k h`, `L_k sigma`, `div P_k`, `L_k theta_hat` and the four-term
/// decomposition.
pub const CONVERGENCE_IDS: [&str; 7] =
    ["height-hessian", "lk-height", "lk-sigma", "div-pk-closed", "lk-theta-hat", "frak-phi", "lcal-sigma"];

/// Orders of the four-term decomposition kept in a study; fixed on the
/// coarsest level so every level reports the same list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuitePlan {
    pub frak_orders: Vec<usize>,
}

impl SuitePlan {
    pub fn for_geometry(geo: &GeometryGrid) -> Result<Self> {
        let mut frak_orders = Vec::new();
        for k in 1..=geo.n() {
            if frak_phi(geo, k)?.applicability.is_applicable() {
                frak_orders.push(k);
            }
        }
        Ok(Self { frak_orders })
    }
}

fn wrap(r: crate::residual::NodeResidual) -> IdentityResidual {
    IdentityResidual { id: r.name.clone(), k: r.k, per_node: Vec::new(), summary: r, convergence: None }
}

/// Every identity at every admissible order on one geometry.
pub fn identity_suite(geo: &GeometryGrid, plan: &SuitePlan) -> Result<Vec<IdentityResidual>> {
    let n = geo.n();
    let s = structure_identities(geo);
    let mut out = vec![wrap(s.gradient_norm), wrap(s.height_hessian), wrap(s.tangent_projection)];
    for k in 0..n {
        out.extend(height_sigma_identities(geo, k)?.into_vec());
    }
    for k in 1..n {
        out.extend(div_pk(geo, k)?.into_vec());
    }
    for k in 0..n {
        out.extend(theta_hat_identity(geo, k)?.into_vec());
    }
    for k in 2..=n {
        let c = calligraphic_ops(geo, k)?;
        out.extend([c.analytic, c.differenced, c.recursion]);
    }
    for &k in &plan.frak_orders {
        let d = frak_phi(geo, k)?.decomposition.ok_or_else(|| {
            Error::Degenerate(format!("four-term decomposition at k = {k} lost applicability under refinement"))
        })?;
        out.push(d);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityClass {
    Analytic,
    Differenced,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityVerdict {
    pub id: String,
    pub k: Option<usize>,
    pub class: IdentityClass,
    pub base_max: f64,
    pub slope: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySuiteReport {
    pub resolutions: Vec<usize>,
    pub plan: SuitePlan,
    pub residuals: Vec<IdentityResidual>,
    pub verdicts: Vec<IdentityVerdict>,
    pub analytic_tol: f64,
    pub min_slope: f64,
    pub pass: bool,
}

impl IdentitySuiteReport {
    pub fn verdict(&self, id: &str, k: Option<usize>) -> Option<&IdentityVerdict> {
        self.verdicts.iter().find(|v| v.id == id && v.k == k)
    }
}

/// Runs [`identity_suite`] on `levels` dyadic refinements of `imm`.
/// Analytic residuals pass at `analytic_tol`; differenced ones pass when
/// exact on every level or when their fitted slope reaches `min_slope`.
/// With a single level only the analytic tolerance is applied.
pub fn identity_suite_study(
    imm: &GraphImmersion,
    cfg: &DiscretizationConfig,
    levels: usize,
    analytic_tol: f64,
    min_slope: f64,
) -> Result<IdentitySuiteReport> {
    let base = evaluate_geometry(imm, cfg)?;
    let plan = SuitePlan::for_geometry(&base)?;
    drop(base);
    let residuals = identity_study(imm, cfg, levels, |geo| identity_suite(geo, &plan))?;
    let verdicts: Vec<IdentityVerdict> = residuals
        .iter()
        .map(|r| {
            let class = if ANALYTIC_IDS.contains(&r.id.as_str()) {
                IdentityClass::Analytic
            } else {
                IdentityClass::Differenced
            };
            let slope = r.slope();
            let pass = match (class, &r.convergence) {
                (IdentityClass::Analytic, Some(c)) => c.residuals.iter().all(|&x| x <= analytic_tol),
                (IdentityClass::Analytic, None) => r.max() <= analytic_tol,
                (IdentityClass::Differenced, Some(c)) => {
                    c.verdict == ConvergenceVerdict::Exact || slope.is_some_and(|s| s >= min_slope)
                }
                (IdentityClass::Differenced, None) => r.max().is_finite(),
            };
            IdentityVerdict { id: r.id.clone(), k: r.k, class, base_max: r.max(), slope, pass }
        })
        .collect();
    let resolutions = residuals
        .iter()
        .find_map(|r| r.convergence.as_ref().map(|c| c.resolutions.clone()))
        .unwrap_or_else(|| vec![imm.resolution()]);
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(IdentitySuiteReport { resolutions, plan, residuals, verdicts, analytic_tol, min_slope, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureSuiteReport {
    pub profile: String,
    pub chart: String,
    pub n: usize,
    pub pairs: usize,
    pub seed: u64,
    pub sectional_min: f64,
    pub sectional_max: f64,
    /// Sectional curvature from the tensor against the angle closed form.
    pub closed_form_error: f64,
    /// `R(u,v) = -R(v,u)`.
    pub antisymmetry: f64,
    /// `<R(u,v)x,y> = -<R(u,v)y,x>`.
    pub skew_adjoint: f64,
    /// `<R(u,v)x,y> = <R(x,y)u,v>`.
    pub pair_symmetry: f64,
    pub bianchi: f64,
    pub tol: f64,
    pub pass: bool,
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let nrm = v.norm();
        if nrm > 1e-3 {
            return v / nrm;
        }
    }
}

/// Random orthonormal pairs and random vector quadruples at random heights
/// in the profile's summary range. Symmetry residuals are relative to the
/// largest tensor component seen at that height.
pub fn curvature_suite(w: &WarpedProduct, pairs: usize, seed: u64) -> Result<CurvatureSuiteReport> {
    let dim = w.n + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = w.profile.summary_range;
    let kappa = w.kappa();
    let (mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut cf, mut anti, mut skew, mut pair, mut bianchi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..pairs {
        let t = rng.gen_range(lo..hi);
        let val = warping_local(&w.profile, t)?;
        let r = |a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>| curvature_tensor_with(kappa, &val, a, b, c);
        let u = random_unit(&mut rng, dim);
        let mut v = random_unit(&mut rng, dim);
        v -= &u * u.dot(&v);
        let v = v.normalize();
        let sec = r(&u, &v, &v).dot(&u);
        kmin = kmin.min(sec);
        kmax = kmax.max(sec);
        cf = cf.max((sec - sectional_closed_form(kappa, &val, u[0], v[0])).abs());
        let x = random_unit(&mut rng, dim);
        let y = random_unit(&mut rng, dim);
        let scale = (kappa / (val.rho * val.rho)).abs().max(val.hcal * val.hcal).max(val.dhcal.abs()).max(1.0);
        let ruvx = r(&u, &v, &x);
        anti = anti.max((&ruvx + r(&v, &u, &x)).amax() / scale);
        skew = skew.max((ruvx.dot(&y) + r(&u, &v, &y).dot(&x)).abs() / scale);
        pair = pair.max((ruvx.dot(&y) - r(&x, &y, &u).dot(&v)).abs() / scale);
        bianchi = bianchi.max((&ruvx + r(&v, &x, &u) + r(&x, &u, &v)).amax() / scale);
    }
    let tol = CURVATURE_TOL;
    let pass = cf <= tol && anti <= tol && skew <= tol && pair <= tol && bianchi <= tol;
    Ok(CurvatureSuiteReport {
        profile: w.profile.name.clone(),
        chart: w.chart.name().to_string(),
        n: w.n,
        pairs,
        seed,
        sectional_min: kmin,
        sectional_max: kmax,
        closed_form_error: cf,
        antisymmetry: anti,
        skew_adjoint: skew,
        pair_symmetry: pair,
        bianchi,
        tol,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{ProfileParams, ProfileRegistry, WarpingProfile};
    use crate::fiber::FiberChart;

    #[test]
    fn algebraic_suite_passes() {
        let r = algebraic_suite(200, 6, 3).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn slices_of_builtins_are_exact() {
        let reg = ProfileRegistry::builtin();
        for name in reg.names() {
            let p = reg.build(&name, &ProfileParams::default()).unwrap();
            let t0 = if name == "linear" { 1.5 } else { 0.5 };
            for chart in [FiberChart::Flat, FiberChart::Sphere { scale: 1.0 }] {
                let w = WarpedProduct::new(p.clone(), chart, 2);
                let r = slice_suite(&w, t0, 12, SLICE_TOL).unwrap();
                assert!(r.pass, "{name} {chart:?} max {:e}", r.max);
            }
        }
    }

    #[test]
    fn hyperbolic_space_has_constant_curvature() {
        let w = WarpedProduct::new(WarpingProfile::exponential(), FiberChart::Flat, 3);
        let r = curvature_suite(&w, 100, 1).unwrap();
        assert!(r.pass);
        assert!((r.sectional_min + 1.0).abs() < 1e-10 && (r.sectional_max + 1.0).abs() < 1e-10);
    }

    #[test]
    fn identity_suite_converges_on_a_random_graph() {
        let w = WarpedProduct::new(WarpingProfile::cosh(), FiberChart::Flat, 2);
        let fam = GraphFamily::random(FiberChart::Flat, 2, 0.5, 0.2, 1, 5);
        let imm =
            GraphImmersion::sample(&w, crate::hypersurface::Domain::default_for(FiberChart::Flat), 32, &fam).unwrap();
        let r = identity_suite_study(&imm, &DiscretizationConfig::default(), 3, SLICE_TOL, MIN_SLOPE).unwrap();
        for v in &r.verdicts {
            assert!(v.pass, "{v:?}");
        }
        for id in CONVERGENCE_IDS {
            assert!(r.verdicts.iter().any(|v| v.id == id), "{id}");
        }
    }
}
