//! Divergence of the Newton tensors and the operator applied to the support
//! function `rho(h) theta`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{check_order, curvature_factor, frak_apply, hk, lk_apply, IdentityResidual};
use crate::ambient::curvature_tensor_with;
use crate::error::Result;
use crate::hypersurface::{GeometryGrid, PointGeometry};
use crate::linalg::binomial;

/// Columns are the frame vectors of the hypersurface pushed into the
/// ambient product frame.
pub(crate) fn push_matrix(g: &PointGeometry) -> DMatrix<f64> {
    let n = g.n();
    let mut j = DMatrix::zeros(n + 1, n);
    for a in 0..n {
        let mut e = DVector::zeros(n);
        e[a] = 1.0;
        j.set_column(a, &g.push_forward(&e));
    }
    j
}

/// `-(n-k) theta (kappa/rho^2 + hcal') P_{k-1} grad h` in frame components.
pub fn div_pk_closed(g: &PointGeometry, k: usize, kappa: f64) -> DVector<f64> {
    let n = g.n() as f64;
    &g.newton.p[k - 1] * &g.grad_h * (-(n - k as f64) * g.theta * curvature_factor(kappa, g))
}

/// `sum_j sum_i (-1)^{k-1-j} <R(E_i, A^{k-1-j} X) N, P_j E_i>` for each frame
/// vector `X`, from the ambient curvature tensor.
pub fn div_pk_curvature_sum(g: &PointGeometry, k: usize, kappa: f64) -> DVector<f64> {
    let n = g.n();
    let jac = push_matrix(g);
    let a = &g.newton.a;
    let mut out = DVector::zeros(n);
    let mut apow = vec![DMatrix::identity(n, n)];
    for m in 1..k {
        let next = a * &apow[m - 1];
        apow.push(next);
    }
    let pushed_p: Vec<DMatrix<f64>> = (0..k).map(|j| &jac * &g.newton.p[j]).collect();
    for l in 0..n {
        let mut total = 0.0;
        for j in 0..k {
            let m = k - 1 - j;
            let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
            let y = &jac * apow[m].column(l);
            for i in 0..n {
                let ei = jac.column(i).into_owned();
                let r = curvature_tensor_with(kappa, &g.warp, &ei, &y, &g.normal);
                total += sign * r.dot(&pushed_p[j].column(i));
            }
        }
        out[l] = total;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub k: usize,
    /// Differenced divergence against the closed form.
    pub differenced_vs_closed: IdentityResidual,
    /// Differenced divergence against the curvature sum.
    pub differenced_vs_curvature: IdentityResidual,
    /// Closed form against the curvature sum, algebraic.
    pub closed_vs_curvature: IdentityResidual,
    #[serde(skip)]
    pub differenced: Vec<Option<DVector<f64>>>,
    #[serde(skip)]
    pub closed: Vec<Option<DVector<f64>>>,
    #[serde(skip)]
    pub curvature_sum: Vec<Option<DVector<f64>>>,
}

impl DivergenceReport {
    pub fn into_vec(self) -> Vec<IdentityResidual> {
        vec![self.differenced_vs_closed, self.differenced_vs_curvature, self.closed_vs_curvature]
    }
}

/// Three evaluations of `div P_k` for `1 <= k <= n-1`. Every fiber chart
/// has constant curvature, so the closed form is always available.
pub fn div_pk(geo: &GeometryGrid, k: usize) -> Result<DivergenceReport> {
    check_order(k, 1, geo.n() - 1)?;
    let kappa = geo.ambient().kappa();
    let pk: Vec<_> = geo.nodes.iter().map(|g| g.as_ref().map(|g| g.newton.p[k].clone())).collect();
    let differenced = geo.divergence_endo(&pk);
    let closed: Vec<_> = geo.nodes.iter().map(|g| g.as_ref().map(|g| div_pk_closed(g, k, kappa))).collect();
    let curvature_sum: Vec<_> =
        geo.nodes.iter().map(|g| g.as_ref().map(|g| div_pk_curvature_sum(g, k, kappa))).collect();
    let diff = |a: &Option<DVector<f64>>, b: &Option<DVector<f64>>| Some((a.as_ref()? - b.as_ref()?).amax());
    Ok(DivergenceReport {
        k,
        differenced_vs_closed: IdentityResidual::over_audit(geo, "div-pk-closed", Some(k), |i, _| {
            diff(&differenced[i], &closed[i])
        }),
        differenced_vs_curvature: IdentityResidual::over_audit(geo, "div-pk-curvature-sum", Some(k), |i, _| {
            diff(&differenced[i], &curvature_sum[i])
        }),
        closed_vs_curvature: IdentityResidual::over_audit(geo, "div-pk-closed-vs-curvature", Some(k), |i, _| {
            diff(&closed[i], &curvature_sum[i])
        }),
        differenced,
        closed,
        curvature_sum,
    })
}

/// `div(P_k grad u) = <div P_k, grad u> + L_k u`, all terms differenced.
pub fn frak_split(geo: &GeometryGrid, k: usize, u: &[f64]) -> Result<IdentityResidual> {
    check_order(k, 0, geo.n() - 1)?;
    let lhs = frak_apply(geo, k, u)?;
    let lk = lk_apply(geo, k, u)?;
    let grad = geo.gradient_frame(u);
    let div = if k == 0 {
        geo.nodes.iter().map(|g| g.as_ref().map(|g| DVector::zeros(g.n()))).collect()
    } else {
        let pk: Vec<_> = geo.nodes.iter().map(|g| g.as_ref().map(|g| g.newton.p[k].clone())).collect();
        geo.divergence_endo(&pk)
    };
    Ok(IdentityResidual::over_audit(geo, "frak-split", Some(k), |i, _| {
        let rhs = div[i].as_ref()?.dot(grad[i].as_ref()?) + lk.values[i]?;
        Some((lhs.values[i]? - rhs).abs())
    }))
}

/// `beta_k = sum_i mu_{k,i} rho^2 <R_P(E_i*, N*) N*, E_i*>` over the
/// principal frame, with `*` the fiber part in the product frame.
pub fn beta_eigenframe(g: &PointGeometry, k: usize, kappa: f64) -> f64 {
    let mu = g.newton.newton_eigenvalues(k);
    let mut fiber_only = g.warp;
    fiber_only.hcal = 0.0;
    fiber_only.dhcal = 0.0;
    let strip = |v: DVector<f64>| {
        let mut v = v;
        v[0] = 0.0;
        v
    };
    let nstar = strip(g.normal.clone());
    let rho2 = g.warp.rho * g.warp.rho;
    (0..g.n())
        .map(|i| {
            let e = strip(g.push_forward(&g.newton.directions.column(i).into_owned()));
            let r = curvature_tensor_with(kappa, &fiber_only, &e, &nstar, &nstar);
            mu[i] * rho2 * r.dot(&e)
        })
        .sum()
}

/// `kappa (|grad h|^2 c_k H_k - <P_k grad h, grad h>)`.
pub fn beta_constant(g: &PointGeometry, k: usize, kappa: f64) -> f64 {
    kappa * (g.grad_h_norm2() * g.newton.pack.c[k] * hk(g, k) - g.newton_grad(k))
}

/// Terms of `L_k theta_hat` that do not involve the fiber curvature, with
/// `grad H_{k+1}` supplied.
fn theta_hat_common(g: &PointGeometry, k: usize, grad_hk1: &DVector<f64>) -> f64 {
    let n = g.n();
    let nf = n as f64;
    let b = binomial(n, k + 1);
    let th = g.theta_hat();
    -b * g.warp.rho * g.grad_h.dot(grad_hk1)
        - g.warp.drho * g.newton.pack.c[k] * hk(g, k + 1)
        - th * g.warp.dhcal * (g.grad_h_norm2() * g.newton.pack.c[k] * hk(g, k) - g.newton_grad(k))
        - th * b * (nf * hk(g, 1) * hk(g, k + 1) - (nf - k as f64 - 1.0) * hk(g, k + 2))
}

/// Closed form of `L_k theta_hat` over a fiber of constant curvature.
pub fn theta_hat_rhs_constant(g: &PointGeometry, k: usize, kappa: f64, grad_hk1: &DVector<f64>) -> f64 {
    theta_hat_common(g, k, grad_hk1)
        - g.theta_hat() * kappa / (g.warp.rho * g.warp.rho)
            * (g.grad_h_norm2() * g.newton.pack.c[k] * hk(g, k) - g.newton_grad(k))
}

/// The same with the fiber term written through `beta_k`.
pub fn theta_hat_rhs_beta(g: &PointGeometry, k: usize, beta: f64, grad_hk1: &DVector<f64>) -> f64 {
    theta_hat_common(g, k, grad_hk1) - g.theta_hat() / (g.warp.rho * g.warp.rho) * beta
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaHatReport {
    pub k: usize,
    /// `grad theta_hat + rho A grad h`.
    pub gradient: IdentityResidual,
    /// Differenced `L_k theta_hat` against the constant-curvature form.
    pub constant_curvature: IdentityResidual,
    /// Differenced `L_k theta_hat` against the `beta_k` form.
    pub general: IdentityResidual,
    /// `beta_k` from the principal frame against its constant-curvature value.
    pub beta_agreement: IdentityResidual,
}

impl ThetaHatReport {
    pub fn into_vec(self) -> Vec<IdentityResidual> {
        vec![self.gradient, self.constant_curvature, self.general, self.beta_agreement]
    }
}

/// `grad theta_hat = -rho A grad h` and the closed forms of `L_k theta_hat`,
/// `0 <= k <= n-1`.
pub fn theta_hat_identity(geo: &GeometryGrid, k: usize) -> Result<ThetaHatReport> {
    check_order(k, 0, geo.n() - 1)?;
    let kappa = geo.ambient().kappa();
    let th = geo.field(|g| g.theta_hat());
    let grad = geo.gradient_frame(&th);
    let lk = lk_apply(geo, k, &th)?;
    let hk1 = geo.field(|g| hk(g, k + 1));
    let ghk1 = geo.gradient_frame(&hk1);
    let gradient = IdentityResidual::over_audit(geo, "theta-hat-gradient", Some(k), |i, g| {
        let expect = &g.newton.a * &g.grad_h * (-g.warp.rho);
        Some((grad[i].as_ref()? - expect).amax())
    });
    let constant_curvature = IdentityResidual::over_audit(geo, "lk-theta-hat", Some(k), |i, g| {
        Some((lk.values[i]? - theta_hat_rhs_constant(g, k, kappa, ghk1[i].as_ref()?)).abs())
    });
    let general = IdentityResidual::over_audit(geo, "lk-theta-hat-beta", Some(k), |i, g| {
        let beta = beta_eigenframe(g, k, kappa);
        Some((lk.values[i]? - theta_hat_rhs_beta(g, k, beta, ghk1[i].as_ref()?)).abs())
    });
    let beta_agreement = IdentityResidual::over_audit(geo, "beta-eigenframe", Some(k), |_, g| {
        Some((beta_eigenframe(g, k, kappa) - beta_constant(g, k, kappa)).abs())
    });
    Ok(ThetaHatReport { k, gradient, constant_curvature, general, beta_agreement })
}
