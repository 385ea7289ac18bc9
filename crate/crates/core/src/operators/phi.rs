//! The mixed Newton family `Q_{k-1}` acting on `sigma(h)` and the
//! decomposition of `div(P_{k-1} grad phi)` for
//! `phi = H_k^{1/k} sigma(h) + rho(h) theta`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::divergence::div_pk_closed;
use super::{check_order, curvature_factor, hk, IdentityResidual, OperatorField, OperatorKind};
use crate::error::Result;
use crate::hypersurface::{GeometryGrid, PointGeometry};
use crate::linalg::{binomial, jacobi_eigen};
use crate::symfun::{calligraphic_newton, calligraphic_recursion_residual, Applicability};

/// Values below `-SIGN_TOL` count as negative in sign audits.
pub const SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct CalligraphicReport {
    pub k: usize,
    /// `Tr(Q_{k-1} hess sigma)` with the closed-form Hessian.
    pub analytic: IdentityResidual,
    /// The same with the differenced Hessian.
    pub differenced: IdentityResidual,
    /// One step of the recursion in `k`.
    pub recursion: IdentityResidual,
    pub min_eigenvalue: f64,
    /// Nodes where `theta <= 0`, `hcal(h) >= 0` and `P_j > 0` for `j < k`.
    pub hypothesis_nodes: usize,
    pub audit_nodes: usize,
    /// Smallest eigenvalue of `Q_{k-1}` over the hypothesis nodes.
    pub min_eigenvalue_under_hypotheses: Option<f64>,
    /// No hypothesis node has a negative eigenvalue.
    pub consistent: bool,
    #[serde(skip)]
    pub field: Vec<Option<DMatrix<f64>>>,
}

/// `c_{k-1} rho (hcal^k + (-1)^{k-1} theta^k H_k)`.
pub fn calligraphic_sigma_rhs(g: &PointGeometry, k: usize) -> f64 {
    let sign = if (k - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    g.newton.pack.c[k - 1] * g.warp.rho * (g.warp.hcal.powi(k as i32) + sign * g.theta.powi(k as i32) * hk(g, k))
}

fn min_eigen(m: &DMatrix<f64>) -> f64 {
    jacobi_eigen(m).map(|e| e.values[0]).unwrap_or(f64::NAN)
}

/// Builds `Q_{k-1}` per node for `2 <= k <= n` and audits its action on
/// `sigma(h)` and its sign.
pub fn calligraphic_ops(geo: &GeometryGrid, k: usize) -> Result<CalligraphicReport> {
    let n = geo.n();
    check_order(k, 2, n)?;
    let field: Vec<Option<DMatrix<f64>>> = geo
        .nodes
        .iter()
        .map(|g| g.as_ref().and_then(|g| calligraphic_newton(&g.newton, k - 1, g.warp.hcal, g.theta).ok()))
        .collect();
    let s = geo.field(|g| g.warp.sigma);
    let hess = geo.hessian_frame(&s);
    let analytic = IdentityResidual::over_audit(geo, "lcal-sigma-analytic", Some(k), |i, g| {
        Some((field[i].as_ref()?.component_mul(&g.sigma_hessian()).sum() - calligraphic_sigma_rhs(g, k)).abs())
    });
    let differenced = IdentityResidual::over_audit(geo, "lcal-sigma", Some(k), |i, g| {
        Some((field[i].as_ref()?.component_mul(hess[i].as_ref()?).sum() - calligraphic_sigma_rhs(g, k)).abs())
    });
    let recursion = IdentityResidual::over_audit(geo, "lcal-recursion", Some(k), |_, g| {
        calligraphic_recursion_residual(&g.newton, k - 1, g.warp.hcal, g.theta).ok()
    });
    let mut min_eigenvalue = f64::INFINITY;
    let mut hyp_min: Option<f64> = None;
    let mut hypothesis_nodes = 0;
    let mut audit_nodes = 0;
    for (i, g) in geo.audited() {
        let Some(q) = &field[i] else { continue };
        audit_nodes += 1;
        let e = min_eigen(q);
        min_eigenvalue = min_eigenvalue.min(e);
        let elliptic = (0..k).all(|j| g.newton.newton_eigenvalues(j).iter().all(|&m| m > 0.0));
        if g.theta <= 0.0 && g.warp.hcal >= 0.0 && elliptic {
            hypothesis_nodes += 1;
            hyp_min = Some(hyp_min.map_or(e, |m: f64| m.min(e)));
        }
    }
    let consistent = hyp_min.is_none_or(|m| m >= -SIGN_TOL);
    Ok(CalligraphicReport {
        k,
        analytic,
        differenced,
        recursion,
        min_eigenvalue,
        hypothesis_nodes,
        audit_nodes,
        min_eigenvalue_under_hypotheses: hyp_min,
        consistent,
        field,
    })
}

/// `Tr(Q_{k-1} hess u)` with the differenced Hessian.
pub fn calligraphic_apply(geo: &GeometryGrid, k: usize, u: &[f64]) -> Result<OperatorField> {
    check_order(k, 2, geo.n())?;
    let hess = geo.hessian_frame(u);
    let values = geo
        .nodes
        .iter()
        .zip(hess)
        .map(|(g, h)| {
            let g = g.as_ref()?;
            let q = calligraphic_newton(&g.newton, k - 1, g.warp.hcal, g.theta).ok()?;
            Some(q.component_mul(&h?).sum())
        })
        .collect();
    Ok(OperatorField { kind: OperatorKind::Lcal, k, values })
}

/// Labels of the four displayed terms of the decomposition.
pub const FRAK_TERMS: [&str; 4] = ["garding-gap", "newton-maclaurin", "p-top-gradient", "p-below-gradient"];

#[derive(Debug, Clone, Serialize)]
pub struct TermSigns {
    pub term: String,
    pub min: f64,
    pub negative_nodes: usize,
    /// Nodes where the hypotheses for this term hold.
    pub hypothesis_nodes: usize,
    /// Hypothesis nodes where the term is negative anyway.
    pub contradictions: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrakPhiReport {
    pub k: usize,
    pub applicability: Applicability,
    /// Differenced `div(P_{k-1} grad phi)` against the four terms plus the
    /// correction for non-constant `H_k`.
    pub decomposition: Option<IdentityResidual>,
    pub signs: Vec<TermSigns>,
    /// Largest `|H_k - H_k(first audit node)|`.
    pub hk_variation: f64,
    /// Largest `|correction|`; zero when `H_k` is constant.
    pub correction_max: f64,
    #[serde(skip)]
    pub lhs: Vec<Option<f64>>,
    #[serde(skip)]
    pub terms: Vec<Option<[f64; 4]>>,
}

/// The four terms at one node with `m = H_k^{1/k}`.
pub fn frak_terms(g: &PointGeometry, k: usize, kappa: f64) -> [f64; 4] {
    let n = g.n();
    let nf = n as f64;
    let kf = k as f64;
    let hkv = hk(g, k);
    let m = hkv.powf(1.0 / kf);
    let th = g.theta_hat();
    let f = curvature_factor(kappa, g);
    let c = &g.newton.pack.c;
    let t1 = c[k - 1] * g.warp.drho * m * (hk(g, k - 1) - hkv.powf((kf - 1.0) / kf));
    let t2 = -binomial(n, k) * th * (nf * hk(g, 1) * hkv - (nf - kf) * hk(g, k + 1) - kf * hkv.powf((kf + 1.0) / kf));
    let t3 = -(nf - kf) * th * f * g.newton_grad(k - 1);
    let t4 = if k >= 2 { -(nf - kf + 1.0) * th * m * f * g.newton_grad(k - 2) } else { 0.0 };
    [t1, t2, t3, t4]
}

struct Hypotheses {
    theta_hat: bool,
    hcal: bool,
    garding: bool,
    margin: bool,
    top: bool,
    below: bool,
}

fn hypotheses(g: &PointGeometry, k: usize, kappa: f64) -> Hypotheses {
    let pos = |j: usize| g.newton.newton_eigenvalues(j).iter().all(|&m| m >= 0.0);
    Hypotheses {
        theta_hat: g.theta_hat() <= 0.0,
        hcal: g.warp.hcal >= 0.0,
        garding: (1..=k).all(|j| hk(g, j) > 0.0) && pos(k - 1),
        margin: curvature_factor(kappa, g) >= 0.0,
        top: pos(k - 1),
        below: k < 2 || pos(k - 2),
    }
}

/// `div(P_{k-1} grad phi)` against its four-term closed form, `1 <= k <= n`,
/// over a constant-curvature fiber. Needs `H_k > 0` on every valid node.
pub fn frak_phi(geo: &GeometryGrid, k: usize) -> Result<FrakPhiReport> {
    let n = geo.n();
    check_order(k, 1, n)?;
    let kappa = geo.ambient().kappa();
    let empty = |applicability| FrakPhiReport {
        k,
        applicability,
        decomposition: None,
        signs: Vec::new(),
        hk_variation: f64::NAN,
        correction_max: f64::NAN,
        lhs: Vec::new(),
        terms: Vec::new(),
    };
    if let Some((i, g)) = geo.valid().find(|(_, g)| !(hk(g, k) > 0.0)) {
        return Ok(empty(Applicability::NotApplicable(format!(
            "H_{k} = {:.3e} at node {i} (x = {:?})",
            hk(g, k),
            g.x
        ))));
    }
    let kf = k as f64;
    let m = geo.field(|g| hk(g, k).powf(1.0 / kf));
    let phi = geo.field(|g| hk(g, k).powf(1.0 / kf) * g.warp.sigma + g.theta_hat());
    let hkf = geo.field(|g| hk(g, k));
    let pk1: Vec<_> = geo.nodes.iter().map(|g| g.as_ref().map(|g| g.newton.p[k - 1].clone())).collect();
    let lhs: Vec<Option<f64>> =
        geo.divergence_of_endo_gradient(&pk1, &phi).into_iter().map(|v| v.is_finite().then_some(v)).collect();
    let grad_m = geo.gradient_frame(&m);
    let grad_hk = geo.gradient_frame(&hkf);
    let hess_m = geo.hessian_frame(&m);
    let correction = |i: usize, g: &PointGeometry| -> Option<f64> {
        let gm: &DVector<f64> = grad_m[i].as_ref()?;
        let p = &g.newton.p[k - 1];
        let div = if k >= 2 { div_pk_closed(g, k - 1, kappa) } else { DVector::zeros(n) };
        let frak_m = div.dot(gm) + p.component_mul(hess_m[i].as_ref()?).sum();
        Some(
            g.warp.sigma * frak_m + 2.0 * g.warp.rho * (p * gm).dot(&g.grad_h)
                - binomial(n, k) * g.warp.rho * g.grad_h.dot(grad_hk[i].as_ref()?),
        )
    };
    let terms: Vec<Option<[f64; 4]>> = geo.nodes.iter().map(|g| g.as_ref().map(|g| frak_terms(g, k, kappa))).collect();
    let decomposition = IdentityResidual::over_audit(geo, "frak-phi", Some(k), |i, g| {
        let t = terms[i]?;
        Some((lhs[i]? - t.iter().sum::<f64>() - correction(i, g)?).abs())
    });
    let mut hk_variation = 0.0f64;
    let mut correction_max = 0.0f64;
    let first = geo.audited().next().map(|(_, g)| hk(g, k));
    let mut signs: Vec<TermSigns> = FRAK_TERMS
        .iter()
        .map(|t| TermSigns {
            term: t.to_string(),
            min: f64::INFINITY,
            negative_nodes: 0,
            hypothesis_nodes: 0,
            contradictions: 0,
        })
        .collect();
    for (i, g) in geo.audited() {
        if let Some(f) = first {
            hk_variation = hk_variation.max((hk(g, k) - f).abs());
        }
        if let Some(c) = correction(i, g) {
            correction_max = correction_max.max(c.abs());
        }
        let Some(t) = terms[i] else { continue };
        let h = hypotheses(g, k, kappa);
        let holds = [
            h.hcal && h.garding,
            h.theta_hat && h.garding,
            h.theta_hat && h.margin && h.top,
            h.theta_hat && h.margin && h.below,
        ];
        for (s, (&v, &ok)) in signs.iter_mut().zip(t.iter().zip(&holds)) {
            s.min = s.min.min(v);
            let neg = v < -SIGN_TOL;
            s.negative_nodes += neg as usize;
            s.hypothesis_nodes += ok as usize;
            s.contradictions += (neg && ok) as usize;
        }
    }
    Ok(FrakPhiReport {
        k,
        applicability: Applicability::Applicable,
        decomposition: Some(decomposition),
        signs,
        hk_variation,
        correction_max,
        lhs,
        terms,
    })
}
