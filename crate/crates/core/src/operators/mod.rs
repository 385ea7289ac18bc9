//! Linearized curvature operators on sampled graphs: `L_k = Tr(P_k hess)`,
//! the normalized `L_k / H_k`, the mixed family `Tr(Q_{k-1} hess)` and the
//! divergence form `div(P_k grad)`, with the closed forms they satisfy.
//!
//! Every identity is evaluated twice where possible: once with Hessians from
//! the closed form of `hess h` (exact up to round-off) and once with
//! Hessians differenced on the grid (convergent at stencil order).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypersurface::{evaluate_geometry, DiscretizationConfig, GeometryGrid, GraphImmersion, PointGeometry};
use crate::residual::{ConvergenceRecord, NodeResidual};
use crate::symfun::Applicability;

mod divergence;
mod phi;

pub use divergence::{
    div_pk, frak_split, theta_hat_identity, theta_hat_rhs_constant, DivergenceReport, ThetaHatReport,
};
pub use phi::{
    calligraphic_apply, calligraphic_ops, calligraphic_sigma_rhs, frak_phi, CalligraphicReport, FrakPhiReport,
    TermSigns, FRAK_TERMS, SIGN_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorKind {
    /// `Tr(P_k hess u)`.
    L,
    /// `L_k u / H_k`.
    Lhat,
    /// `Tr(Q_{k-1} hess u)` with the mixed Newton tensor.
    Lcal,
    /// `div(P_k grad u)`.
    Lfrak,
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorField {
    pub kind: OperatorKind,
    pub k: usize,
    /// One entry per grid node; `None` where the stencil left the valid set.
    pub values: Vec<Option<f64>>,
}

/// Per-node residual of one identity plus its refinement record.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityResidual {
    pub id: String,
    pub k: Option<usize>,
    /// Residual per grid node, `None` off the audit set.
    #[serde(skip)]
    pub per_node: Vec<Option<f64>>,
    pub summary: NodeResidual,
    pub convergence: Option<ConvergenceRecord>,
}

impl IdentityResidual {
    /// Builds the residual from `f` evaluated at every audit node.
    pub fn over_audit<F>(geo: &GeometryGrid, id: &str, k: Option<usize>, f: F) -> Self
    where
        F: Fn(usize, &PointGeometry) -> Option<f64>,
    {
        let mut per_node = vec![None; geo.grid().len()];
        let mut pairs = Vec::new();
        for (i, g) in geo.audited() {
            let v = f(i, g).filter(|v| v.is_finite());
            per_node[i] = v;
            pairs.push((i, v));
        }
        let summary = NodeResidual::collect(id, k, pairs);
        Self { id: id.to_string(), k, per_node, summary, convergence: None }
    }

    pub fn max(&self) -> f64 {
        self.summary.max
    }

    /// Attaches a refinement record; refused with fewer than three levels.
    pub fn attach(&mut self, rec: ConvergenceRecord) -> bool {
        if rec.resolutions.len() < 3 {
            return false;
        }
        self.convergence = Some(rec);
        true
    }

    pub fn slope(&self) -> Option<f64> {
        self.convergence.as_ref().and_then(|c| c.fitted)
    }
}

/// Evaluates `f` on `levels` dyadic refinements of `imm` and returns the
/// base-level residuals with their refinement records attached.
pub fn identity_study<F>(
    imm: &GraphImmersion,
    cfg: &DiscretizationConfig,
    levels: usize,
    f: F,
) -> Result<Vec<IdentityResidual>>
where
    F: Fn(&GeometryGrid) -> Result<Vec<IdentityResidual>>,
{
    let mut base: Option<Vec<IdentityResidual>> = None;
    let mut resolutions = Vec::new();
    let mut maxima: Vec<Vec<f64>> = Vec::new();
    let mut fine_cfg = cfg.clone();
    for l in 0..levels.max(1) {
        let im = if l == 0 { imm.clone() } else { imm.refined(1 << l)? };
        resolutions.push(im.resolution());
        let geo = evaluate_geometry(&im, &fine_cfg)?;
        if l == 0 && cfg.limits.is_none() {
            fine_cfg = cfg.with_limits(geo.audit_limits());
        }
        let res = f(&geo)?;
        if maxima.is_empty() {
            maxima = vec![Vec::new(); res.len()];
        }
        for (m, r) in maxima.iter_mut().zip(&res) {
            m.push(r.max());
        }
        if base.is_none() {
            base = Some(res);
        }
    }
    let mut base = base.unwrap_or_default();
    if levels >= 3 {
        for (b, m) in base.iter_mut().zip(maxima) {
            let rec = ConvergenceRecord::new(&b.id, b.k, resolutions.clone(), m, cfg.stencil.order());
            b.attach(rec);
        }
    }
    Ok(base)
}

pub(crate) fn check_order(k: usize, lo: usize, hi: usize) -> Result<()> {
    if k < lo || k > hi {
        return Err(Error::OrderOutOfRange { k, max: hi });
    }
    Ok(())
}

/// `H_j`, zero past `n`.
pub(crate) fn hk(g: &PointGeometry, j: usize) -> f64 {
    g.newton.pack.h.get(j).copied().unwrap_or(0.0)
}

/// `kappa / rho^2 + hcal'`, the factor in the divergence of `P_k` over a
/// constant-curvature fiber.
pub(crate) fn curvature_factor(kappa: f64, g: &PointGeometry) -> f64 {
    kappa / (g.warp.rho * g.warp.rho) + g.warp.dhcal
}

fn trace_apply(geo: &GeometryGrid, u: &[f64], tensor: impl Fn(&PointGeometry) -> DMatrix<f64>) -> Vec<Option<f64>> {
    let hess = geo.hessian_frame(u);
    geo.nodes
        .iter()
        .zip(hess)
        .map(|(g, h)| {
            let (g, h) = (g.as_ref()?, h?);
            Some(tensor(g).component_mul(&h).sum())
        })
        .collect()
}

/// `L_k u = Tr(P_k hess u)` with the differenced covariant Hessian.
pub fn lk_apply(geo: &GeometryGrid, k: usize, u: &[f64]) -> Result<OperatorField> {
    check_order(k, 0, geo.n() - 1)?;
    Ok(OperatorField { kind: OperatorKind::L, k, values: trace_apply(geo, u, |g| g.newton.p[k].clone()) })
}

/// `div(P_k grad u)` in flux form.
pub fn frak_apply(geo: &GeometryGrid, k: usize, u: &[f64]) -> Result<OperatorField> {
    check_order(k, 0, geo.n() - 1)?;
    let t: Vec<_> = geo.nodes.iter().map(|g| g.as_ref().map(|g| g.newton.p[k].clone())).collect();
    let values = geo.divergence_of_endo_gradient(&t, u).into_iter().map(|v| v.is_finite().then_some(v)).collect();
    Ok(OperatorField { kind: OperatorKind::Lfrak, k, values })
}

/// `L_0 u` against the flux-form Laplace-Beltrami operator.
pub fn laplacian_check(geo: &GeometryGrid, u: &[f64]) -> Result<IdentityResidual> {
    let l0 = lk_apply(geo, 0, u)?;
    let lb = geo.laplace_beltrami(u);
    Ok(IdentityResidual::over_audit(geo, "l0-laplace-beltrami", Some(0), |i, _| {
        l0.values[i].map(|v| (v - lb[i]).abs())
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizedReport {
    pub k: usize,
    pub applicability: Applicability,
    /// `L_k u / H_k`; absent when not applicable.
    pub field: Option<OperatorField>,
    /// `|Tr(P_k / H_k) - c_k|`.
    pub trace: Option<IdentityResidual>,
}

/// `L_k u / H_k` where `H_k > 0` on every valid node.
pub fn normalized_lhat(geo: &GeometryGrid, k: usize, u: &[f64]) -> Result<NormalizedReport> {
    check_order(k, 0, geo.n() - 1)?;
    if let Some((i, g)) = geo.valid().find(|(_, g)| !(hk(g, k) > 0.0)) {
        let msg = format!("H_{k} = {:.3e} at node {i} (x = {:?})", hk(g, k), g.x);
        return Ok(NormalizedReport { k, applicability: Applicability::NotApplicable(msg), field: None, trace: None });
    }
    let lk = lk_apply(geo, k, u)?;
    let values = lk.values.iter().zip(&geo.nodes).map(|(v, g)| Some(v.as_ref()? / hk(g.as_ref()?, k))).collect();
    let trace = IdentityResidual::over_audit(geo, "normalized-trace", Some(k), |_, g| {
        Some((g.newton.p[k].trace() / hk(g, k) - g.newton.pack.c[k]).abs())
    });
    Ok(NormalizedReport {
        k,
        applicability: Applicability::Applicable,
        field: Some(OperatorField { kind: OperatorKind::Lhat, k, values }),
        trace: Some(trace),
    })
}

/// Right-hand side of `L_k h`.
pub fn height_rhs(g: &PointGeometry, k: usize) -> f64 {
    let c = g.newton.pack.c[k];
    g.warp.hcal * (c * hk(g, k) - g.newton_grad(k)) + c * g.theta * hk(g, k + 1)
}

/// Right-hand side of `L_k sigma(h)`.
pub fn sigma_rhs(g: &PointGeometry, k: usize) -> f64 {
    g.newton.pack.c[k] * g.warp.rho * (g.warp.hcal * hk(g, k) + g.theta * hk(g, k + 1))
}

#[derive(Debug, Clone, Serialize)]
pub struct HeightSigmaReport {
    pub k: usize,
    pub height_differenced: IdentityResidual,
    pub sigma_differenced: IdentityResidual,
    pub height_analytic: IdentityResidual,
    pub sigma_analytic: IdentityResidual,
}

impl HeightSigmaReport {
    pub fn into_vec(self) -> Vec<IdentityResidual> {
        vec![self.height_differenced, self.sigma_differenced, self.height_analytic, self.sigma_analytic]
    }
}

/// `L_k h` and `L_k sigma(h)` against their closed forms.
pub fn height_sigma_identities(geo: &GeometryGrid, k: usize) -> Result<HeightSigmaReport> {
    check_order(k, 0, geo.n() - 1)?;
    let h = geo.imm.heights.clone();
    let s = geo.field(|g| g.warp.sigma);
    let lh = lk_apply(geo, k, &h)?;
    let ls = lk_apply(geo, k, &s)?;
    let tr = |g: &PointGeometry, m: &DMatrix<f64>| g.newton.p[k].component_mul(m).sum();
    Ok(HeightSigmaReport {
        k,
        height_differenced: IdentityResidual::over_audit(geo, "lk-height", Some(k), |i, g| {
            lh.values[i].map(|v| (v - height_rhs(g, k)).abs())
        }),
        sigma_differenced: IdentityResidual::over_audit(geo, "lk-sigma", Some(k), |i, g| {
            ls.values[i].map(|v| (v - sigma_rhs(g, k)).abs())
        }),
        height_analytic: IdentityResidual::over_audit(geo, "lk-height-analytic", Some(k), |_, g| {
            Some((tr(g, &g.height_hessian()) - height_rhs(g, k)).abs())
        }),
        sigma_analytic: IdentityResidual::over_audit(geo, "lk-sigma-analytic", Some(k), |_, g| {
            Some((tr(g, &g.sigma_hessian()) - sigma_rhs(g, k)).abs())
        }),
    })
}
