//! First-order identities, distance-function probes and sectional bounds on
//! a sampled graph.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Domain, GeometryGrid, PointGeometry};
use crate::ambient::{curvature_tensor_with, sectional_closed_form};
use crate::fiber::FiberChart;
use crate::linalg::{frobenius, max_abs};
use crate::residual::NodeResidual;

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    /// `| |grad h|^2 - (1 - theta^2) |`.
    pub gradient_norm: NodeResidual,
    /// Differenced `hess h` against its closed form.
    pub height_hessian: NodeResidual,
    /// `| grad h - T^tan |` through the ambient frame.
    pub tangent_projection: NodeResidual,
}

pub fn structure_identities(geo: &GeometryGrid) -> StructureReport {
    let hfield = geo.imm.heights.clone();
    let hess = geo.hessian_frame(&hfield);
    let gradient_norm = NodeResidual::collect(
        "gradient-norm",
        None,
        geo.audited().map(|(i, g)| (i, Some((g.grad_h_norm2() - (1.0 - g.theta * g.theta)).abs()))),
    );
    let height_hessian = NodeResidual::collect(
        "height-hessian",
        None,
        geo.audited().map(|(i, g)| (i, hess[i].as_ref().map(|h| max_abs(&(h - g.height_hessian()))))),
    );
    let tangent_projection =
        NodeResidual::collect("tangent-projection", None, geo.audited().map(|(i, g)| (i, Some(tangent_defect(g)))));
    StructureReport { gradient_norm, height_hessian, tangent_projection }
}

/// `T = grad h + theta N` checked in the ambient product frame.
fn tangent_defect(g: &PointGeometry) -> f64 {
    let n = g.n();
    let mut t = DVector::zeros(n + 1);
    for a in 0..n {
        let mut e = DVector::zeros(n);
        e[a] = 1.0;
        t += g.push_forward(&e) * g.grad_h[a];
    }
    t += &g.normal * g.theta;
    t[0] -= 1.0;
    t.amax()
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub origin: Vec<f64>,
    pub audited: usize,
    pub excluded: usize,
    /// Largest `|grad gamma| / (2 sqrt(gamma) / rho(h))`.
    pub max_gradient_ratio: f64,
    pub gradient_bound_violations: usize,
    /// Differenced gradient against the analytic one.
    pub gradient: NodeResidual,
    /// Differenced `Hess gamma` against its decomposition through the fiber
    /// Hessian, the warping term and the second fundamental form.
    pub hessian: NodeResidual,
}

/// Relative slack allowed in the gradient bound.
pub const GAMMA_BOUND_TOL: f64 = 1e-12;

/// Audits `gamma = r^2` for the fiber distance `r` to `origin`.
pub fn extrinsic_gamma_probe(geo: &GeometryGrid, origin: &[f64]) -> GammaReport {
    let grid = geo.grid();
    let chart = geo.ambient().chart;
    let n = geo.n();
    let gamma: Vec<f64> = (0..grid.len()).map(|i| chart.distance(&grid.coords(i), origin).powi(2)).collect();
    let dgamma = geo.gradient_frame(&gamma);
    let hgamma = geo.hessian_frame(&gamma);
    let margin = 4 * geo.order().half_width();
    let cap = geo.config.polar_cap;
    let usable = |i: usize| -> bool {
        match (&geo.imm.domain, chart) {
            // the unwrapped distance jumps across the seam of the box
            (Domain::FlatTorus { .. }, _) => {
                grid.multi_index(i).iter().zip(&grid.axes).all(|(&j, a)| j >= margin && j + margin < a.nodes)
            }
            (_, FiberChart::Sphere { scale }) => {
                let r = chart.distance(&grid.coords(i), origin) / scale;
                r > cap && r < std::f64::consts::PI - cap
            }
            (_, FiberChart::Hyperbolic { scale }) => chart.distance(&grid.coords(i), origin) / scale > cap,
            _ => true,
        }
    };
    let mut excluded = 0;
    let mut ratio_max = 0.0f64;
    let mut violations = 0;
    let mut grad_res = Vec::new();
    let mut hess_res = Vec::new();
    for (i, g) in geo.audited() {
        if !usable(i) {
            excluded += 1;
            continue;
        }
        let x = &g.x;
        let (dg, hp) = match chart {
            FiberChart::Flat => {
                let dg: Vec<f64> = (0..n).map(|a| 2.0 * (x[a] - origin[a])).collect();
                (dg, chart.hessian_distance_squared(x, origin))
            }
            _ => match chart.radial(x, origin) {
                Some(rd) => {
                    ((0..n).map(|a| 2.0 * rd.r * rd.dr[a]).collect(), chart.hessian_distance_squared(x, origin))
                }
                None => {
                    excluded += 1;
                    continue;
                }
            },
        };
        let Some(hp) = hp else {
            excluded += 1;
            continue;
        };
        let dgv = DVector::from_vec(dg.clone());
        let grad_frame = g.covector_to_frame(&dgv);
        let norm = grad_frame.norm();
        let bound = 2.0 * gamma[i].sqrt() / g.warp.rho;
        if bound > 0.0 {
            ratio_max = ratio_max.max(norm / bound);
        }
        if norm > bound * (1.0 + GAMMA_BOUND_TOL) + GAMMA_BOUND_TOL {
            violations += 1;
        }
        grad_res.push((i, dgamma[i].as_ref().map(|d| (d - &grad_frame).amax())));
        let ng: f64 = (0..n).map(|c| dg[c] * g.normal_coord[c + 1]).sum();
        let rhs = DMatrix::from_fn(n, n, |a, b| {
            hp[a][b] - g.warp.hcal * (dg[a] * g.du[b] + dg[b] * g.du[a]) + ng * g.second_form_coord[(a, b)]
        });
        let rhs = g.form_to_frame(&rhs);
        hess_res.push((i, hgamma[i].as_ref().map(|h| max_abs(&(h - &rhs)))));
    }
    GammaReport {
        origin: origin.to_vec(),
        audited: grad_res.len(),
        excluded,
        max_gradient_ratio: ratio_max,
        gradient_bound_violations: violations,
        gradient: NodeResidual::collect("gamma-gradient", None, grad_res),
        hessian: NodeResidual::collect("gamma-hessian", None, hess_res),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SectionalReport {
    pub planes: usize,
    /// Gauss equation against the curvature of the differenced metric.
    pub gauss_vs_intrinsic: NodeResidual,
    /// Ambient sectional curvature from the tensor against the closed form in
    /// the angles with `grad h`.
    pub ambient_routes: NodeResidual,
    /// Violations of `K >= Kbar - |AX||AY| - |AX|^2`.
    pub first_link_violations: usize,
    /// Violations of `Kbar - |AX||AY| - |AX|^2 >= Kbar - 2|A|^2`.
    pub second_link_violations: usize,
    /// Violations of `Kbar >= min(kappa,0)/rho^2 - hcal^2 - max(hcal',0)`.
    pub ambient_bound_violations: usize,
    pub min_gauss_curvature: f64,
    /// Realized lower bound `min(kappa,0)/rho^2 - hcal^2 - max(hcal',0) - 2|A|^2`
    /// over audited nodes.
    pub realized_lower_bound: f64,
}

const BOUND_SLACK: f64 = 1e-12;

/// Intrinsic sectional curvatures of coordinate planes, two ways.
pub fn sectional_bound_report(geo: &GeometryGrid) -> SectionalReport {
    let n = geo.n();
    let grid = geo.grid();
    let len = grid.len();
    let kappa = geo.ambient().kappa();
    // gradient of every Christoffel component
    let mut dgam: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n * n * n);
    for c in 0..n * n * n {
        let f: Vec<f64> = (0..len).map(|p| geo.christoffel(p).map_or(f64::NAN, |g| g[c])).collect();
        dgam.push(grid.gradient(&f, geo.order()));
    }
    let idx = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let (mut first, mut second, mut third) = (0, 0, 0);
    let mut planes = 0;
    let mut kmin = f64::INFINITY;
    let mut realized = f64::INFINITY;
    let mut gauss_res = Vec::new();
    let mut route_res = Vec::new();
    for (p, g) in geo.audited() {
        let Some(gam) = geo.christoffel(p) else {
            continue;
        };
        let w = &g.warp;
        let anorm2 = frobenius(&g.shape).powi(2);
        realized = realized.min(kappa.min(0.0) / (w.rho * w.rho) - w.hcal * w.hcal - w.dhcal.max(0.0) - 2.0 * anorm2);
        for i in 0..n {
            for j in (i + 1)..n {
                planes += 1;
                let mut ei = DVector::zeros(n);
                ei[i] = 1.0;
                let mut ej = DVector::zeros(n);
                ej[j] = 1.0;
                let x = g.vector_to_frame(&ei).normalize();
                let y0 = g.vector_to_frame(&ej);
                let y = (&y0 - &x * x.dot(&y0)).normalize();
                let px = g.push_forward(&x);
                let py = g.push_forward(&y);
                let kbar = curvature_tensor_with(kappa, w, &px, &py, &py).dot(&px);
                let kclosed = sectional_closed_form(kappa, w, x.dot(&g.grad_h), y.dot(&g.grad_h));
                route_res.push((p, Some((kbar - kclosed).abs())));
                let ax = &g.shape * &x;
                let ay = &g.shape * &y;
                let gauss = kbar + ax.dot(&x) * ay.dot(&y) - ax.dot(&y).powi(2);
                kmin = kmin.min(gauss);
                let l1 = kbar - ax.norm() * ay.norm() - ax.norm_squared();
                let l2 = kbar - 2.0 * anorm2;
                let l3 = kappa.min(0.0) / (w.rho * w.rho) - w.hcal * w.hcal - w.dhcal.max(0.0);
                let slack = BOUND_SLACK * (1.0 + gauss.abs() + anorm2);
                if gauss < l1 - slack {
                    first += 1;
                }
                if l1 < l2 - slack {
                    second += 1;
                }
                if kbar < l3 - slack {
                    third += 1;
                }
                // R(d_i, d_j) d_j paired with d_i
                let mut rv = vec![0.0; n];
                for (l, r) in rv.iter_mut().enumerate() {
                    let mut v = dgam[idx(l, j, j)][i][p] - dgam[idx(l, i, j)][j][p];
                    for m in 0..n {
                        v += gam[idx(m, j, j)] * gam[idx(l, i, m)] - gam[idx(m, i, j)] * gam[idx(l, j, m)];
                    }
                    *r = v;
                }
                let num: f64 = (0..n).map(|l| g.metric[(i, l)] * rv[l]).sum();
                let den = g.metric[(i, i)] * g.metric[(j, j)] - g.metric[(i, j)].powi(2);
                let intrinsic = num / den;
                gauss_res.push((p, intrinsic.is_finite().then(|| (intrinsic - gauss).abs())));
            }
        }
    }
    SectionalReport {
        planes,
        gauss_vs_intrinsic: NodeResidual::collect("gauss-equation", None, gauss_res),
        ambient_routes: NodeResidual::collect("ambient-sectional", None, route_res),
        first_link_violations: first,
        second_link_violations: second,
        ambient_bound_violations: third,
        min_gauss_curvature: kmin,
        realized_lower_bound: realized,
    }
}
