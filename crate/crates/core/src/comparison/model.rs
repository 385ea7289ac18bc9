//! Rotationally symmetric model manifolds `dr^2 + f(r)^2 dtheta^2`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{solve_comparison, GrowthFunction, STURM_SLACK};
use crate::error::{Error, Result};
use crate::symfun::Applicability;

type Jet = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// A function of the radius with its first two derivatives.
#[derive(Clone)]
pub struct RadialFunction {
    pub name: String,
    jet: Jet,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFunction").field("name", &self.name).finish()
    }
}

impl RadialFunction {
    pub fn new<F: Fn(f64) -> [f64; 3] + Send + Sync + 'static>(name: &str, jet: F) -> Self {
        Self { name: name.to_string(), jet: Arc::new(jet) }
    }

    /// `[u, u', u'']` at `r`.
    pub fn jet(&self, r: f64) -> [f64; 3] {
        (self.jet)(r)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r)[0]
    }

    pub fn tanh() -> Self {
        Self::new("tanh", |r| {
            let t = r.tanh();
            let s2 = 1.0 - t * t;
            [t, s2, -2.0 * t * s2]
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(&format!("constant({c})"), move |_| [c, 0.0, 0.0])
    }

    /// `-(r - r0)^2`, maximal on the sphere of radius `r0`.
    pub fn inverted_parabola(r0: f64) -> Self {
        Self::new(&format!("inverted-parabola({r0})"), move |r| [-(r - r0).powi(2), -2.0 * (r - r0), -2.0])
    }

    pub fn by_name(name: &str) -> Result<Self> {
        if let Some(c) = name.strip_prefix("constant:") {
            let c: f64 = c.trim().parse().map_err(|_| Error::Config(format!("bad constant in field '{name}'")))?;
            return Ok(Self::constant(c));
        }
        if let Some(c) = name.strip_prefix("inverted-parabola:") {
            let c: f64 = c.trim().parse().map_err(|_| Error::Config(format!("bad radius in field '{name}'")))?;
            return Ok(Self::inverted_parabola(c));
        }
        match name {
            "tanh" => Ok(Self::tanh()),
            _ => Err(Error::UnknownProfile {
                registry: "radial field",
                name: name.to_string(),
                known: "tanh, constant:<c>, inverted-parabola:<r0>".into(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadialModel {
    pub name: String,
    /// Manifold dimension.
    pub m: usize,
    /// `f` with `f(0) = 0`, `f'(0) = 1`.
    pub f: RadialFunction,
    pub r_max: f64,
}

impl RadialModel {
    pub fn new(name: &str, m: usize, f: RadialFunction, r_max: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!("model dimension must be at least 2, got {m}")));
        }
        if !(r_max > 0.0) {
            return Err(Error::Config(format!("model radius must be positive, got {r_max}")));
        }
        let [f0, d0, _] = f.jet(0.0);
        if f0.abs() > 1e-12 || (d0 - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("{name}: need f(0) = 0 and f'(0) = 1, got {f0}, {d0}")));
        }
        Ok(Self { name: name.to_string(), m, f, r_max })
    }

    pub fn hyperbolic(m: usize, r_max: f64) -> Result<Self> {
        let f = RadialFunction::new("sinh", |r| [r.sinh(), r.cosh(), r.sinh()]);
        Self::new("hyperbolic", m, f, r_max)
    }

    pub fn flat(m: usize, r_max: f64) -> Result<Self> {
        let f = RadialFunction::new("r", |r| [r, 1.0, 0.0]);
        Self::new("flat", m, f, r_max)
    }

    /// `f = sinh(2r)/2`, constant curvature `-4`.
    pub fn hyperbolic_scaled(m: usize, r_max: f64) -> Result<Self> {
        let f =
            RadialFunction::new("sinh(2r)/2", |r| [0.5 * (2.0 * r).sinh(), (2.0 * r).cosh(), 2.0 * (2.0 * r).sinh()]);
        Self::new("hyperbolic-scaled", m, f, r_max)
    }

    pub fn by_name(name: &str, m: usize, r_max: f64) -> Result<Self> {
        match name {
            "hyperbolic" => Self::hyperbolic(m, r_max),
            "flat" => Self::flat(m, r_max),
            "hyperbolic-scaled" => Self::hyperbolic_scaled(m, r_max),
            _ => Err(Error::UnknownProfile {
                registry: "radial model",
                name: name.to_string(),
                known: "hyperbolic, flat, hyperbolic-scaled".into(),
            }),
        }
    }

    /// `f'/f`, the eigenvalue of `Hess r` on the angular directions.
    pub fn mean_shape(&self, r: f64) -> f64 {
        let [f, d, _] = self.f.jet(r);
        d / f
    }

    /// Radial sectional curvature `-f''/f`.
    pub fn radial_curvature(&self, r: f64) -> f64 {
        let [f, _, d2] = self.f.jet(r);
        -d2 / f
    }

    /// `Tr(P hess u)` for `P = mu_r dr^2 + mu_t (g - dr^2)`; the value at the
    /// pole is the limit `(mu_r + (m-1) mu_t) u''(0)`.
    pub fn trace_operator(&self, u: &RadialFunction, r: f64, mu_r: f64, mu_t: f64) -> f64 {
        let [_, du, d2u] = u.jet(r);
        let tangential = if r == 0.0 { d2u } else { self.mean_shape(r) * du };
        mu_r * d2u + (self.m - 1) as f64 * mu_t * tangential
    }

    pub fn laplacian(&self, u: &RadialFunction, r: f64) -> f64 {
        self.trace_operator(u, r, 1.0, 1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HessianComparisonReport {
    pub model: String,
    pub growth: String,
    pub applicability: Applicability,
    /// Min over the grid of `-f''/f + G(r)`.
    pub curvature_margin: f64,
    /// Min of `(phi'/phi - f'/f) / (phi'/phi)`.
    pub shape_margin: Option<f64>,
    pub shape_holds: Option<bool>,
    /// `max lambda_max(Hess r^2) / (r sqrt(G(r)))` over `[R/2, R]`.
    pub gamma_constant: Option<f64>,
}

/// `Hess r <= (phi'/phi)(g - dr^2)` and the `Hess r^2` growth constant on a
/// radial model, given `-f''/f >= -G(r)`.
pub fn hessian_comparison_check(
    model: &RadialModel,
    growth: &GrowthFunction,
    samples: usize,
) -> Result<HessianComparisonReport> {
    let n = samples.max(2);
    let rs: Vec<f64> = (1..=n).map(|i| model.r_max * i as f64 / n as f64).collect();
    let mut curvature_margin = f64::INFINITY;
    let mut violation = None;
    for &r in &rs {
        let m = model.radial_curvature(r) + growth.g(r);
        if m < -1e-12 * growth.g(r).abs().max(1.0) && violation.is_none() {
            violation = Some((r, model.radial_curvature(r), -growth.g(r)));
        }
        curvature_margin = curvature_margin.min(m);
    }
    let mut report = HessianComparisonReport {
        model: model.name.clone(),
        growth: growth.name.clone(),
        applicability: Applicability::Applicable,
        curvature_margin,
        shape_margin: None,
        shape_holds: None,
        gamma_constant: None,
    };
    if let Some((r, k, bound)) = violation {
        report.applicability =
            Applicability::NotApplicable(format!("radial curvature {k:.6e} < {bound:.6e} at r = {r:.6}"));
        return Ok(report);
    }
    let sol = solve_comparison(growth, model.r_max, n)?;
    let mut shape_margin = f64::INFINITY;
    let mut gamma_constant = f64::NEG_INFINITY;
    for (i, &r) in sol.t.iter().enumerate() {
        let p = sol.phi_ratio(i);
        shape_margin = shape_margin.min((p - model.mean_shape(r)) / p.abs());
        if r >= 0.5 * model.r_max {
            let top = 2.0f64.max(2.0 * r * model.mean_shape(r));
            gamma_constant = gamma_constant.max(top / (r * growth.g(r).sqrt()));
        }
    }
    report.shape_margin = Some(shape_margin);
    report.shape_holds = Some(shape_margin >= -STURM_SLACK);
    report.gamma_constant = Some(gamma_constant);
    Ok(report)
}
