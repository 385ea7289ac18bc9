//! Theorem-level audits on sampled graphs: hypothesis lists, conclusions and
//! the verdict that ties them together.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::ambient::profile_summary_on;
use crate::comparison::{log_slope, RadialModel};
use crate::error::{Error, Result};
use crate::hypersurface::{GeometryGrid, PointGeometry};
use crate::linalg::jacobi_eigen;
use crate::operators::SIGN_TOL;
use crate::quadrature::integrate_rel;
use crate::residual::NodeResidual;

mod theorems;

pub use theorems::{theorem_audit, TheoremId};

/// Relative spread below which `H_k` counts as constant.
pub const CONSTANCY_TOL: f64 = 1e-6;
/// Height spread, relative to `max(1, |mean h|)`, below which a graph is a slice.
pub const SLICE_TOL: f64 = 1e-9;
/// Eigenvalue floor for an elliptic point.
pub const ELLIPTIC_TOL: f64 = 1e-8;
/// Slack in `sup >= inf` for the curvature estimates.
pub const ESTIMATE_TOL: f64 = 1e-8;
/// Samples of the profile over the slab.
pub const SLAB_SAMPLES: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    HypothesisViolated,
    ConclusionViolated,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::HypothesisViolated => "hypothesis-violated",
            Verdict::ConclusionViolated => "CONCLUSION-VIOLATED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// A named check; `margin >= 0` means satisfied with that much room.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, margin: f64, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), pass, margin, detail: detail.into() }
    }

    /// Passes iff `margin >= -slack`.
    pub fn margin(name: &str, margin: f64, slack: f64, detail: impl Into<String>) -> Self {
        Self::new(name, margin >= -slack, margin, detail)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub id: String,
    /// Whether the normal was reversed to make `H_1 > 0`.
    pub orientation: String,
    pub hypotheses: Vec<Check>,
    pub conclusions: Vec<Check>,
    /// Intermediate steps of the argument, checked on the same data.
    pub proof_lines: Vec<Check>,
    pub residuals: Vec<NodeResidual>,
    pub verdict: Verdict,
}

impl ScenarioReport {
    pub fn new(id: &str, orientation: &str) -> Self {
        Self {
            id: id.to_string(),
            orientation: orientation.to_string(),
            hypotheses: Vec::new(),
            conclusions: Vec::new(),
            proof_lines: Vec::new(),
            residuals: Vec::new(),
            verdict: Verdict::HypothesisViolated,
        }
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|c| c.pass)
    }

    /// Sets the verdict; a conclusion can only be violated under valid hypotheses.
    pub fn finish(mut self) -> Self {
        self.verdict = if !self.hypotheses_hold() {
            Verdict::HypothesisViolated
        } else if self.conclusions.iter().all(|c| c.pass) {
            Verdict::Consistent
        } else {
            Verdict::ConclusionViolated
        };
        self
    }

    /// A conclusion or an intermediate step fails although every hypothesis holds.
    pub fn invariant_violation(&self) -> bool {
        self.verdict == Verdict::ConclusionViolated
            || (self.hypotheses_hold() && self.proof_lines.iter().any(|c| !c.pass))
    }

    pub fn hypothesis(&self, name: &str) -> Option<&Check> {
        self.hypotheses.iter().find(|c| c.name == name)
    }
}

pub(crate) fn audited(geo: &GeometryGrid) -> impl Iterator<Item = &PointGeometry> {
    geo.audited().map(|(_, g)| g)
}

fn range<I: Iterator<Item = f64>>(it: I) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Normal reversed when the mean of `H_1` is negative.
pub(crate) fn orient_positive(geo: &GeometryGrid) -> (GeometryGrid, &'static str) {
    let (s, c) = audited(geo).fold((0.0, 0usize), |(s, c), g| (s + g.newton.pack.h[1], c + 1));
    if c > 0 && s < 0.0 {
        (geo.flipped(), "flipped")
    } else {
        (geo.clone(), "as-given")
    }
}

pub(crate) fn hk_constancy(geo: &GeometryGrid, k: usize) -> Check {
    let (lo, hi) = range(audited(geo).map(|g| g.newton.pack.h[k]));
    let scale = lo.abs().max(hi.abs());
    let spread = if scale > 0.0 { (hi - lo) / scale } else { 0.0 };
    Check::margin(
        &format!("h{k}-constant"),
        CONSTANCY_TOL - spread,
        0.0,
        format!("H_{k} in [{lo:.9e}, {hi:.9e}], relative spread {spread:.3e}"),
    )
}

pub(crate) fn hk_positive(geo: &GeometryGrid, k: usize) -> Check {
    let (lo, _) = range(audited(geo).map(|g| g.newton.pack.h[k]));
    Check::new(&format!("h{k}-positive"), lo > 0.0, lo, format!("min H_{k} = {lo:.6e}"))
}

/// `Theta` keeps one sign; margin is the distance of the worst node from the
/// wrong side.
pub(crate) fn theta_sign(geo: &GeometryGrid) -> (Check, f64) {
    let (lo, hi) = range(audited(geo).map(|g| g.theta));
    let (pattern, margin, sign) = if hi <= SIGN_TOL {
        ("theta <= 0", -hi, -1.0)
    } else if lo >= -SIGN_TOL {
        ("theta >= 0", lo, 1.0)
    } else {
        ("mixed", -hi.min(-lo), 0.0)
    };
    (Check::margin("theta-one-sign", margin, SIGN_TOL, format!("{pattern}; theta in [{lo:.6e}, {hi:.6e}]")), sign)
}

pub(crate) fn hcal_sign(geo: &GeometryGrid) -> (f64, f64) {
    range(audited(geo).map(|g| g.warp.hcal))
}

pub(crate) fn slab(geo: &GeometryGrid) -> (f64, f64) {
    range(audited(geo).map(|g| g.h))
}

/// Index and sign of the first node whose shape operator is definite.
pub fn find_elliptic_point(geo: &GeometryGrid) -> Option<(usize, f64)> {
    geo.audited().find_map(|(i, g)| {
        let e = jacobi_eigen(&g.shape).ok()?;
        let (lo, hi) = (e.values[0], e.values[e.values.len() - 1]);
        if lo > ELLIPTIC_TOL {
            Some((i, 1.0))
        } else if hi < -ELLIPTIC_TOL {
            Some((i, -1.0))
        } else {
            None
        }
    })
}

pub(crate) fn slice_check(geo: &GeometryGrid) -> Check {
    let (t1, t2) = slab(geo);
    let scale = (0.5 * (t1 + t2)).abs().max(1.0);
    Check::margin("slice", SLICE_TOL * scale - (t2 - t1), 0.0, format!("height range [{t1:.12}, {t2:.12}]"))
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticSignsReport {
    pub elliptic_node: Option<usize>,
    /// `+1` if the shape operator is positive definite there with the given
    /// normal, `-1` if negative definite.
    pub elliptic_sign: Option<f64>,
    pub theta_pattern: String,
    pub theta_range: (f64, f64),
    pub hcal_range: (f64, f64),
    pub dhcal_range: (f64, f64),
    pub orientation: String,
    /// Sign lemma on compact examples with `hcal' >= 0`: `theta <= 0` forces
    /// `hcal(h) >= 0` and `theta >= 0` forces `hcal(h) <= 0`.
    pub sign_lemma: Option<Check>,
}

pub fn elliptic_point_and_signs(geo: &GeometryGrid) -> Result<EllipticSignsReport> {
    let ell = find_elliptic_point(geo);
    let (oriented, orientation) = orient_positive(geo);
    let (theta_check, sign) = theta_sign(&oriented);
    let theta_range = range(audited(&oriented).map(|g| g.theta));
    let hcal_range = hcal_sign(&oriented);
    let (t1, t2) = slab(&oriented);
    let summary = profile_summary_on(&geo.ambient().profile, t1, t2, SLAB_SAMPLES)?;
    let h1_range = range(audited(&oriented).map(|g| g.newton.pack.h[1]));
    let lemma_applies =
        geo.imm.domain.is_compact() && summary.dhcal_min >= -SIGN_TOL && sign != 0.0 && h1_range.0 > 0.0;
    let sign_lemma = lemma_applies.then(|| {
        if sign < 0.0 {
            Check::margin(
                "sign-lemma",
                hcal_range.0,
                SIGN_TOL,
                format!("theta <= 0, min hcal(h) = {:.6e}", hcal_range.0),
            )
        } else {
            Check::margin(
                "sign-lemma",
                -hcal_range.1,
                SIGN_TOL,
                format!("theta >= 0, max hcal(h) = {:.6e}", hcal_range.1),
            )
        }
    });
    Ok(EllipticSignsReport {
        elliptic_node: ell.map(|e| e.0),
        elliptic_sign: ell.map(|e| e.1),
        theta_pattern: theta_check.detail.split(';').next().unwrap_or_default().to_string(),
        theta_range,
        hcal_range,
        dhcal_range: (summary.dhcal_min, summary.dhcal_max),
        orientation: orientation.to_string(),
        sign_lemma,
    })
}

/// Checks `sup H_k^{1/k} >= inf hcal(h)` (`sup |H_1|` for `k = 1`) on a
/// compact example.
pub fn curvature_estimate_scenario(geo: &GeometryGrid, k: usize) -> Result<ScenarioReport> {
    let n = geo.n();
    if k == 0 || k > n {
        return Err(Error::OrderOutOfRange { k, max: n });
    }
    let id = format!("curvature-estimate-k{k}");
    let compact = geo.imm.domain.is_compact();
    let ell = find_elliptic_point(geo);
    let (oriented, orientation) = if k >= 3 {
        match ell {
            Some((_, s)) if s < 0.0 => (geo.flipped(), "flipped"),
            _ => (geo.clone(), "as-given"),
        }
    } else {
        orient_positive(geo)
    };
    let mut r = ScenarioReport::new(&id, orientation);
    r.hypotheses.push(Check::new(
        "compact",
        compact,
        0.0,
        format!("{:?}; compact domains satisfy the maximum principle", geo.imm.domain),
    ));
    if k >= 2 {
        r.hypotheses.push(hk_positive(&oriented, k));
    }
    if k >= 3 {
        r.hypotheses.push(Check::new(
            "elliptic-point",
            ell.is_some(),
            0.0,
            ell.map_or("none found".to_string(), |(i, _)| format!("node {i}")),
        ));
    }
    let inf_h = hcal_sign(&oriented).0;
    let sup = if k == 1 {
        range(audited(&oriented).map(|g| g.newton.pack.h[1].abs())).1
    } else {
        range(audited(&oriented).map(|g| g.newton.pack.h[k].max(0.0).powf(1.0 / k as f64))).1
    };
    r.conclusions.push(Check::margin(
        "estimate",
        sup - inf_h,
        ESTIMATE_TOL,
        format!("sup = {sup:.12e}, inf hcal(h) = {inf_h:.12e}"),
    ));
    Ok(r.finish())
}

#[derive(Debug, Clone, Serialize)]
pub struct ParabolicityReport {
    pub model: String,
    pub t_min: f64,
    pub t_max: f64,
    pub partial_integral: f64,
    pub half_integral: f64,
    /// Log-log slope of the integrand over `[T/2, T]`.
    pub tail_slope: f64,
    /// Heuristic: a tail slope of at least `-1` reads as divergent.
    pub divergent: bool,
}

/// Volume of the unit sphere of dimension `d`.
pub fn unit_sphere_volume(d: usize) -> f64 {
    let mut v = if d.is_multiple_of(2) { 2.0 } else { 2.0 * std::f64::consts::PI };
    let mut j = if d.is_multiple_of(2) { 0 } else { 1 };
    while j < d {
        j += 2;
        v *= 2.0 * std::f64::consts::PI / (j - 1) as f64;
    }
    v
}

/// `int_{t_min}^{T} (sup_{dB_t} H_{k-1} vol(dB_t))^{-1} dt` on a radial model.
pub fn parabolicity_integral<F: Fn(f64) -> f64>(
    model: &RadialModel,
    h: F,
    t_min: f64,
    samples: usize,
) -> Result<ParabolicityReport> {
    let t_max = model.r_max;
    if !(t_min > 0.0 && t_min < t_max) {
        return Err(Error::Config(format!("need 0 < t_min < {t_max}, got {t_min}")));
    }
    let omega = unit_sphere_volume(model.m - 1);
    let n = samples.max(2);
    for i in 0..=n {
        let t = t_min + (t_max - t_min) * i as f64 / n as f64;
        let v = h(t);
        if !(v > 0.0) {
            return Err(Error::Degenerate(format!("H_(k-1) = {v} at t = {t}; the integrand is undefined")));
        }
    }
    let integrand = |t: f64| 1.0 / (h(t) * omega * model.f.value(t).powi(model.m as i32 - 1));
    let half = 0.5 * t_max;
    let lo = t_min.min(half);
    let pieces = 16.max(n / 8);
    let half_integral = integrate_rel(integrand, t_min, half.max(t_min), 1e-12, pieces);
    let partial_integral = integrate_rel(integrand, t_min, t_max, 1e-12, pieces);
    let tail_slope = log_slope(integrand(half.max(lo)), integrand(t_max), half.max(lo), t_max);
    Ok(ParabolicityReport {
        model: model.name.clone(),
        t_min,
        t_max,
        partial_integral,
        half_integral,
        tail_slope,
        divergent: tail_slope >= -1.0 - 1e-9,
    })
}

#[cfg(test)]
mod tests;
