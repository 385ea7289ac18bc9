//! Growth functions `G`, the comparison pair `(phi, psi)` and the
//! Omori-Yau barrier `varphi`, with finite-domain verdicts for the growth
//! conditions.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::integrate_rel;

mod model;
pub mod ode;
mod probe;

pub use model::{hessian_comparison_check, HessianComparisonReport, RadialFunction, RadialModel};
pub use probe::{
    omori_yau_probe, BasePoint, OmoriYauProbe, OmoriYauRecord, ProbeOperator, ProbeOptions, UNBOUNDED_TOL,
};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Sturm check slack, relative to `psi'/psi`.
pub const STURM_SLACK: f64 = 1e-9;
/// Tail slope at or below which `t G(sqrt t) / G(t)` is read as bounded.
pub const RATIO_SLOPE_TOL: f64 = 0.05;

#[derive(Clone)]
pub struct GrowthFunction {
    pub name: String,
    g: Scalar,
    dg: Scalar,
    /// Odd derivatives vanish at 0, declared by the constructor.
    pub even: bool,
}

impl fmt::Debug for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthFunction").field("name", &self.name).field("even", &self.even).finish()
    }
}

impl GrowthFunction {
    pub fn custom<G, D>(name: &str, g: G, dg: D, even: bool) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.to_string(), g: Arc::new(g), dg: Arc::new(dg), even }
    }

    pub fn constant(c: f64) -> Self {
        Self::custom(&format!("constant({c})"), move |_| c, |_| 0.0, true)
    }

    pub fn one_plus_square() -> Self {
        Self::custom("one-plus-square", |t| 1.0 + t * t, |t| 2.0 * t, true)
    }

    pub fn exp_square() -> Self {
        Self::custom("exp-square", |t| (t * t).exp(), |t| 2.0 * t * (t * t).exp(), true)
    }

    pub const NAMES: [&'static str; 4] = ["unit", "constant:<c>", "one-plus-square", "exp-square"];

    /// Registry lookup: `unit`, `constant:<c>`, `one-plus-square`, `exp-square`.
    pub fn by_name(name: &str) -> Result<Self> {
        if let Some(c) = name.strip_prefix("constant:") {
            let c: f64 =
                c.trim().parse().map_err(|_| Error::Config(format!("bad constant in growth function '{name}'")))?;
            return Ok(Self::constant(c));
        }
        match name {
            "unit" => Ok(Self::constant(1.0)),
            "one-plus-square" => Ok(Self::one_plus_square()),
            "exp-square" => Ok(Self::exp_square()),
            _ => Err(Error::UnknownProfile {
                registry: "growth function",
                name: name.to_string(),
                known: Self::NAMES.join(", "),
            }),
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        (self.g)(t)
    }

    pub fn dg(&self, t: f64) -> f64 {
        (self.dg)(t)
    }

    /// `int_0^t G^{-1/2}`.
    pub fn inverse_root_integral(&self, t: f64) -> f64 {
        integrate_rel(|s| self.g(s).powf(-0.5), 0.0, t, 1e-13, 16.max((t * 4.0).ceil() as usize))
    }

    /// `int_0^t sqrt(G)`.
    pub fn root_integral(&self, t: f64) -> f64 {
        integrate_rel(|s| self.g(s).sqrt(), 0.0, t, 1e-13, 16.max((t * 4.0).ceil() as usize))
    }
}

/// Log-log slope of a positive function between `a` and `b`.
pub fn log_slope(fa: f64, fb: f64, a: f64, b: f64) -> f64 {
    (fb.ln() - fa.ln()) / (b.ln() - a.ln())
}

fn grid(t_max: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (1..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub id: String,
    pub pass: bool,
    /// Above-threshold value driving the verdict.
    pub value: f64,
    /// Extrapolated from a finite-domain trend.
    pub heuristic: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CondGReport {
    pub growth: String,
    pub t_max: f64,
    pub samples: usize,
    pub checks: Vec<ConditionCheck>,
}

impl CondGReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, id: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// The four growth conditions on `[0, t_max]`.
pub fn check_cond_g(growth: &GrowthFunction, t_max: f64, samples: usize) -> Result<CondGReport> {
    if !(t_max > 0.0) {
        return Err(Error::Config(format!("t_max must be positive, got {t_max}")));
    }
    let g0 = growth.g(0.0);
    let mut checks = vec![ConditionCheck {
        id: "g0-positive".into(),
        pass: g0 > 0.0,
        value: g0,
        heuristic: false,
        detail: format!("G(0) = {g0:.6e}"),
    }];
    if !(g0 > 0.0) {
        return Ok(CondGReport { growth: growth.name.clone(), t_max, samples, checks });
    }

    let ts = grid(t_max, samples);
    let (t_min, min_dg) = std::iter::once(0.0)
        .chain(ts.iter().copied())
        .map(|t| (t, growth.dg(t)))
        .fold((0.0, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    checks.push(ConditionCheck {
        id: "g-nondecreasing".into(),
        pass: min_dg >= 0.0,
        value: min_dg,
        heuristic: false,
        detail: format!("min G' = {min_dg:.6e} at t = {t_min:.4}"),
    });

    let half = 0.5 * t_max;
    let i_half = growth.inverse_root_integral(half);
    let i_full = growth.inverse_root_integral(t_max);
    let tail = log_slope(growth.g(half).powf(-0.5), growth.g(t_max).powf(-0.5), half, t_max);
    checks.push(ConditionCheck {
        id: "inverse-root-divergent".into(),
        pass: tail >= -1.0,
        value: tail,
        heuristic: true,
        detail: format!("int_0^T G^(-1/2) = {i_full:.6e} (T/2: {i_half:.6e}); integrand tail slope {tail:.4}"),
    });

    if t_max > 1.0 {
        let ratio = |t: f64| t * growth.g(t.sqrt()) / growth.g(t);
        let rs: Vec<f64> =
            (0..=samples.max(2)).map(|i| 1.0 + (t_max - 1.0) * i as f64 / samples.max(2) as f64).collect();
        let max = rs.iter().map(|&t| ratio(t)).fold(f64::NEG_INFINITY, f64::max);
        let lo = half.max(1.0);
        let slope = if t_max > lo { log_slope(ratio(lo), ratio(t_max), lo, t_max) } else { 0.0 };
        checks.push(ConditionCheck {
            id: "quadratic-ratio-bounded".into(),
            pass: slope <= RATIO_SLOPE_TOL,
            value: slope,
            heuristic: true,
            detail: format!("max t G(sqrt t)/G(t) on [1,T] = {max:.6e}; tail slope {slope:.4}"),
        });
    } else {
        checks.push(ConditionCheck {
            id: "quadratic-ratio-bounded".into(),
            pass: false,
            value: f64::NAN,
            heuristic: true,
            detail: "T <= 1 leaves no sample range [1,T]".into(),
        });
    }
    Ok(CondGReport { growth: growth.name.clone(), t_max, samples, checks })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonSolution {
    pub growth: String,
    pub t: Vec<f64>,
    /// Solution of `phi'' = G phi`, `phi(0) = 0`, `phi'(0) = 1`.
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// `(exp(int_0^t sqrt G) - 1) / sqrt(G(0))`.
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    /// Min over the grid of `psi'/psi - phi'/phi`, relative to `psi'/psi`.
    pub sturm_margin: f64,
    pub sturm_holds: bool,
    /// `max (psi'/psi) / sqrt G` over `[T/2, T]`.
    pub psi_constant: f64,
    /// Min of `(psi'' - G psi) / psi''` with `psi''` differenced.
    pub psi_supersolution_min: f64,
    /// Min of `(phi'/phi)^2 - G`; may be negative for increasing `G`.
    pub riccati_min: f64,
}

impl ComparisonSolution {
    pub fn phi_ratio(&self, i: usize) -> f64 {
        self.dphi[i] / self.phi[i]
    }

    pub fn psi_ratio(&self, i: usize) -> f64 {
        self.dpsi[i] / self.psi[i]
    }
}

fn check_monotone_positive(growth: &GrowthFunction, ts: &[f64]) -> Result<()> {
    if !(growth.g(0.0) > 0.0) {
        return Err(Error::Config(format!("{}: G(0) = {} is not positive", growth.name, growth.g(0.0))));
    }
    if let Some(&t) = ts.iter().find(|&&t| growth.dg(t) < 0.0) {
        return Err(Error::Config(format!("{}: G' < 0 at t = {t}", growth.name)));
    }
    Ok(())
}

/// The pair `(phi, psi)` on `samples` uniform points of `(0, t_max]`.
pub fn solve_comparison(growth: &GrowthFunction, t_max: f64, samples: usize) -> Result<ComparisonSolution> {
    if !(t_max > 0.0) {
        return Err(Error::Config(format!("t_max must be positive, got {t_max}")));
    }
    let ts = grid(t_max, samples);
    check_monotone_positive(growth, &ts)?;
    let mut times = vec![0.0];
    times.extend_from_slice(&ts);
    let gf = growth.clone();
    let ys = ode::integrate(
        move |t, y: &[f64; 2]| [y[1], gf.g(t) * y[0]],
        [0.0, 1.0],
        &times,
        ode::OdeOptions::default(),
        |_, y| y[0] > 0.0,
    )?;
    let (phi, dphi): (Vec<f64>, Vec<f64>) = ys[1..].iter().map(|y| (y[0], y[1])).unzip();

    let sqrt_g0 = growth.g(0.0).sqrt();
    let mut integral = 0.0;
    let mut prev = 0.0;
    let mut psi = Vec::with_capacity(ts.len());
    let mut dpsi = Vec::with_capacity(ts.len());
    let mut log_ratio = Vec::with_capacity(ts.len());
    for &t in &ts {
        integral += integrate_rel(|s| growth.g(s).sqrt(), prev, t, 1e-14, 1);
        prev = t;
        psi.push(integral.exp_m1() / sqrt_g0);
        dpsi.push(growth.g(t).sqrt() * integral.exp() / sqrt_g0);
        // psi'/psi without overflow
        log_ratio.push(growth.g(t).sqrt() / -(-integral).exp_m1());
    }

    let mut sturm_margin = f64::INFINITY;
    for i in 0..ts.len() {
        let p = dphi[i] / phi[i];
        let q = log_ratio[i];
        sturm_margin = sturm_margin.min((q - p) / q.abs());
    }
    let psi_constant = ts
        .iter()
        .zip(&log_ratio)
        .filter(|(&t, _)| t >= 0.5 * t_max)
        .map(|(&t, &q)| q / growth.g(t).sqrt())
        .fold(f64::NEG_INFINITY, f64::max);

    let mut psi_supersolution_min = f64::INFINITY;
    for i in 1..ts.len().saturating_sub(1) {
        let h = ts[i + 1] - ts[i];
        let d2 = (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) / (h * h);
        psi_supersolution_min = psi_supersolution_min.min((d2 - growth.g(ts[i]) * psi[i]) / d2.abs());
    }
    let riccati_min =
        ts.iter().enumerate().map(|(i, &t)| (dphi[i] / phi[i]).powi(2) - growth.g(t)).fold(f64::INFINITY, f64::min);

    Ok(ComparisonSolution {
        growth: growth.name.clone(),
        t: ts,
        phi,
        dphi,
        psi,
        dpsi,
        sturm_margin,
        sturm_holds: sturm_margin >= -STURM_SLACK,
        psi_constant,
        psi_supersolution_min,
        riccati_min,
    })
}

/// `varphi(t) = exp(int_0^t G^{-1/2})`, the barrier in the Omori-Yau functions.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    pub growth: String,
    pub t: Vec<f64>,
    pub log_varphi: Vec<f64>,
    /// Min over the grid of `(varphi'/varphi)^2 - varphi''/varphi` with the
    /// derivatives taken from the integrated vector field.
    pub curvature_min: f64,
    /// Max deviation of the integrated quantity from `G'/(2 G^{3/2})`.
    pub half_form_error: f64,
    /// Same quantity differenced from the quadrature `varphi`, compared with
    /// `G'/(2 G^{3/2})` and with `2 G'/G^{3/2}`.
    pub differenced_half_error: f64,
    pub differenced_two_error: f64,
    /// `max (varphi'/varphi) sqrt(t G(sqrt t))` over `[1, T]`.
    pub ratio_constant: Option<f64>,
}

/// Floor on `(varphi'/varphi)^2 - varphi''/varphi`.
pub const BARRIER_TOL: f64 = 1e-8;

impl BarrierReport {
    pub fn pass(&self) -> bool {
        self.curvature_min >= -BARRIER_TOL
    }
}

pub fn barrier_identity(growth: &GrowthFunction, t_max: f64, samples: usize) -> Result<BarrierReport> {
    if !(t_max > 0.0) {
        return Err(Error::Config(format!("t_max must be positive, got {t_max}")));
    }
    let ts = grid(t_max, samples);
    check_monotone_positive(growth, &ts)?;
    let mut times = vec![0.0];
    times.extend_from_slice(&ts);
    let gf = growth.clone();
    // log varphi and varphi itself; the quantity needs both derivatives
    let ys = ode::integrate(
        move |t, y: &[f64; 2]| {
            let r = gf.g(t).powf(-0.5);
            [r, r * y[1]]
        },
        [0.0, 1.0],
        &times,
        ode::OdeOptions::default(),
        |_, y| y[1] > 0.0,
    )?;
    let half = |t: f64| 0.5 * growth.dg(t) * growth.g(t).powf(-1.5);
    let mut curvature_min = f64::INFINITY;
    let mut half_form_error = 0.0f64;
    for (i, &t) in ts.iter().enumerate() {
        let v = ys[i + 1][1];
        let g = growth.g(t);
        let d1 = g.powf(-0.5) * v;
        let d2 = -0.5 * growth.dg(t) * g.powf(-1.5) * v + g.powf(-0.5) * d1;
        let q = (d1 / v).powi(2) - d2 / v;
        curvature_min = curvature_min.min(q);
        half_form_error = half_form_error.max((q - half(t)).abs());
    }

    let log_varphi: Vec<f64> = ts.iter().map(|&t| growth.inverse_root_integral(t)).collect();
    let mut differenced_half_error = 0.0f64;
    let mut differenced_two_error = 0.0f64;
    for i in 1..ts.len().saturating_sub(1) {
        let h = ts[i + 1] - ts[i];
        // ratios of varphi values relative to the centre node
        let vm = (log_varphi[i - 1] - log_varphi[i]).exp();
        let vp = (log_varphi[i + 1] - log_varphi[i]).exp();
        let d1 = (vp - vm) / (2.0 * h);
        let d2 = (vp - 2.0 + vm) / (h * h);
        let q = d1 * d1 - d2;
        differenced_half_error = differenced_half_error.max((q - half(ts[i])).abs());
        differenced_two_error = differenced_two_error.max((q - 4.0 * half(ts[i])).abs());
    }
    let ratio_constant = ts
        .iter()
        .filter(|&&t| t >= 1.0)
        .map(|&t| growth.g(t).powf(-0.5) * (t * growth.g(t.sqrt())).sqrt())
        .reduce(f64::max);
    Ok(BarrierReport {
        growth: growth.name.clone(),
        t: ts,
        log_varphi,
        curvature_min,
        half_form_error,
        differenced_half_error,
        differenced_two_error,
        ratio_constant,
    })
}

#[cfg(test)]
mod tests;
