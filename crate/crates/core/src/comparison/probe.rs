//! Omori-Yau sequences on radial models from the functions
//! `f_j = (u - u(p0) + 1) / varphi(r^2)^{1/j}`.

use serde::Serialize;

use super::model::{RadialFunction, RadialModel};
use super::GrowthFunction;
use crate::ambient::golden_max;
use crate::error::{Error, Result};
use crate::quadrature::integrate_rel;

/// Node whose value normalizes `f_j`. Distances are always measured from
/// the pole of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BasePoint {
    Origin,
    /// The first grid node attaining `max u`.
    MaxU,
    Radius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ProbeOperator {
    Laplacian,
    /// `Tr(P hess u)` with `P = mu_r dr^2 + mu_t (g - dr^2)`.
    Trace {
        mu_r: f64,
        mu_t: f64,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeOptions {
    pub jmax: usize,
    pub nodes: usize,
    pub base: BasePoint,
    pub operator: ProbeOperator,
    pub golden_iters: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { jmax: 20, nodes: 4000, base: BasePoint::MaxU, operator: ProbeOperator::Laplacian, golden_iters: 200 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OmoriYauRecord {
    pub j: usize,
    pub r: f64,
    /// `u* - u(p_j)`.
    pub gap: f64,
    pub gradient: f64,
    pub lu: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OmoriYauProbe {
    pub model: String,
    pub field: String,
    pub growth: String,
    pub base: BasePoint,
    pub base_radius: f64,
    pub u_star: f64,
    pub records: Vec<OmoriYauRecord>,
    pub gap_decreasing: bool,
    pub gap_nonincreasing: bool,
    pub gradient_decreasing: bool,
    pub gradient_nonincreasing: bool,
    /// `Lu(p_j) < 1/j` for every recorded `j`.
    pub below_bound: bool,
    /// The grid maximum of `u` sits on the outer boundary and `u` is still
    /// rising there by more than `UNBOUNDED_TOL` per model radius.
    pub unbounded_warning: bool,
}

/// Relative rise per model radius, at the outer boundary, read as unbounded.
pub const UNBOUNDED_TOL: f64 = 1e-3;

impl OmoriYauProbe {
    /// Strictly decreasing gaps and gradients with `Lu(p_j) < 1/j` throughout.
    pub fn claims_hold(&self) -> bool {
        self.gap_decreasing && self.gradient_decreasing && self.below_bound
    }
}

fn strictly(v: &[f64], weak: bool) -> bool {
    v.windows(2).all(|w| if weak { w[1] <= w[0] } else { w[1] < w[0] })
}

pub fn omori_yau_probe(
    model: &RadialModel,
    u: &RadialFunction,
    growth: &GrowthFunction,
    opts: &ProbeOptions,
) -> Result<OmoriYauProbe> {
    if opts.jmax == 0 || opts.nodes < 2 {
        return Err(Error::Config("probe needs jmax >= 1 and at least 2 nodes".into()));
    }
    let (mu_r, mu_t) = match opts.operator {
        ProbeOperator::Laplacian => (1.0, 1.0),
        ProbeOperator::Trace { mu_r, mu_t } => {
            if mu_r < 0.0 || mu_t < 0.0 || !mu_r.is_finite() || !mu_t.is_finite() {
                return Err(Error::Config(format!(
                    "trace operator needs a bounded semidefinite P, got ({mu_r}, {mu_t})"
                )));
            }
            (mu_r, mu_t)
        }
    };
    let n = opts.nodes;
    let rs: Vec<f64> = (0..=n).map(|i| model.r_max * i as f64 / n as f64).collect();
    let us: Vec<f64> = rs.iter().map(|&r| u.value(r)).collect();
    if us.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{} is not finite on the model grid", u.name)));
    }
    let (i_star, u_star) =
        us.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
    let unbounded_warning = i_star == n && u.jet(model.r_max)[1] * model.r_max > UNBOUNDED_TOL * u_star.abs().max(1.0);
    let base_radius = match opts.base {
        BasePoint::Origin => 0.0,
        BasePoint::MaxU => rs[i_star],
        BasePoint::Radius(r) => {
            if !(0.0..=model.r_max).contains(&r) {
                return Err(Error::Config(format!("base radius {r} outside [0, {}]", model.r_max)));
            }
            r
        }
    };
    let shift = 1.0 - u.value(base_radius);

    // log varphi(r^2), accumulated panel by panel
    let mut log_barrier = Vec::with_capacity(rs.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &r in &rs {
        acc += integrate_rel(|s| growth.g(s).powf(-0.5), prev, r * r, 1e-14, 1);
        prev = r * r;
        log_barrier.push(acc);
    }

    let mut records = Vec::with_capacity(opts.jmax);
    for j in 1..=opts.jmax {
        let inv = 1.0 / j as f64;
        let fj = |i: usize| (us[i] + shift) * (-log_barrier[i] * inv).exp();
        let mut best = 0;
        let mut best_v = fj(0);
        for i in 1..rs.len() {
            let v = fj(i);
            if v > best_v {
                best = i;
                best_v = v;
            }
        }
        let lo = rs[best.saturating_sub(1)];
        let hi = rs[(best + 1).min(n)];
        let centre = log_barrier[best.saturating_sub(1)];
        let f_cont = |r: f64| {
            let l = centre + integrate_rel(|s| growth.g(s).powf(-0.5), lo * lo, r * r, 1e-14, 1);
            (u.value(r) + shift) * (-l * inv).exp()
        };
        let (x, fx) = golden_max(f_cont, lo, hi, opts.golden_iters);
        let r = if fx > best_v { x } else { rs[best] };
        let [uv, du, _] = u.jet(r);
        records.push(OmoriYauRecord {
            j,
            r,
            gap: u_star - uv,
            gradient: du.abs(),
            lu: model.trace_operator(u, r, mu_r, mu_t),
            bound: inv,
        });
    }
    let gaps: Vec<f64> = records.iter().map(|r| r.gap).collect();
    let grads: Vec<f64> = records.iter().map(|r| r.gradient).collect();
    Ok(OmoriYauProbe {
        model: model.name.clone(),
        field: u.name.clone(),
        growth: growth.name.clone(),
        base: opts.base,
        base_radius,
        u_star,
        below_bound: records.iter().all(|r| r.lu < r.bound),
        gap_decreasing: strictly(&gaps, false),
        gap_nonincreasing: strictly(&gaps, true),
        gradient_decreasing: strictly(&grads, false),
        gradient_nonincreasing: strictly(&grads, true),
        unbounded_warning,
        records,
    })
}
