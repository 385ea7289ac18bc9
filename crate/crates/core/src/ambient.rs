//! Warped products `I x_rho P` over a constant-curvature fiber.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::FiberChart;
use crate::quadrature;
use crate::symfun::{elementary_symmetric, SymmetricPack};

/// Relative tolerance demanded from quadrature of `sigma`.
pub const SIGMA_QUADRATURE_TOL: f64 = 1e-12;
/// Dense samples used by [`profile_summary`] before refinement.
pub const SUMMARY_SAMPLES: usize = 10_000;
/// Orthonormality defect tolerated by [`sectional_curvature`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

type Triple = dyn Fn(f64) -> [f64; 3] + Send + Sync;
type Scalar = dyn Fn(f64) -> f64 + Send + Sync;

/// `rho` with its first two derivatives on an open interval.
#[derive(Clone)]
pub struct WarpingProfile {
    pub name: String,
    pub interval: (f64, f64),
    /// Base point of `sigma(t) = int_{t0}^t rho`.
    pub t0: f64,
    /// Finite range scanned by default when summarizing.
    pub summary_range: (f64, f64),
    eval: Arc<Triple>,
    sigma: Option<Arc<Scalar>>,
}

impl fmt::Debug for WarpingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WarpingProfile")
            .field("name", &self.name)
            .field("interval", &self.interval)
            .field("t0", &self.t0)
            .finish()
    }
}

impl WarpingProfile {
    pub fn custom<F>(name: &str, interval: (f64, f64), t0: f64, f: F) -> Self
    where
        F: Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    {
        let summary_range = (interval.0.max(-10.0), interval.1.min(10.0));
        Self { name: name.to_string(), interval, t0, summary_range, eval: Arc::new(f), sigma: None }
    }

    pub fn with_sigma<F>(mut self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.sigma = Some(Arc::new(f));
        self
    }

    pub fn with_summary_range(mut self, lo: f64, hi: f64) -> Self {
        self.summary_range = (lo, hi);
        self
    }

    pub fn with_interval(mut self, lo: f64, hi: f64) -> Self {
        self.interval = (lo, hi);
        self.summary_range = (self.summary_range.0.max(lo), self.summary_range.1.min(hi));
        self
    }

    pub fn has_closed_sigma(&self) -> bool {
        self.sigma.is_some()
    }

    /// `e^t` on the real line.
    pub fn exponential() -> Self {
        Self::custom("exp", (f64::NEG_INFINITY, f64::INFINITY), 0.0, |t| {
            let e = t.exp();
            [e, e, e]
        })
        .with_sigma(|t| t.exp() - 1.0)
    }

    /// `cosh t` on the real line.
    pub fn cosh() -> Self {
        Self::custom("cosh", (f64::NEG_INFINITY, f64::INFINITY), 0.0, |t| [t.cosh(), t.sinh(), t.cosh()])
            .with_sigma(|t| t.sinh())
    }

    /// `t` on `(0, inf)`; with a unit sphere fiber this is flat space.
    pub fn linear() -> Self {
        Self::custom("linear", (0.0, f64::INFINITY), 1.0, |t| [t, 1.0, 0.0])
            .with_sigma(|t| 0.5 * (t * t - 1.0))
            .with_summary_range(0.05, 10.0)
    }

    /// `1 + eps sin t`, requiring `|eps| < 1`.
    pub fn sine(eps: f64) -> Result<Self> {
        if eps.abs() >= 1.0 {
            return Err(Error::Config(format!("sine profile needs |epsilon| < 1, got {eps}")));
        }
        Ok(Self::custom("sine", (f64::NEG_INFINITY, f64::INFINITY), 0.0, move |t| {
            [1.0 + eps * t.sin(), eps * t.cos(), -eps * t.sin()]
        })
        .with_sigma(move |t| t - eps * (t.cos() - 1.0)))
    }

    /// Constant `c > 0`: a Riemannian product.
    pub fn constant(c: f64) -> Result<Self> {
        if c <= 0.0 {
            return Err(Error::Config(format!("constant profile needs a positive value, got {c}")));
        }
        Ok(Self::custom("constant", (f64::NEG_INFINITY, f64::INFINITY), 0.0, move |_| [c, 0.0, 0.0])
            .with_sigma(move |t| c * t))
    }

    pub fn triple(&self, t: f64) -> [f64; 3] {
        (self.eval)(t)
    }
}

/// Parameters accepted by the built-in profile constructors.
#[derive(Debug, Clone, Default)]
pub struct ProfileParams {
    pub epsilon: Option<f64>,
    pub value: Option<f64>,
    pub interval: Option<(f64, f64)>,
}

type Factory = Arc<dyn Fn(&ProfileParams) -> Result<WarpingProfile> + Send + Sync>;

/// Named profile constructors.
#[derive(Clone)]
pub struct ProfileRegistry {
    entries: BTreeMap<String, Factory>,
}

impl Default for ProfileRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ProfileRegistry {
    pub fn builtin() -> Self {
        let mut r = Self { entries: BTreeMap::new() };
        r.register_factory("exp", |_| Ok(WarpingProfile::exponential()));
        r.register_factory("cosh", |_| Ok(WarpingProfile::cosh()));
        r.register_factory("linear", |_| Ok(WarpingProfile::linear()));
        r.register_factory("sine", |p| WarpingProfile::sine(p.epsilon.unwrap_or(0.1)));
        r.register_factory("constant", |p| WarpingProfile::constant(p.value.unwrap_or(1.0)));
        r
    }

    pub fn register_factory<F>(&mut self, name: &str, f: F)
    where
        F: Fn(&ProfileParams) -> Result<WarpingProfile> + Send + Sync + 'static,
    {
        self.entries.insert(name.to_string(), Arc::new(f));
    }

    pub fn register(&mut self, profile: WarpingProfile) {
        let name = profile.name.clone();
        self.register_factory(&name, move |_| Ok(profile.clone()));
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn build(&self, name: &str, params: &ProfileParams) -> Result<WarpingProfile> {
        let f = self.entries.get(name).ok_or_else(|| Error::UnknownProfile {
            registry: "warping profile",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        let mut p = f(params)?;
        if let Some((lo, hi)) = params.interval {
            if !(lo < hi) {
                return Err(Error::Config(format!("empty profile interval ({lo}, {hi})")));
            }
            let (plo, phi) = p.interval;
            p = p.with_interval(lo.max(plo), hi.min(phi));
        }
        Ok(p)
    }
}

/// `I x_rho P^n`.
#[derive(Debug, Clone)]
pub struct WarpedProduct {
    pub profile: WarpingProfile,
    pub chart: FiberChart,
    pub n: usize,
}

impl WarpedProduct {
    pub fn new(profile: WarpingProfile, chart: FiberChart, n: usize) -> Self {
        Self { profile, chart, n }
    }

    pub fn kappa(&self) -> f64 {
        self.chart.kappa()
    }

    pub fn eval(&self, t: f64) -> Result<WarpingValues> {
        warping_eval(self, t)
    }
}

/// `rho`, its derivatives, `hcal = rho'/rho`, `hcal'` and `sigma` at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WarpingValues {
    pub t: f64,
    pub rho: f64,
    pub drho: f64,
    pub ddrho: f64,
    pub hcal: f64,
    pub dhcal: f64,
    pub sigma: f64,
}

pub fn warping_eval(w: &WarpedProduct, t: f64) -> Result<WarpingValues> {
    let mut v = warping_local(&w.profile, t)?;
    v.sigma = sigma(&w.profile, t);
    Ok(v)
}

/// As [`warping_eval`] without `sigma` (left at zero).
pub fn warping_local(p: &WarpingProfile, t: f64) -> Result<WarpingValues> {
    let (lo, hi) = p.interval;
    if !(t > lo && t < hi) {
        return Err(Error::OutsideInterval { t, lo, hi });
    }
    let [rho, drho, ddrho] = p.triple(t);
    if !(rho > 0.0) {
        return Err(Error::NonPositiveWarping { t, rho });
    }
    let hcal = drho / rho;
    let dhcal = ddrho / rho - hcal * hcal;
    Ok(WarpingValues { t, rho, drho, ddrho, hcal, dhcal, sigma: 0.0 })
}

/// `int_{t0}^t rho`, closed form when registered, quadrature otherwise.
pub fn sigma(p: &WarpingProfile, t: f64) -> f64 {
    match &p.sigma {
        Some(f) => f(t),
        None => sigma_by_quadrature(p, t),
    }
}

pub fn sigma_by_quadrature(p: &WarpingProfile, t: f64) -> f64 {
    let span = (t - p.t0).abs();
    let pieces = (span.ceil() as usize).clamp(1, 4096) * 4;
    quadrature::integrate_rel(|s| p.triple(s)[0], p.t0, t, SIGMA_QUADRATURE_TOL, pieces)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HcalTrend {
    /// `hcal' > 0` at all but a negligible fraction of samples and never negative.
    IncreasingAlmostEverywhere,
    /// `hcal' >= 0` everywhere.
    NonDecreasing,
    NonIncreasing,
    SignChanging,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSummary {
    pub range: (f64, f64),
    /// `sup (rho'^2 - rho'' rho)` over the range.
    pub alpha: f64,
    pub alpha_at: f64,
    pub hcal_min: f64,
    pub hcal_max: f64,
    pub dhcal_min: f64,
    pub dhcal_max: f64,
    /// Fraction of samples with `hcal' > tol`.
    pub dhcal_positive_fraction: f64,
    pub hcal_trend: HcalTrend,
    pub rho_min: f64,
    pub samples: usize,
}

/// Threshold on the fraction of samples for "almost everywhere".
pub const AE_FRACTION: f64 = 0.99;
/// Sign tolerance for `hcal'` samples.
pub const DHCAL_SIGN_TOL: f64 = 1e-12;

pub fn profile_summary(w: &WarpedProduct) -> Result<ProfileSummary> {
    let (lo, hi) = w.profile.summary_range;
    profile_summary_on(&w.profile, lo, hi, SUMMARY_SAMPLES)
}

/// Dense sampling of `[lo, hi]` followed by golden-section refinement of the
/// largest sample of `rho'^2 - rho'' rho`.
pub fn profile_summary_on(p: &WarpingProfile, lo: f64, hi: f64, samples: usize) -> Result<ProfileSummary> {
    if !(lo <= hi) {
        return Err(Error::Config(format!("empty summary range [{lo}, {hi}]")));
    }
    let samples = samples.max(2);
    let ts: Vec<f64> = (0..samples)
        .map(|i| if samples == 1 { lo } else { lo + (hi - lo) * i as f64 / (samples - 1) as f64 })
        .collect();
    let ends_open = |t: f64| t > p.interval.0 && t < p.interval.1;
    let ts: Vec<f64> = ts.into_iter().filter(|&t| ends_open(t)).collect();
    if ts.is_empty() {
        return Err(Error::OutsideInterval { t: lo, lo: p.interval.0, hi: p.interval.1 });
    }
    let alpha_fn = |t: f64| {
        let [r, d, dd] = p.triple(t);
        d * d - dd * r
    };
    let mut best = (f64::NEG_INFINITY, ts[0], 0usize);
    let mut hmin = f64::INFINITY;
    let mut hmax = f64::NEG_INFINITY;
    let mut dmin = f64::INFINITY;
    let mut dmax = f64::NEG_INFINITY;
    let mut rho_min = f64::INFINITY;
    let mut positive = 0usize;
    for (i, &t) in ts.iter().enumerate() {
        let v = warping_local(p, t)?;
        let a = alpha_fn(t);
        if a > best.0 {
            best = (a, t, i);
        }
        hmin = hmin.min(v.hcal);
        hmax = hmax.max(v.hcal);
        dmin = dmin.min(v.dhcal);
        dmax = dmax.max(v.dhcal);
        rho_min = rho_min.min(v.rho);
        if v.dhcal > DHCAL_SIGN_TOL {
            positive += 1;
        }
    }
    let (mut alpha, mut alpha_at, idx) = best;
    let a = ts[idx.saturating_sub(1)];
    let b = ts[(idx + 1).min(ts.len() - 1)];
    if b > a {
        let (t, v) = golden_max(alpha_fn, a, b, 200);
        if v > alpha {
            alpha = v;
            alpha_at = t;
        }
    }
    let fraction = positive as f64 / ts.len() as f64;
    let trend = if dmin >= -DHCAL_SIGN_TOL {
        if fraction >= AE_FRACTION {
            HcalTrend::IncreasingAlmostEverywhere
        } else {
            HcalTrend::NonDecreasing
        }
    } else if dmax <= DHCAL_SIGN_TOL {
        HcalTrend::NonIncreasing
    } else {
        HcalTrend::SignChanging
    };
    Ok(ProfileSummary {
        range: (lo, hi),
        alpha,
        alpha_at,
        hcal_min: hmin,
        hcal_max: hmax,
        dhcal_min: dmin,
        dhcal_max: dmax,
        dhcal_positive_fraction: fraction,
        hcal_trend: trend,
        rho_min,
        samples: ts.len(),
    })
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// Normal with `dt`-component negative; `-d/dt` on slices.
    Down,
    Up,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Down => 1.0,
            Orientation::Up => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Down => Orientation::Up,
            Orientation::Up => Orientation::Down,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceGeometry {
    pub t0: f64,
    pub orientation: Orientation,
    pub values: WarpingValues,
    pub theta: f64,
    pub principal: Vec<f64>,
    pub pack: SymmetricPack,
}

impl SliceGeometry {
    pub fn shape_operator(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.principal.clone()))
    }
}

/// Slice `{t0} x P`: umbilical with `A = hcal I` for the normal `-d/dt`.
pub fn slice_geometry(w: &WarpedProduct, t0: f64, orientation: Orientation) -> Result<SliceGeometry> {
    let values = warping_eval(w, t0)?;
    let s = orientation.sign();
    let principal = vec![s * values.hcal; w.n];
    let pack = elementary_symmetric(&principal);
    Ok(SliceGeometry { t0, orientation, values, theta: -s, principal, pack })
}

/// Curvature tensor `R(u, v) w` of the warped product at height `t`, all
/// vectors in an orthonormal product frame: component 0 along `d/dt`, the
/// rest along an orthonormal fiber frame.
pub fn curvature_tensor(
    w: &WarpedProduct,
    t: f64,
    u: &DVector<f64>,
    v: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let dim = w.n + 1;
    for vec in [u, v, x] {
        if vec.len() != dim {
            return Err(Error::Dimension { expected: dim, got: vec.len() });
        }
    }
    let val = warping_local(&w.profile, t)?;
    Ok(curvature_tensor_with(w.kappa(), &val, u, v, x))
}

pub fn curvature_tensor_with(
    kappa: f64,
    val: &WarpingValues,
    u: &DVector<f64>,
    v: &DVector<f64>,
    x: &DVector<f64>,
) -> DVector<f64> {
    let dim = u.len();
    let mut tvec = DVector::zeros(dim);
    tvec[0] = 1.0;
    let hor = |a: &DVector<f64>| {
        let mut h = a.clone();
        h[0] = 0.0;
        h
    };
    let (us, vs, xs) = (hor(u), hor(v), hor(x));
    let fiber = (&us * vs.dot(&xs) - &vs * us.dot(&xs)) * (kappa / (val.rho * val.rho));
    let h2 = val.hcal * val.hcal;
    let hp = val.dhcal;
    let (ut, vt, xt) = (u[0], v[0], x[0]);
    let mut out = fiber;
    out -= (u * v.dot(x) - v * u.dot(x)) * h2;
    out += (v * ut - u * vt) * (hp * xt);
    out -= &tvec * (hp * (v.dot(x) * ut - u.dot(x) * vt));
    out
}

/// `<R(u,v)v, u>` for an orthonormal pair.
pub fn sectional_curvature(w: &WarpedProduct, t: f64, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    let defect = (u.dot(u) - 1.0).abs().max((v.dot(v) - 1.0).abs()).max(u.dot(v).abs());
    if defect > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { defect });
    }
    let r = curvature_tensor(w, t, u, v, v)?;
    Ok(r.dot(u))
}

/// Sectional curvature from the angles of an orthonormal pair with `d/dt`:
/// `(kappa/rho^2) |u* ^ v*|^2 - hcal^2 - hcal' (<u,T>^2 + <v,T>^2)`.
pub fn sectional_closed_form(kappa: f64, val: &WarpingValues, ut: f64, vt: f64) -> f64 {
    let a = ut * ut;
    let b = vt * vt;
    kappa / (val.rho * val.rho) * (1.0 - a - b) - val.hcal * val.hcal - val.dhcal * (a + b)
}
