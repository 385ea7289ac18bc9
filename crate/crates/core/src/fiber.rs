//! Constant-curvature fiber charts with diagonal metrics.
//!
//! The round and hyperbolic charts use angular coordinates on the full period
//! `[0, 2 pi)`, which double covers the fiber; smooth functions of the
//! embedded point stay periodic and the metric coefficients stay smooth.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FiberChart {
    /// Euclidean coordinates, `kappa = 0`.
    Flat,
    /// Round sphere of radius `scale`, `kappa = 1/scale^2`.
    Sphere { scale: f64 },
    /// Hyperbolic space of curvature `-1/scale^2` in geodesic polar coordinates.
    Hyperbolic { scale: f64 },
}

/// Distance from a base point in the fiber and its differential.
#[derive(Debug, Clone)]
pub struct RadialData {
    pub r: f64,
    /// Coordinate differential of `r`.
    pub dr: Vec<f64>,
    /// `f'(r) / f(r)` for the model `f` with `Hess r = (f'/f)(g - dr dr)`.
    pub f_ratio: f64,
}

impl FiberChart {
    pub fn kappa(&self) -> f64 {
        match *self {
            FiberChart::Flat => 0.0,
            FiberChart::Sphere { scale } => 1.0 / (scale * scale),
            FiberChart::Hyperbolic { scale } => -1.0 / (scale * scale),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FiberChart::Flat => "flat",
            FiberChart::Sphere { .. } => "sphere",
            FiberChart::Hyperbolic { .. } => "hyperbolic",
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self, FiberChart::Sphere { .. })
    }

    /// Diagonal metric coefficients `sigma_a(x)`.
    pub fn metric(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        match *self {
            FiberChart::Flat => vec![1.0; n],
            FiberChart::Sphere { scale } => {
                let mut out = Vec::with_capacity(n);
                let mut prod = scale * scale;
                for a in 0..n {
                    out.push(prod);
                    prod *= x[a].sin().powi(2);
                }
                out
            }
            FiberChart::Hyperbolic { scale } => {
                let mut out = Vec::with_capacity(n);
                let mut prod = scale * scale;
                for a in 0..n {
                    out.push(prod);
                    prod *= if a == 0 { x[0].sinh().powi(2) } else { x[a].sin().powi(2) };
                }
                out
            }
        }
    }

    /// `d[a][b] = d sigma_a / d x_b`.
    pub fn metric_derivative(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = x.len();
        let mut d = vec![vec![0.0; n]; n];
        if !matches!(self, FiberChart::Flat) {
            for (a, row) in d.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate().take(a) {
                    *v = self.metric_partial(x, a, b);
                }
            }
        }
        d
    }

    fn metric_partial(&self, x: &[f64], a: usize, b: usize) -> f64 {
        let (s2, first_hyp) = match *self {
            FiberChart::Flat => return 0.0,
            FiberChart::Sphere { scale } => (scale * scale, false),
            FiberChart::Hyperbolic { scale } => (scale * scale, true),
        };
        let mut prod = s2;
        for c in 0..a {
            let hyp = first_hyp && c == 0;
            let f = |t: f64| if hyp { t.sinh() } else { t.sin() };
            let df = |t: f64| if hyp { t.cosh() } else { t.cos() };
            if c == b {
                prod *= 2.0 * f(x[c]) * df(x[c]);
            } else {
                prod *= f(x[c]).powi(2);
            }
        }
        prod
    }

    /// Christoffel symbols `gamma[a][b][c]` of the fiber metric.
    pub fn christoffel(&self, x: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let n = x.len();
        let sig = self.metric(x);
        let d = self.metric_derivative(x);
        let mut g = vec![vec![vec![0.0; n]; n]; n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut v = 0.0;
                    if a == c {
                        v += d[a][b];
                    }
                    if a == b {
                        v += d[a][c];
                    }
                    if b == c {
                        v -= d[b][a];
                    }
                    g[a][b][c] = v / (2.0 * sig[a]);
                }
            }
        }
        g
    }

    /// Distance to `origin` with its differential, when `x` is off the base
    /// point and its cut locus. The flat chart uses the unwrapped distance.
    pub fn radial(&self, x: &[f64], origin: &[f64]) -> Option<RadialData> {
        let n = x.len();
        match *self {
            FiberChart::Flat => {
                let diff: Vec<f64> = x.iter().zip(origin).map(|(a, b)| a - b).collect();
                let r = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r < 1e-12 {
                    return None;
                }
                Some(RadialData { r, dr: diff.iter().map(|v| v / r).collect(), f_ratio: 1.0 / r })
            }
            FiberChart::Sphere { scale } => {
                let (p, dp) = sphere_embedding(x);
                let (o, _) = sphere_embedding(origin);
                let c: f64 = p.iter().zip(&o).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
                let s = (1.0 - c * c).sqrt();
                if s < 1e-10 {
                    return None;
                }
                let ang = c.acos();
                let dr = (0..n).map(|a| -scale * dot(&dp[a], &o) / s).collect();
                Some(RadialData { r: scale * ang, dr, f_ratio: ang.cos() / (ang.sin() * scale) })
            }
            FiberChart::Hyperbolic { scale } => {
                let (p, dp) = hyperboloid_embedding(x);
                let (o, _) = hyperboloid_embedding(origin);
                let c = (-lorentz(&p, &o)).max(1.0);
                let s = (c * c - 1.0).sqrt();
                if s < 1e-10 {
                    return None;
                }
                let ang = c.acosh();
                let dr = (0..n).map(|a| -scale * lorentz(&dp[a], &o) / s).collect();
                Some(RadialData { r: scale * ang, dr, f_ratio: ang.cosh() / (ang.sinh() * scale) })
            }
        }
    }

    /// Distance to `origin`; the flat chart uses the unwrapped distance.
    pub fn distance(&self, x: &[f64], origin: &[f64]) -> f64 {
        match *self {
            FiberChart::Flat => x.iter().zip(origin).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            FiberChart::Sphere { scale } => {
                let (p, _) = sphere_embedding(x);
                let (o, _) = sphere_embedding(origin);
                scale * dot(&p, &o).clamp(-1.0, 1.0).acos()
            }
            FiberChart::Hyperbolic { scale } => {
                let (p, _) = hyperboloid_embedding(x);
                let (o, _) = hyperboloid_embedding(origin);
                scale * (-lorentz(&p, &o)).max(1.0).acosh()
            }
        }
    }

    /// Closed-form coordinate Hessian of `r^2` about `origin`.
    pub fn hessian_distance_squared(&self, x: &[f64], origin: &[f64]) -> Option<Vec<Vec<f64>>> {
        let n = x.len();
        if matches!(self, FiberChart::Flat) {
            return Some((0..n).map(|a| (0..n).map(|b| if a == b { 2.0 } else { 0.0 }).collect()).collect());
        }
        let rd = self.radial(x, origin)?;
        let sig = self.metric(x);
        let mut h = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                let s = if a == b { sig[a] } else { 0.0 };
                let drdr = rd.dr[a] * rd.dr[b];
                h[a][b] = 2.0 * drdr + 2.0 * rd.r * rd.f_ratio * (s - drdr);
            }
        }
        Some(h)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lorentz(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

/// Unit sphere `S^d` in `R^{d+1}` from angles `theta_0..theta_{d-1}`, with
/// `d[a]` the derivative of the embedding along `theta_a`.
pub fn sphere_embedding(theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = theta.len();
    let sines: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
    let cosines: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let prod_except = |upto: usize, skip: Option<usize>| -> f64 {
        (0..upto).filter(|&c| Some(c) != skip).map(|c| sines[c]).product()
    };
    let mut x = vec![0.0; d + 1];
    let mut dx = vec![vec![0.0; d + 1]; d];
    for m in 0..d {
        x[m] = prod_except(m, None) * cosines[m];
        for a in 0..d {
            dx[a][m] = if a > m {
                0.0
            } else if a == m {
                -prod_except(m, None) * sines[m]
            } else {
                prod_except(m, Some(a)) * cosines[a] * cosines[m]
            };
        }
    }
    x[d] = prod_except(d, None);
    for a in 0..d {
        dx[a][d] = prod_except(d, Some(a)) * cosines[a];
    }
    (x, dx)
}

/// Hyperboloid model point `(cosh r, sinh r S(theta))` from polar coordinates
/// `(r, theta_1, ..)`.
pub fn hyperboloid_embedding(x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = x.len();
    let r = x[0];
    let (s, ds) = sphere_embedding(&x[1..]);
    let mut p = Vec::with_capacity(n + 1);
    p.push(r.cosh());
    p.extend(s.iter().map(|v| r.sinh() * v));
    let mut dp = vec![vec![0.0; n + 1]; n];
    dp[0][0] = r.sinh();
    for (m, v) in s.iter().enumerate() {
        dp[0][m + 1] = r.cosh() * v;
    }
    for a in 1..n {
        for (m, v) in ds[a - 1].iter().enumerate() {
            dp[a][m + 1] = r.sinh() * v;
        }
    }
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(chart: FiberChart, x: &[f64]) {
        let n = x.len();
        let d = chart.metric_derivative(x);
        let h = 1e-6;
        for b in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[b] += h;
            xm[b] -= h;
            let sp = chart.metric(&xp);
            let sm = chart.metric(&xm);
            for a in 0..n {
                let fd = (sp[a] - sm[a]) / (2.0 * h);
                assert!((fd - d[a][b]).abs() < 1e-7, "{a} {b}: {fd} vs {}", d[a][b]);
            }
        }
    }

    #[test]
    fn metric_derivatives_match_differences() {
        fd_check(FiberChart::Sphere { scale: 1.3 }, &[0.7, 2.1, 4.0]);
        fd_check(FiberChart::Hyperbolic { scale: 0.8 }, &[0.9, 1.1, 3.0]);
        fd_check(FiberChart::Hyperbolic { scale: 1.0 }, &[-1.4, 5.0]);
    }

    #[test]
    fn embedding_pulls_back_metric() {
        let th = [0.8, 1.9, 0.3];
        let (p, dp) = sphere_embedding(&th);
        assert!((dot(&p, &p) - 1.0).abs() < 1e-14);
        let sig = FiberChart::Sphere { scale: 1.0 }.metric(&th);
        for a in 0..3 {
            for b in 0..3 {
                let g = dot(&dp[a], &dp[b]);
                let expect = if a == b { sig[a] } else { 0.0 };
                assert!((g - expect).abs() < 1e-14);
            }
        }
        let x = [1.2, 0.4, 2.2];
        let (q, dq) = hyperboloid_embedding(&x);
        assert!((lorentz(&q, &q) + 1.0).abs() < 1e-12);
        let sig = FiberChart::Hyperbolic { scale: 1.0 }.metric(&x);
        for a in 0..3 {
            for b in 0..3 {
                let expect = if a == b { sig[a] } else { 0.0 };
                assert!((lorentz(&dq[a], &dq[b]) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn radial_gradient_matches_differences() {
        for chart in [FiberChart::Flat, FiberChart::Sphere { scale: 2.0 }, FiberChart::Hyperbolic { scale: 1.5 }] {
            let x = [0.9, 1.3];
            let o = [0.4, 2.5];
            let rd = chart.radial(&x, &o).unwrap();
            let h = 1e-6;
            for a in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[a] += h;
                xm[a] -= h;
                let fd = (chart.radial(&xp, &o).unwrap().r - chart.radial(&xm, &o).unwrap().r) / (2.0 * h);
                assert!((fd - rd.dr[a]).abs() < 1e-7);
            }
            let sig = chart.metric(&x);
            let norm: f64 = (0..2).map(|a| rd.dr[a] * rd.dr[a] / sig[a]).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}
