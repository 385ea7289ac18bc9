//! Height functions for graph hypersurfaces `t = u(x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::{hyperboloid_embedding, sphere_embedding, FiberChart};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GraphFamily {
    Slice {
        t0: f64,
    },
    /// `t0 + sum a cos(m.x) + b sin(m.x)` over integer wave vectors.
    Fourier {
        t0: f64,
        terms: Vec<(Vec<i32>, f64, f64)>,
    },
    /// `t0 + sum_i a_i X_i + sum_{i<=j} b_ij X_i X_j` in the unit-sphere embedding.
    SpherePolynomial {
        t0: f64,
        linear: Vec<f64>,
        quadratic: Vec<(usize, usize, f64)>,
    },
    /// `t0 + sum_i a_i tanh(Y_i / 2)` over the spatial hyperboloid coordinates.
    HyperbolicTanh {
        t0: f64,
        coeffs: Vec<f64>,
    },
    /// Smooth periodic bump, `t0 + amp exp((sum cos(x_a - c_a) - n) / w^2)`.
    Bump {
        t0: f64,
        amplitude: f64,
        width: f64,
        center: Vec<f64>,
    },
    /// `t0 + a (x_0^2 - x_1^2) / 2` on a flat patch.
    Saddle {
        t0: f64,
        a: f64,
    },
    /// `t0 + a x_0` on a flat patch.
    Tilted {
        t0: f64,
        a: f64,
    },
    /// Round sphere of the given radius centred at `center` in flat space,
    /// written over the unit-sphere fiber of the linear profile.
    OffsetSphere {
        radius: f64,
        center: Vec<f64>,
    },
}

impl GraphFamily {
    /// Random smooth perturbation of the slice `t0` with `|u - t0| <= amplitude`.
    pub fn random(chart: FiberChart, n: usize, t0: f64, amplitude: f64, modes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match chart {
            FiberChart::Flat => {
                let modes = modes.max(1) as i32;
                let base = (2 * modes + 1) as usize;
                let vectors: Vec<Vec<i32>> = (0..base.pow(n as u32))
                    .map(|code| {
                        let mut c = code;
                        let mut m = vec![0; n];
                        for slot in m.iter_mut().rev() {
                            *slot = (c % base) as i32 - modes;
                            c /= base;
                        }
                        m
                    })
                    .filter(|m| matches!(m.iter().find(|&&v| v != 0), Some(&v) if v > 0))
                    .collect();
                let mut terms: Vec<(Vec<i32>, f64, f64)> =
                    vectors.into_iter().map(|m| (m, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                let norm: f64 = terms.iter().map(|(_, a, b)| a.abs() + b.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
                for t in terms.iter_mut() {
                    t.1 *= amplitude / norm;
                    t.2 *= amplitude / norm;
                }
                GraphFamily::Fourier { t0, terms }
            }
            FiberChart::Sphere { .. } => {
                let mut linear: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut quadratic: Vec<(usize, usize, f64)> = Vec::new();
                if modes >= 2 {
                    for i in 0..=n {
                        for j in i..=n {
                            quadratic.push((i, j, rng.gen_range(-1.0..1.0)));
                        }
                    }
                }
                let norm = (linear.iter().map(|v| v.abs()).sum::<f64>()
                    + quadratic.iter().map(|q| q.2.abs()).sum::<f64>())
                .max(f64::MIN_POSITIVE);
                linear.iter_mut().for_each(|v| *v *= amplitude / norm);
                quadratic.iter_mut().for_each(|q| q.2 *= amplitude / norm);
                GraphFamily::SpherePolynomial { t0, linear, quadratic }
            }
            FiberChart::Hyperbolic { .. } => {
                let mut coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = coeffs.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
                coeffs.iter_mut().for_each(|v| *v *= amplitude / norm);
                GraphFamily::HyperbolicTanh { t0, coeffs }
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            GraphFamily::Slice { .. } => "slice",
            GraphFamily::Fourier { .. } => "fourier",
            GraphFamily::SpherePolynomial { .. } => "sphere-polynomial",
            GraphFamily::HyperbolicTanh { .. } => "hyperbolic-tanh",
            GraphFamily::Bump { .. } => "bump",
            GraphFamily::Saddle { .. } => "saddle",
            GraphFamily::Tilted { .. } => "tilted",
            GraphFamily::OffsetSphere { .. } => "offset-sphere",
        }
    }

    /// Checks that the family makes sense over `chart`.
    pub fn validate(&self, chart: FiberChart, n: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("{} graph: {msg}", self.label())));
        match self {
            GraphFamily::Fourier { terms, .. } if terms.iter().any(|t| t.0.len() != n) => bad("wave vector dimension"),
            GraphFamily::Fourier { .. } | GraphFamily::Saddle { .. } | GraphFamily::Tilted { .. }
                if chart != FiberChart::Flat =>
            {
                bad("needs the flat chart")
            }
            GraphFamily::Saddle { .. } if n < 2 => bad("needs n >= 2"),
            GraphFamily::SpherePolynomial { linear, .. } if linear.len() != n + 1 => bad("coefficient count"),
            GraphFamily::SpherePolynomial { .. } if !matches!(chart, FiberChart::Sphere { .. }) => {
                bad("needs the sphere chart")
            }
            GraphFamily::HyperbolicTanh { .. } if !matches!(chart, FiberChart::Hyperbolic { .. }) => {
                bad("needs the hyperbolic chart")
            }
            GraphFamily::OffsetSphere { radius, center } => {
                if !matches!(chart, FiberChart::Sphere { scale } if scale == 1.0) {
                    return bad("needs the unit sphere chart");
                }
                if center.len() != n + 1 {
                    return bad("center dimension");
                }
                let c = center.iter().map(|v| v * v).sum::<f64>().sqrt();
                if c >= *radius {
                    return bad("center must lie inside the sphere");
                }
                Ok(())
            }
            GraphFamily::Bump { center, .. } if center.len() != n && chart == FiberChart::Flat => {
                bad("center dimension")
            }
            GraphFamily::Bump { center, .. } if matches!(chart, FiberChart::Sphere { .. }) && center.len() != n => {
                bad("center dimension")
            }
            GraphFamily::Bump { .. } if matches!(chart, FiberChart::Hyperbolic { .. }) => {
                bad("not available on the hyperbolic chart")
            }
            _ => Ok(()),
        }
    }

    pub fn height(&self, chart: FiberChart, x: &[f64]) -> f64 {
        match self {
            GraphFamily::Slice { t0 } => *t0,
            GraphFamily::Fourier { t0, terms } => {
                t0 + terms
                    .iter()
                    .map(|(m, a, b)| {
                        let ph: f64 = m.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
                        a * ph.cos() + b * ph.sin()
                    })
                    .sum::<f64>()
            }
            GraphFamily::SpherePolynomial { t0, linear, quadratic } => {
                let (p, _) = sphere_embedding(x);
                t0 + linear.iter().zip(&p).map(|(a, v)| a * v).sum::<f64>()
                    + quadratic.iter().map(|&(i, j, b)| b * p[i] * p[j]).sum::<f64>()
            }
            GraphFamily::HyperbolicTanh { t0, coeffs } => {
                let (p, _) = hyperboloid_embedding(x);
                t0 + coeffs.iter().zip(&p[1..]).map(|(a, v)| a * (0.5 * v).tanh()).sum::<f64>()
            }
            GraphFamily::Bump { t0, amplitude, width, center } => {
                let s = match chart {
                    FiberChart::Sphere { .. } => {
                        let (p, _) = sphere_embedding(x);
                        let (c, _) = sphere_embedding(center);
                        p.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() - 1.0
                    }
                    _ => x.iter().zip(center).map(|(a, c)| (a - c).cos() - 1.0).sum::<f64>(),
                };
                t0 + amplitude * (s / (width * width)).exp()
            }
            GraphFamily::Saddle { t0, a } => t0 + 0.5 * a * (x[0] * x[0] - x[1] * x[1]),
            GraphFamily::Tilted { t0, a } => t0 + a * x[0],
            GraphFamily::OffsetSphere { radius, center } => {
                let (p, _) = sphere_embedding(x);
                let cw: f64 = center.iter().zip(&p).map(|(a, b)| a * b).sum();
                let c2: f64 = center.iter().map(|v| v * v).sum();
                cw + (cw * cw - c2 + radius * radius).sqrt()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_is_bounded_and_reproducible() {
        let f = GraphFamily::random(FiberChart::Flat, 2, 1.0, 0.2, 2, 9);
        let g = GraphFamily::random(FiberChart::Flat, 2, 1.0, 0.2, 2, 9);
        assert_eq!(f, g);
        if let GraphFamily::Fourier { terms, .. } = &f {
            assert_eq!(terms.len(), 12);
        }
        for i in 0..50 {
            let x = [i as f64 * 0.37, i as f64 * 1.1];
            assert!((f.height(FiberChart::Flat, &x) - 1.0).abs() <= 0.2 + 1e-15);
        }
    }

    #[test]
    fn offset_sphere_distance() {
        let fam = GraphFamily::OffsetSphere { radius: 2.0, center: vec![0.3, -0.2, 0.5] };
        let chart = FiberChart::Sphere { scale: 1.0 };
        let x = [0.7, 2.0];
        let u = fam.height(chart, &x);
        let (p, _) = sphere_embedding(&x);
        let d: f64 = p.iter().zip([0.3, -0.2, 0.5]).map(|(a, c)| (u * a - c).powi(2)).sum();
        assert!((d.sqrt() - 2.0).abs() < 1e-14);
    }
}
