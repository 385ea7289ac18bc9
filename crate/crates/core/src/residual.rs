//! Per-node residual summaries and grid-refinement slopes.

use serde::Serialize;

/// Residuals at or below this level count as exact in convergence studies.
pub const EXACT_FLOOR: f64 = 1e-10;
/// Finer levels whose residual drops below this are round-off dominated and
/// left out of slope fits.
pub const ROUND_OFF_FLOOR: f64 = 1e-11;
/// Observed order may fall this far below the stencil order.
pub const SLOPE_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct NodeResidual {
    pub name: String,
    pub k: Option<usize>,
    pub max: f64,
    pub rms: f64,
    pub argmax: Option<usize>,
    pub nodes: usize,
    /// Audit nodes where a value could not be formed.
    pub skipped: usize,
}

impl NodeResidual {
    /// Summarizes `(node, residual)` pairs; `None` residuals count as skipped.
    pub fn collect<I>(name: &str, k: Option<usize>, values: I) -> Self
    where
        I: IntoIterator<Item = (usize, Option<f64>)>,
    {
        let mut max = 0.0f64;
        let mut argmax = None;
        let mut sum = 0.0;
        let mut nodes = 0;
        let mut skipped = 0;
        for (i, v) in values {
            match v {
                Some(v) if v.is_finite() => {
                    nodes += 1;
                    sum += v * v;
                    if argmax.is_none() || v > max {
                        max = v;
                        argmax = Some(i);
                    }
                }
                _ => skipped += 1,
            }
        }
        let rms = if nodes > 0 { (sum / nodes as f64).sqrt() } else { 0.0 };
        Self { name: name.to_string(), k, max, rms, argmax, nodes, skipped }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConvergenceVerdict {
    /// Residual at the exactness floor on every level.
    Exact,
    Converging,
    NotConverging,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRecord {
    pub name: String,
    pub k: Option<usize>,
    pub resolutions: Vec<usize>,
    pub residuals: Vec<f64>,
    /// `log2(r_i / r_{i+1})` for consecutive dyadic levels.
    pub pairwise: Vec<f64>,
    /// Least-squares slope of `-log r` against `log2` resolution.
    pub fitted: Option<f64>,
    pub expected_order: usize,
    pub verdict: ConvergenceVerdict,
}

impl ConvergenceRecord {
    pub fn new(
        name: &str,
        k: Option<usize>,
        resolutions: Vec<usize>,
        residuals: Vec<f64>,
        expected_order: usize,
    ) -> Self {
        let pairwise = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let verdict_exact = residuals.iter().all(|&r| r <= EXACT_FLOOR);
        let mut pts: Vec<(f64, f64)> =
            resolutions.iter().zip(&residuals).map(|(&n, &r)| ((n as f64).log2(), r)).collect();
        while pts.len() > 2 && pts.last().is_some_and(|p| p.1 < ROUND_OFF_FLOOR) {
            pts.pop();
        }
        let fitted = if pts.len() >= 2 && pts.iter().all(|p| p.1 > 0.0) {
            let m = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
            let my = pts.iter().map(|p| -p.1.ln() / std::f64::consts::LN_2).sum::<f64>() / m;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (-p.1.log2() - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Some(sxy / sxx)
        } else {
            None
        };
        let verdict = if verdict_exact {
            ConvergenceVerdict::Exact
        } else if fitted.is_some_and(|s| s >= expected_order as f64 - SLOPE_MARGIN) {
            ConvergenceVerdict::Converging
        } else {
            ConvergenceVerdict::NotConverging
        };
        Self { name: name.to_string(), k, resolutions, residuals, pairwise, fitted, expected_order, verdict }
    }

    pub fn passes(&self) -> bool {
        self.verdict != ConvergenceVerdict::NotConverging
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes() {
        let r = ConvergenceRecord::new("x", None, vec![32, 64, 128], vec![1e-2, 2.5e-3, 6.25e-4], 2);
        assert!((r.fitted.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(r.verdict, ConvergenceVerdict::Converging);
        let r = ConvergenceRecord::new("x", None, vec![32, 64, 128], vec![1e-13, 2e-13, 1e-13], 2);
        assert_eq!(r.verdict, ConvergenceVerdict::Exact);
        let r = ConvergenceRecord::new("x", None, vec![32, 64, 128], vec![1e-2, 9e-3, 8e-3], 2);
        assert_eq!(r.verdict, ConvergenceVerdict::NotConverging);
    }

    #[test]
    fn collect_skips_missing() {
        let r = NodeResidual::collect("a", None, vec![(0, Some(1.0)), (1, None), (2, Some(3.0))]);
        assert_eq!(r.max, 3.0);
        assert_eq!(r.argmax, Some(2));
        assert_eq!(r.skipped, 1);
    }
}
