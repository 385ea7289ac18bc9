//! Structured tensor-product grids with central finite differences.
//!
//! Values that cannot be formed because a stencil leaves a non-periodic axis
//! are NaN; every consumer masks on finiteness.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    pub fn order(self) -> usize {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }

    pub fn half_width(self) -> usize {
        self.order() / 2
    }

    pub fn from_order(p: usize) -> Option<Self> {
        match p {
            2 => Some(StencilOrder::Second),
            4 => Some(StencilOrder::Fourth),
            _ => None,
        }
    }

    fn first(self) -> &'static [(isize, f64)] {
        match self {
            StencilOrder::Second => &[(-1, -0.5), (1, 0.5)],
            StencilOrder::Fourth => &[(-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)],
        }
    }

    fn second(self) -> &'static [(isize, f64)] {
        match self {
            StencilOrder::Second => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
            StencilOrder::Fourth => &[(-2, -1.0 / 12.0), (-1, 4.0 / 3.0), (0, -2.5), (1, 4.0 / 3.0), (2, -1.0 / 12.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub nodes: usize,
    pub lo: f64,
    pub step: f64,
    /// Node `i` sits at `lo + (i + offset) step`.
    pub offset: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn periodic(lo: f64, period: f64, nodes: usize, offset: f64) -> Self {
        Self { nodes, lo, step: period / nodes as f64, offset, periodic: true }
    }

    /// Cell-centred nodes on `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64, nodes: usize) -> Self {
        Self { nodes, lo, step: (hi - lo) / nodes as f64, offset: 0.5, periodic: false }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lo + (i as f64 + self.offset) * self.step
    }

    pub fn refined(&self, factor: usize) -> Self {
        let nodes = self.nodes * factor;
        let step = self.step / factor as f64;
        // keep node positions nested when offset is 0, cell-centred when 0.5
        Self { nodes, lo: self.lo, step, offset: self.offset, periodic: self.periodic }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Self {
        let mut strides = vec![1; axes.len()];
        for a in (0..axes.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * axes[a + 1].nodes;
        }
        let len = axes.iter().map(|a| a.nodes).product();
        Self { axes, strides, len }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_periodic(&self) -> bool {
        self.axes.iter().all(|a| a.periodic)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        self.strides.iter().zip(&self.axes).map(|(s, a)| (flat / s) % a.nodes).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().zip(&self.axes).map(|(&i, a)| a.coord(i)).collect()
    }

    pub fn shift(&self, flat: usize, axis: usize, off: isize) -> Option<usize> {
        let ax = &self.axes[axis];
        let i = (flat / self.strides[axis]) % ax.nodes;
        let j = i as isize + off;
        let j = if ax.periodic {
            j.rem_euclid(ax.nodes as isize) as usize
        } else if j < 0 || j >= ax.nodes as isize {
            return None;
        } else {
            j as usize
        };
        Some(flat - i * self.strides[axis] + j * self.strides[axis])
    }

    /// Index distance to the nearest end of a non-periodic axis.
    pub fn boundary_distance(&self, flat: usize) -> usize {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .filter(|(_, a)| !a.periodic)
            .map(|(&i, a)| i.min(a.nodes - 1 - i))
            .min()
            .unwrap_or(usize::MAX)
    }

    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len).map(|i| f(&self.coords(i))).collect()
    }

    fn apply(&self, f: &[f64], axis: usize, stencil: &[(isize, f64)], scale: f64) -> Vec<f64> {
        (0..self.len)
            .map(|i| {
                let mut acc = 0.0;
                for &(off, c) in stencil {
                    match self.shift(i, axis, off) {
                        Some(j) => acc += c * f[j],
                        None => return f64::NAN,
                    }
                }
                acc * scale
            })
            .collect()
    }

    pub fn d1(&self, f: &[f64], axis: usize, order: StencilOrder) -> Vec<f64> {
        let h = self.axes[axis].step;
        self.apply(f, axis, order.first(), 1.0 / h)
    }

    pub fn d2(&self, f: &[f64], a: usize, b: usize, order: StencilOrder) -> Vec<f64> {
        if a == b {
            let h = self.axes[a].step;
            self.apply(f, a, order.second(), 1.0 / (h * h))
        } else {
            self.d1(&self.d1(f, a, order), b, order)
        }
    }

    pub fn gradient(&self, f: &[f64], order: StencilOrder) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|a| self.d1(f, a, order)).collect()
    }

    /// All second partials, `out[a][b]`, symmetric.
    pub fn hessian(&self, f: &[f64], order: StencilOrder) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim();
        let grad = self.gradient(f, order);
        let mut out = vec![vec![Vec::new(); n]; n];
        for a in 0..n {
            out[a][a] = self.d2(f, a, a, order);
            for b in (a + 1)..n {
                let m = self.d1(&grad[a], b, order);
                out[a][b] = m.clone();
                out[b][a] = m;
            }
        }
        out
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.axes.iter().map(|a| a.refined(factor)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodic_derivatives_converge() {
        for order in [StencilOrder::Second, StencilOrder::Fourth] {
            let mut errs = Vec::new();
            for n in [16usize, 32, 64] {
                let g = Grid::new(vec![Axis::periodic(0.0, 2.0 * PI, n, 0.0), Axis::periodic(0.0, 2.0 * PI, n, 0.5)]);
                let f = g.sample(|x| (x[0]).sin() * (2.0 * x[1]).cos());
                let fxy = g.d2(&f, 0, 1, order);
                let fyy = g.d2(&f, 1, 1, order);
                let mut e: f64 = 0.0;
                for i in 0..g.len() {
                    let x = g.coords(i);
                    e = e.max((fxy[i] + 2.0 * x[0].cos() * (2.0 * x[1]).sin()).abs());
                    e = e.max((fyy[i] + 4.0 * x[0].sin() * (2.0 * x[1]).cos()).abs());
                }
                errs.push(e);
            }
            let slope = (errs[1] / errs[2]).log2();
            assert!((slope - order.order() as f64).abs() < 0.2, "{order:?} {errs:?}");
        }
    }

    #[test]
    fn open_axis_marks_boundary() {
        let g = Grid::new(vec![Axis::interval(0.0, 1.0, 10)]);
        let f = g.sample(|x| x[0] * x[0]);
        let d = g.d1(&f, 0, StencilOrder::Second);
        assert!(d[0].is_nan() && d[9].is_nan());
        assert!((d[4] - 2.0 * g.coords(4)[0]).abs() < 1e-13);
        assert_eq!(g.boundary_distance(0), 0);
        assert_eq!(g.boundary_distance(5), 4);
    }

    #[test]
    fn index_round_trip() {
        let g =
            Grid::new(vec![Axis::interval(0.0, 1.0, 3), Axis::periodic(0.0, 1.0, 4, 0.0), Axis::interval(0.0, 1.0, 5)]);
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.shift(g.flat_index(&[1, 3, 2]), 1, 1), Some(g.flat_index(&[1, 0, 2])));
    }
}
