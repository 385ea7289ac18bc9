//! Graph hypersurfaces `t = u(x)` sampled over fiber charts, with pointwise
//! extrinsic geometry and discrete covariant calculus on the induced metric.

mod audit;
mod families;

pub use audit::*;
pub use families::GraphFamily;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::ambient::{warping_eval, Orientation, WarpedProduct, WarpingValues};
use crate::error::{Error, Result};
use crate::fiber::FiberChart;
use crate::grid::{Axis, Grid, StencilOrder};
use crate::linalg::{cholesky_lower, jacobi_eigen, lower_solve, lower_solve_vec};
use crate::symfun::{newton_from_eigen, NewtonFamily};

use std::f64::consts::PI;

/// Coordinate domain of a fiber chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Domain {
    /// Periodic box `[0, period)^n` of the flat chart.
    FlatTorus { period: f64 },
    /// Non-periodic box `[lo, hi]^n` of the flat chart.
    FlatPatch { lo: f64, hi: f64 },
    /// Angles on `[0, 2 pi)^n` with nodes off the poles. Polar angles double
    /// cover `[0, pi]` and carry twice the nominal resolution so the spacing
    /// matches a chart on `[0, pi]`.
    SphereAngles,
    /// Polar coordinates with `r` in `[-radius, radius]`.
    HyperbolicDisk { radius: f64 },
}

impl Domain {
    pub fn default_for(chart: FiberChart) -> Self {
        match chart {
            FiberChart::Flat => Domain::FlatTorus { period: 2.0 * PI },
            FiberChart::Sphere { .. } => Domain::SphereAngles,
            FiberChart::Hyperbolic { .. } => Domain::HyperbolicDisk { radius: 2.0 },
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self, Domain::FlatTorus { .. } | Domain::SphereAngles)
    }

    pub fn grid(&self, n: usize, resolution: usize) -> Grid {
        let two_pi = 2.0 * PI;
        let axes = (0..n)
            .map(|a| match *self {
                Domain::FlatTorus { period } => Axis::periodic(0.0, period, resolution, 0.0),
                Domain::FlatPatch { lo, hi } => Axis::interval(lo, hi, resolution),
                Domain::SphereAngles => {
                    let nodes = if a + 1 < n { 2 * resolution } else { resolution };
                    Axis::periodic(0.0, two_pi, nodes, 0.5)
                }
                Domain::HyperbolicDisk { radius } => {
                    if a == 0 {
                        Axis::interval(-radius, radius, resolution)
                    } else {
                        let nodes = if a + 1 < n { 2 * resolution } else { resolution };
                        Axis::periodic(0.0, two_pi, nodes, 0.5)
                    }
                }
            })
            .collect();
        Grid::new(axes)
    }

    fn matches_chart(&self, chart: FiberChart) -> bool {
        matches!(
            (self, chart),
            (Domain::FlatTorus { .. } | Domain::FlatPatch { .. }, FiberChart::Flat)
                | (Domain::SphereAngles, FiberChart::Sphere { .. })
                | (Domain::HyperbolicDisk { .. }, FiberChart::Hyperbolic { .. })
        )
    }
}

/// A graph `t = u(x)` sampled on a grid over a fiber chart.
#[derive(Debug, Clone)]
pub struct GraphImmersion {
    pub ambient: WarpedProduct,
    pub domain: Domain,
    pub grid: Grid,
    pub heights: Vec<f64>,
    pub family: Option<GraphFamily>,
    /// Nominal nodes per axis.
    pub resolution: usize,
}

impl GraphImmersion {
    pub fn sample(ambient: &WarpedProduct, domain: Domain, resolution: usize, family: &GraphFamily) -> Result<Self> {
        if !domain.matches_chart(ambient.chart) {
            return Err(Error::Config(format!("domain {domain:?} does not fit the {} chart", ambient.chart.name())));
        }
        if resolution < 8 {
            return Err(Error::Config(format!("resolution {resolution} is below 8 nodes per axis")));
        }
        family.validate(ambient.chart, ambient.n)?;
        let grid = domain.grid(ambient.n, resolution);
        let chart = ambient.chart;
        let heights = grid.sample(|x| family.height(chart, x));
        let imm = Self { ambient: ambient.clone(), domain, grid, heights, family: Some(family.clone()), resolution };
        imm.check_heights()?;
        Ok(imm)
    }

    pub fn from_heights(ambient: &WarpedProduct, domain: Domain, grid: Grid, heights: Vec<f64>) -> Result<Self> {
        if heights.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), got: heights.len() });
        }
        let resolution = grid.axes.iter().map(|a| a.nodes).min().unwrap_or(0);
        let imm = Self { ambient: ambient.clone(), domain, grid, heights, family: None, resolution };
        imm.check_heights()?;
        Ok(imm)
    }

    fn check_heights(&self) -> Result<()> {
        let (lo, hi) = self.ambient.profile.interval;
        for (i, &h) in self.heights.iter().enumerate() {
            if !(h > lo && h < hi) {
                return Err(Error::Config(format!("height {h} at node {i} leaves the profile interval ({lo}, {hi})")));
            }
        }
        Ok(())
    }

    /// Same family sampled at `factor` times the resolution.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let fam =
            self.family.as_ref().ok_or_else(|| Error::Config("refinement needs a closed-form height family".into()))?;
        Self::sample(&self.ambient, self.domain.clone(), self.resolution * factor, fam)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn height_range(&self) -> (f64, f64) {
        self.heights.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &h| (a.min(h), b.max(h)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationConfig {
    pub stencil: StencilOrder,
    /// Nodes closer than this angle to a coordinate singularity are excluded
    /// from audits.
    pub polar_cap: f64,
    /// Tolerance for algebraic identities evaluated pointwise.
    pub identity_tol: f64,
    pub orientation: Orientation,
    /// Physical bounds of the audit set; refinement studies copy them from
    /// the coarsest level so every level audits the same region.
    pub limits: Option<AuditLimits>,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            stencil: StencilOrder::Second,
            polar_cap: 0.6,
            identity_tol: 1e-10,
            orientation: Orientation::Down,
            limits: None,
        }
    }
}

impl DiscretizationConfig {
    pub fn with_limits(&self, limits: AuditLimits) -> Self {
        Self { limits: Some(limits), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditLimits {
    /// `[lo, hi]` of the audited coordinates on each non-periodic axis.
    pub boxes: Vec<Option<(f64, f64)>>,
    /// Smallest `|sin|` of a capped polar angle.
    pub sin_cap: f64,
    /// Smallest `|r|` on the hyperbolic radial axis.
    pub radial: f64,
}

const LIMIT_SLACK: f64 = 1e-12;

/// Extrinsic geometry at one node. Matrices in an orthonormal tangent frame
/// unless named `*_coord`.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub x: Vec<f64>,
    pub h: f64,
    pub du: DVector<f64>,
    pub warp: WarpingValues,
    /// Fiber metric coefficients at `x`.
    pub fiber_metric: Vec<f64>,
    /// `<N, d/dt>`.
    pub theta: f64,
    /// Normal in ambient coordinates `(dt, dx^1, ..)`.
    pub normal_coord: DVector<f64>,
    /// Normal in the orthonormal product frame.
    pub normal: DVector<f64>,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    /// Cholesky factor `metric = L L^T`; frame vectors are the columns of `L^{-T}`.
    pub chol: DMatrix<f64>,
    pub second_form_coord: DMatrix<f64>,
    pub shape: DMatrix<f64>,
    pub newton: NewtonFamily,
    /// `grad h` in the frame.
    pub grad_h: DVector<f64>,
}

impl PointGeometry {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn grad_h_norm2(&self) -> f64 {
        self.grad_h.norm_squared()
    }

    /// Frame components of the orthonormal frame vectors as coordinate vectors
    /// (columns).
    pub fn frame(&self) -> DMatrix<f64> {
        let n = self.n();
        lower_solve(&self.chol, &DMatrix::identity(n, n)).transpose()
    }

    /// Converts a coordinate covector into frame components.
    pub fn covector_to_frame(&self, w: &DVector<f64>) -> DVector<f64> {
        lower_solve_vec(&self.chol, w)
    }

    /// Frame components of a coordinate tangent vector.
    pub fn vector_to_frame(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.transpose() * v
    }

    /// Coordinate components of a frame vector.
    pub fn frame_to_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.transpose().solve_upper_triangular(v).expect("triangular factor with zero pivot")
    }

    /// Converts a coordinate bilinear form into frame components.
    pub fn form_to_frame(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let left = lower_solve(&self.chol, b);
        lower_solve(&self.chol, &left.transpose()).transpose()
    }

    /// Converts a frame endomorphism into mixed coordinate components `P^i_j`.
    pub fn endo_to_coord(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        let lt = self.chol.transpose();
        let tmp = p * &lt;
        lt.solve_upper_triangular(&tmp).expect("triangular factor with zero pivot")
    }

    /// Pushes a frame vector of the hypersurface into the orthonormal
    /// product frame of the ambient space.
    pub fn push_forward(&self, v: &DVector<f64>) -> DVector<f64> {
        let c = self.frame_to_vector(v);
        let n = self.n();
        let mut out = DVector::zeros(n + 1);
        out[0] = c.dot(&self.du);
        for a in 0..n {
            out[a + 1] = self.warp.rho * self.fiber_metric[a].sqrt() * c[a];
        }
        out
    }

    /// Reverses the normal.
    pub fn flipped(&self) -> Self {
        let mut g = self.clone();
        g.theta = -g.theta;
        g.normal_coord = -&g.normal_coord;
        g.normal = -&g.normal;
        g.second_form_coord = -&g.second_form_coord;
        g.shape = -&g.shape;
        g.newton = g.newton.flipped();
        g
    }

    /// `hess h = hcal(h)(X - <X, grad h> grad h) + theta A X` in the frame.
    pub fn height_hessian(&self) -> DMatrix<f64> {
        let n = self.n();
        let gh = &self.grad_h;
        (DMatrix::identity(n, n) - gh * gh.transpose()) * self.warp.hcal + &self.shape * self.theta
    }

    /// `hess sigma(h) = rho' grad h (x) grad h + rho hess h`.
    pub fn sigma_hessian(&self) -> DMatrix<f64> {
        let gh = &self.grad_h;
        gh * gh.transpose() * self.warp.drho + self.height_hessian() * self.warp.rho
    }

    /// `theta_hat = rho(h) theta`.
    pub fn theta_hat(&self) -> f64 {
        self.warp.rho * self.theta
    }

    /// `<P_k grad h, grad h>`.
    pub fn newton_grad(&self, k: usize) -> f64 {
        let gh = &self.grad_h;
        gh.dot(&(&self.newton.p[k] * gh))
    }
}

struct NodeInput<'a> {
    x: Vec<f64>,
    h: f64,
    du: DVector<f64>,
    ddu: DMatrix<f64>,
    w: &'a WarpedProduct,
}

fn point_geometry(inp: NodeInput<'_>) -> Result<PointGeometry> {
    let n = inp.x.len();
    let chart = inp.w.chart;
    let warp = warping_eval(inp.w, inp.h)?;
    let sig = chart.metric(&inp.x);
    let gam = chart.christoffel(&inp.x);
    let rho2 = warp.rho * warp.rho;
    let du = inp.du;
    let metric = DMatrix::from_fn(n, n, |i, j| du[i] * du[j] + if i == j { rho2 * sig[i] } else { 0.0 });
    let q: f64 = (0..n).map(|a| du[a] * du[a] / sig[a]).sum();
    let wfac = (1.0 + q / rho2).sqrt();
    let theta = -1.0 / wfac;
    let mut normal_coord = DVector::zeros(n + 1);
    normal_coord[0] = theta;
    for a in 0..n {
        normal_coord[a + 1] = du[a] / (sig[a] * rho2 * wfac);
    }
    let mut normal = DVector::zeros(n + 1);
    normal[0] = theta;
    for a in 0..n {
        normal[a + 1] = warp.rho * sig[a].sqrt() * normal_coord[a + 1];
    }
    let second = DMatrix::from_fn(n, n, |i, j| {
        let fiber: f64 = (0..n).map(|b| gam[b][i][j] * du[b]).sum();
        let diag = if i == j { warp.rho * warp.drho * sig[i] } else { 0.0 };
        (-inp.ddu[(i, j)] + fiber + diag + 2.0 * warp.hcal * du[i] * du[j]) / wfac
    });
    let chol = cholesky_lower(&metric)?;
    let metric_inv = {
        let linv = lower_solve(&chol, &DMatrix::identity(n, n));
        linv.transpose() * linv
    };
    let left = lower_solve(&chol, &second);
    let shape = lower_solve(&chol, &left.transpose()).transpose();
    let shape = (&shape + shape.transpose()) * 0.5;
    let eig = jacobi_eigen(&shape)?;
    let newton = newton_from_eigen(shape.clone(), eig.values, eig.vectors);
    let grad_h = lower_solve_vec(&chol, &du);
    let pg = PointGeometry {
        x: inp.x,
        h: inp.h,
        du,
        warp,
        fiber_metric: sig,
        theta,
        normal_coord,
        normal,
        metric,
        metric_inv,
        chol,
        second_form_coord: second,
        shape,
        newton,
        grad_h,
    };
    if !pg.shape.iter().all(|v| v.is_finite()) || !pg.theta.is_finite() {
        return Err(Error::Degenerate("non-finite shape operator".into()));
    }
    Ok(pg)
}

/// Geometry of every node plus the data needed for discrete covariant calculus.
#[derive(Debug, Clone)]
pub struct GeometryGrid {
    pub imm: GraphImmersion,
    pub config: DiscretizationConfig,
    pub nodes: Vec<Option<PointGeometry>>,
    /// Nodes entering audits: inside the stencil margin and off coordinate
    /// singularities.
    pub audit: Vec<bool>,
    /// Christoffel symbols `gamma[k][i][j]` of the discrete induced metric.
    christoffel: Vec<Option<Vec<f64>>>,
    sqrt_det: Vec<f64>,
}

/// Builds the pointwise geometry from differenced heights.
pub fn evaluate_geometry(imm: &GraphImmersion, cfg: &DiscretizationConfig) -> Result<GeometryGrid> {
    let grid = &imm.grid;
    let n = grid.dim();
    let order = cfg.stencil;
    let u = &imm.heights;
    let grad = grid.gradient(u, order);
    let hess = grid.hessian(u, order);
    let nodes: Vec<Result<Option<PointGeometry>>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let du = DVector::from_fn(n, |a, _| grad[a][i]);
            let ddu = DMatrix::from_fn(n, n, |a, b| hess[a][b][i]);
            if !du.iter().chain(ddu.iter()).all(|v| v.is_finite()) {
                return Ok(None);
            }
            let inp = NodeInput { x: grid.coords(i), h: u[i], du, ddu, w: &imm.ambient };
            point_geometry(inp)
                .map(Some)
                .map_err(|e| Error::Degenerate(format!("node {i} at {:?}: {e}", grid.coords(i))))
        })
        .collect();
    let nodes = nodes.into_iter().collect::<Result<Vec<_>>>()?;
    let nodes: Vec<Option<PointGeometry>> = match cfg.orientation {
        Orientation::Down => nodes,
        Orientation::Up => nodes.into_iter().map(|g| g.map(|p| p.flipped())).collect(),
    };
    let margin = 4 * order.half_width();
    let cap_sin = cfg.polar_cap.sin();
    let chart = imm.ambient.chart;
    let audit = (0..grid.len())
        .map(|i| {
            if nodes[i].is_none() || grid.boundary_distance(i) < margin {
                return false;
            }
            let x = grid.coords(i);
            let (cap_sin, radial) = match &cfg.limits {
                Some(l) => {
                    let inside = l
                        .boxes
                        .iter()
                        .zip(&x)
                        .all(|(b, &v)| b.is_none_or(|(lo, hi)| v >= lo - LIMIT_SLACK && v <= hi + LIMIT_SLACK));
                    if !inside {
                        return false;
                    }
                    (l.sin_cap - LIMIT_SLACK, l.radial - LIMIT_SLACK)
                }
                None => (cap_sin, cfg.polar_cap),
            };
            capped_angles(chart, n).all(|a| x[a].sin().abs() >= cap_sin)
                && (!matches!(chart, FiberChart::Hyperbolic { .. }) || x[0].abs() >= radial)
        })
        .collect();
    let (christoffel, sqrt_det) = metric_calculus(grid, &nodes, order);
    Ok(GeometryGrid { imm: imm.clone(), config: cfg.clone(), nodes, audit, christoffel, sqrt_det })
}

/// Axes holding polar angles that approach a coordinate singularity.
fn capped_angles(chart: FiberChart, n: usize) -> std::ops::Range<usize> {
    match chart {
        FiberChart::Flat => 0..0,
        FiberChart::Sphere { .. } => 0..n.saturating_sub(1),
        FiberChart::Hyperbolic { .. } => 1..n.saturating_sub(1).max(1),
    }
}

fn metric_calculus(
    grid: &Grid,
    nodes: &[Option<PointGeometry>],
    order: StencilOrder,
) -> (Vec<Option<Vec<f64>>>, Vec<f64>) {
    let n = grid.dim();
    let comp = |i: usize, j: usize| -> Vec<f64> {
        nodes.iter().map(|g| g.as_ref().map_or(f64::NAN, |p| p.metric[(i, j)])).collect()
    };
    // dg[c][i][j] = d_c g_ij
    let mut dg = vec![vec![vec![Vec::new(); n]; n]; n];
    for i in 0..n {
        for j in i..n {
            let f = comp(i, j);
            for (c, d) in grid.gradient(&f, order).into_iter().enumerate() {
                dg[c][i][j] = d.clone();
                dg[c][j][i] = d;
            }
        }
    }
    let christoffel = (0..grid.len())
        .map(|p| {
            let g = nodes[p].as_ref()?;
            let mut out = vec![0.0; n * n * n];
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += g.metric_inv[(k, l)] * (dg[i][j][l][p] + dg[j][i][l][p] - dg[l][i][j][p]);
                        }
                        out[(k * n + i) * n + j] = 0.5 * s;
                    }
                }
            }
            if out.iter().all(|v| v.is_finite()) {
                Some(out)
            } else {
                None
            }
        })
        .collect();
    let sqrt_det = nodes.iter().map(|g| g.as_ref().map_or(f64::NAN, |p| p.chol.diagonal().product())).collect();
    (christoffel, sqrt_det)
}

impl GeometryGrid {
    pub fn grid(&self) -> &Grid {
        &self.imm.grid
    }

    pub fn n(&self) -> usize {
        self.grid().dim()
    }

    pub fn order(&self) -> StencilOrder {
        self.config.stencil
    }

    pub fn ambient(&self) -> &WarpedProduct {
        &self.imm.ambient
    }

    /// Audit nodes with their geometry, in index order.
    pub fn audited(&self) -> impl Iterator<Item = (usize, &PointGeometry)> {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(i, _)| self.audit[*i])
            .filter_map(|(i, g)| g.as_ref().map(|g| (i, g)))
    }

    /// Every node with geometry, in index order.
    pub fn valid(&self) -> impl Iterator<Item = (usize, &PointGeometry)> {
        self.nodes.iter().enumerate().filter_map(|(i, g)| g.as_ref().map(|g| (i, g)))
    }

    pub fn field<F: Fn(&PointGeometry) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|g| g.as_ref().map_or(f64::NAN, &f)).collect()
    }

    /// Reverses the normal at every node.
    pub fn flipped(&self) -> Self {
        let mut out = self.clone();
        out.nodes = self.nodes.iter().map(|g| g.as_ref().map(|p| p.flipped())).collect();
        out.config.orientation = self.config.orientation.flipped();
        out
    }

    /// Physical extent of the current audit set.
    pub fn audit_limits(&self) -> AuditLimits {
        let grid = self.grid();
        let chart = self.ambient().chart;
        let n = self.n();
        let mut boxes: Vec<Option<(f64, f64)>> =
            grid.axes.iter().map(|a| (!a.periodic).then_some((f64::INFINITY, f64::NEG_INFINITY))).collect();
        let mut sin_cap = 1.0f64;
        let mut radial = f64::INFINITY;
        for (i, _) in self.audited() {
            let x = grid.coords(i);
            for (b, &v) in boxes.iter_mut().zip(&x) {
                if let Some((lo, hi)) = b {
                    *lo = lo.min(v);
                    *hi = hi.max(v);
                }
            }
            for a in capped_angles(chart, n) {
                sin_cap = sin_cap.min(x[a].sin().abs());
            }
            if matches!(chart, FiberChart::Hyperbolic { .. }) {
                radial = radial.min(x[0].abs());
            }
        }
        if !radial.is_finite() {
            radial = 0.0;
        }
        AuditLimits { boxes, sin_cap, radial }
    }

    pub fn christoffel(&self, i: usize) -> Option<&[f64]> {
        self.christoffel[i].as_deref()
    }

    /// Frame gradient of a scalar field by differencing.
    pub fn gradient_frame(&self, f: &[f64]) -> Vec<Option<DVector<f64>>> {
        let n = self.n();
        let d = self.grid().gradient(f, self.order());
        (0..self.grid().len())
            .map(|i| {
                let g = self.nodes[i].as_ref()?;
                let w = DVector::from_fn(n, |a, _| d[a][i]);
                w.iter().all(|v| v.is_finite()).then(|| g.covector_to_frame(&w))
            })
            .collect()
    }

    /// Covariant Hessian `d_i d_j f - gamma^k_ij d_k f` in frame components.
    pub fn hessian_frame(&self, f: &[f64]) -> Vec<Option<DMatrix<f64>>> {
        let n = self.n();
        let order = self.order();
        let d1 = self.grid().gradient(f, order);
        let d2 = self.grid().hessian(f, order);
        (0..self.grid().len())
            .map(|p| {
                let g = self.nodes[p].as_ref()?;
                let gam = self.christoffel[p].as_ref()?;
                let h = DMatrix::from_fn(n, n, |i, j| {
                    let mut v = d2[i][j][p];
                    for k in 0..n {
                        v -= gam[(k * n + i) * n + j] * d1[k][p];
                    }
                    v
                });
                h.iter().all(|v| v.is_finite()).then(|| g.form_to_frame(&h))
            })
            .collect()
    }

    /// Divergence `(1/sqrt g) d_i (sqrt g V^i)` of a coordinate vector field.
    pub fn divergence(&self, v: &[Vec<f64>]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; self.grid().len()];
        for (a, comp) in v.iter().enumerate().take(n) {
            let flux: Vec<f64> = comp.iter().zip(&self.sqrt_det).map(|(x, s)| x * s).collect();
            let d = self.grid().d1(&flux, a, self.order());
            for (o, di) in out.iter_mut().zip(d) {
                *o += di;
            }
        }
        out.iter().zip(&self.sqrt_det).map(|(d, s)| d / s).collect()
    }

    /// Laplace-Beltrami operator in divergence form.
    pub fn laplace_beltrami(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n();
        let d = self.grid().gradient(f, self.order());
        let v: Vec<Vec<f64>> = (0..n)
            .map(|a| {
                (0..self.grid().len())
                    .map(|p| match &self.nodes[p] {
                        Some(g) => (0..n).map(|b| g.metric_inv[(a, b)] * d[b][p]).sum(),
                        None => f64::NAN,
                    })
                    .collect()
            })
            .collect();
        self.divergence(&v)
    }

    /// Divergence `nabla_i T^i_j` of a field of endomorphisms given in frame
    /// components, returned as frame covectors.
    pub fn divergence_endo(&self, t: &[Option<DMatrix<f64>>]) -> Vec<Option<DVector<f64>>> {
        let n = self.n();
        let len = self.grid().len();
        let coord: Vec<Option<DMatrix<f64>>> =
            (0..len).map(|p| Some(self.nodes[p].as_ref()?.endo_to_coord(t[p].as_ref()?))).collect();
        let comp = |i: usize, j: usize| -> Vec<f64> {
            coord.iter().map(|m| m.as_ref().map_or(f64::NAN, |m| m[(i, j)])).collect()
        };
        // d[i][j] = d_i T^i_j
        let mut di = vec![vec![0.0; len]; n];
        for i in 0..n {
            for (j, row) in di.iter_mut().enumerate() {
                let d = self.grid().d1(&comp(i, j), i, self.order());
                for (r, v) in row.iter_mut().zip(d) {
                    *r += v;
                }
            }
        }
        (0..len)
            .map(|p| {
                let g = self.nodes[p].as_ref()?;
                let m = coord[p].as_ref()?;
                let gam = self.christoffel[p].as_ref()?;
                let w = DVector::from_fn(n, |j, _| {
                    let mut v = di[j][p];
                    for i in 0..n {
                        for l in 0..n {
                            v += gam[(i * n + i) * n + l] * m[(l, j)];
                            v -= gam[(l * n + i) * n + j] * m[(i, l)];
                        }
                    }
                    v
                });
                w.iter().all(|v| v.is_finite()).then(|| g.covector_to_frame(&w))
            })
            .collect()
    }

    /// Divergence of the vector field `T grad f` for a frame endomorphism
    /// field `T`, computed in flux form.
    pub fn divergence_of_endo_gradient(&self, t: &[Option<DMatrix<f64>>], f: &[f64]) -> Vec<f64> {
        let n = self.n();
        let len = self.grid().len();
        let d = self.grid().gradient(f, self.order());
        let vecs: Vec<Option<DVector<f64>>> = (0..len)
            .map(|p| {
                let g = self.nodes[p].as_ref()?;
                let w = DVector::from_fn(n, |a, _| d[a][p]);
                let grad = g.covector_to_frame(&w);
                Some(g.frame_to_vector(&(t[p].as_ref()? * grad)))
            })
            .collect();
        let v: Vec<Vec<f64>> =
            (0..n).map(|a| vecs.iter().map(|x| x.as_ref().map_or(f64::NAN, |x| x[a])).collect()).collect();
        self.divergence(&v)
    }
}

/// Evaluates `residuals` on `levels` dyadic refinements of `imm` and fits
/// slopes per residual name.
pub fn refinement_study<F>(
    imm: &GraphImmersion,
    cfg: &DiscretizationConfig,
    levels: usize,
    residuals: F,
) -> Result<Vec<crate::residual::ConvergenceRecord>>
where
    F: Fn(&GeometryGrid) -> Result<Vec<crate::residual::NodeResidual>>,
{
    let mut per_level = Vec::new();
    let mut resolutions = Vec::new();
    let mut fine_cfg = cfg.clone();
    for l in 0..levels {
        let im = if l == 0 { imm.clone() } else { imm.refined(1 << l)? };
        resolutions.push(im.resolution());
        let geo = evaluate_geometry(&im, &fine_cfg)?;
        if l == 0 && cfg.limits.is_none() {
            fine_cfg = cfg.with_limits(geo.audit_limits());
        }
        per_level.push(residuals(&geo)?);
    }
    let names = per_level.first().map(|v| v.len()).unwrap_or(0);
    Ok((0..names)
        .map(|j| {
            let first = &per_level[0][j];
            crate::residual::ConvergenceRecord::new(
                &first.name,
                first.k,
                resolutions.clone(),
                per_level.iter().map(|lv| lv[j].max).collect(),
                cfg.stencil.order(),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::WarpingProfile;

    #[test]
    fn slice_is_umbilic_on_every_chart() {
        for chart in [FiberChart::Flat, FiberChart::Sphere { scale: 1.0 }, FiberChart::Hyperbolic { scale: 1.0 }] {
            let w = WarpedProduct::new(WarpingProfile::cosh(), chart, 2);
            let imm =
                GraphImmersion::sample(&w, Domain::default_for(chart), 16, &GraphFamily::Slice { t0: 0.8 }).unwrap();
            let geo = evaluate_geometry(&imm, &DiscretizationConfig::default()).unwrap();
            let hc = 0.8f64.tanh();
            let mut count = 0;
            for (_, g) in geo.audited() {
                count += 1;
                assert!((g.theta + 1.0).abs() < 1e-15);
                for k in &g.newton.kappa {
                    assert!((k - hc).abs() < 1e-12, "{chart:?} {k}");
                }
            }
            assert!(count > 0);
        }
    }

    #[test]
    fn offset_sphere_is_umbilic() {
        let w = WarpedProduct::new(WarpingProfile::linear(), FiberChart::Sphere { scale: 1.0 }, 2);
        let fam = GraphFamily::OffsetSphere { radius: 2.0, center: vec![0.3, 0.2, -0.4] };
        let mut errs = Vec::new();
        for res in [32, 64] {
            let imm = GraphImmersion::sample(&w, Domain::SphereAngles, res, &fam).unwrap();
            let geo = evaluate_geometry(&imm, &DiscretizationConfig::default()).unwrap();
            let e = geo.audited().flat_map(|(_, g)| g.newton.kappa.clone()).fold(0.0f64, |m, k| m.max((k - 0.5).abs()));
            errs.push(e);
        }
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
        assert!(errs[1] < 1e-2);
    }

    #[test]
    fn laplacian_paths_converge_together() {
        let w = WarpedProduct::new(WarpingProfile::exponential(), FiberChart::Flat, 2);
        let fam = GraphFamily::random(FiberChart::Flat, 2, 0.0, 0.3, 2, 1);
        let mut errs = Vec::new();
        for res in [32, 64, 128] {
            let imm = GraphImmersion::sample(&w, Domain::default_for(FiberChart::Flat), res, &fam).unwrap();
            let geo = evaluate_geometry(&imm, &DiscretizationConfig::default()).unwrap();
            let f = imm.grid.sample(|x| (x[0] + 2.0 * x[1]).sin());
            let a = geo.laplace_beltrami(&f);
            let b = geo.hessian_frame(&f);
            errs.push(geo.audited().fold(0.0f64, |m, (i, _)| m.max((a[i] - b[i].as_ref().unwrap().trace()).abs())));
        }
        let s1 = (errs[0] / errs[1]).log2();
        let s2 = (errs[1] / errs[2]).log2();
        assert!(s1 > 1.9 && s2 > 1.9, "{errs:?}");
    }
}
