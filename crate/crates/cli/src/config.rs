//! Scenario configuration files.
//!
//! A config is TOML with three top-level tables and an operation list:
//!
//! ```toml
//! seed = 7
//!
//! [ambient]
//! profile = "exp"          # registry name: constant, cosh, exp, linear, sine
//! chart = "sphere"         # flat | sphere | hyperbolic
//! scale = 1.0
//! n = 2
//!
//! [immersion]
//! family = "random"        # slice | random | bump | saddle | tilted | offset-sphere
//! t0 = 0.6
//! amplitude = 0.2
//! modes = 1
//! resolution = 32
//!
//! [[operations]]
//! op = "identities"
//! levels = 3
//!
//! [output]
//! dir = "reports"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use warpcurv::ambient::{ProfileParams, ProfileRegistry, WarpedProduct};
use warpcurv::comparison::{BasePoint, GrowthFunction, ProbeOperator, RadialFunction, RadialModel};
use warpcurv::fiber::FiberChart;
use warpcurv::hypersurface::{Domain, GraphFamily, GraphImmersion};
use warpcurv::scenarios::TheoremId;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub ambient: Option<AmbientSpec>,
    pub immersion: Option<ImmersionSpec>,
    #[serde(default)]
    pub operations: Vec<Operation>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    pub profile: String,
    pub epsilon: Option<f64>,
    pub value: Option<f64>,
    pub interval: Option<[f64; 2]>,
    #[serde(default = "default_chart")]
    pub chart: String,
    pub scale: Option<f64>,
    /// Fiber curvature; an alternative to `chart` plus `scale`.
    pub kappa: Option<f64>,
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_chart() -> String {
    "flat".into()
}

fn default_n() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionSpec {
    pub family: String,
    pub t0: Option<f64>,
    pub amplitude: Option<f64>,
    pub modes: Option<usize>,
    pub width: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub a: Option<f64>,
    pub radius: Option<f64>,
    /// Overrides the top-level seed for `random` graphs.
    pub seed: Option<u64>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    pub domain: Option<DomainSpec>,
}

fn default_resolution() -> usize {
    32
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Default,
    Torus { period: f64 },
    Patch { lo: f64, hi: f64 },
    Disk { radius: f64 },
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

/// One entry of `[[operations]]`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Operation {
    /// Full identity suite with dyadic refinement.
    Identities {
        #[serde(default = "default_levels")]
        levels: usize,
        tol: Option<f64>,
        #[serde(default = "default_min_slope")]
        min_slope: f64,
    },
    /// Slice exactness at `t0` (default: the immersion's `t0`).
    SliceSuite {
        t0: Option<f64>,
        #[serde(default = "default_slice_resolution")]
        resolution: usize,
        tol: Option<f64>,
    },
    Algebraic {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_max_n")]
        max_n: usize,
    },
    Curvature {
        #[serde(default = "default_pairs")]
        pairs: usize,
    },
    Signs,
    Theorem {
        theorem: String,
        k: Option<usize>,
    },
    Estimate {
        k: Vec<usize>,
    },
    Probe {
        #[serde(default = "default_model")]
        model: String,
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default = "default_r_max")]
        r_max: f64,
        #[serde(default = "default_field")]
        field: String,
        #[serde(default = "default_growth")]
        growth: String,
        #[serde(default = "default_jmax")]
        jmax: usize,
        #[serde(default = "default_nodes")]
        nodes: usize,
        #[serde(default = "default_base")]
        base: String,
        /// `[mu_r, mu_t]` for a trace operator instead of the Laplacian.
        trace: Option<[f64; 2]>,
    },
    Comparison {
        #[serde(default = "default_growth")]
        growth: String,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_ode_samples")]
        samples: usize,
    },
    Barrier {
        #[serde(default = "default_growth")]
        growth: String,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_ode_samples")]
        samples: usize,
    },
    CondG {
        #[serde(default = "default_growth")]
        growth: String,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_ode_samples")]
        samples: usize,
    },
    HessianComparison {
        #[serde(default = "default_model")]
        model: String,
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default = "default_r_max")]
        r_max: f64,
        #[serde(default = "default_growth")]
        growth: String,
        #[serde(default = "default_ode_samples")]
        samples: usize,
    },
}

fn default_levels() -> usize {
    3
}
fn default_min_slope() -> f64 {
    warpcurv::suite::MIN_SLOPE
}
fn default_slice_resolution() -> usize {
    12
}
fn default_samples() -> usize {
    1000
}
fn default_max_n() -> usize {
    6
}
fn default_pairs() -> usize {
    100
}
fn default_model() -> String {
    "hyperbolic".into()
}
fn default_m() -> usize {
    2
}
fn default_r_max() -> f64 {
    8.0
}
fn default_field() -> String {
    "tanh".into()
}
fn default_growth() -> String {
    "unit".into()
}
fn default_jmax() -> usize {
    20
}
fn default_nodes() -> usize {
    4000
}
fn default_base() -> String {
    "max-u".into()
}
fn default_t_max() -> f64 {
    10.0
}
fn default_ode_samples() -> usize {
    1000
}

/// Which subcommand an operation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Verify,
    Scenario,
    Probe,
    Comparison,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Verify => "verify",
            Category::Scenario => "scenario",
            Category::Probe => "probe",
            Category::Comparison => "comparison",
        }
    }
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Identities { .. } => "identities",
            Operation::SliceSuite { .. } => "slice-suite",
            Operation::Algebraic { .. } => "algebraic",
            Operation::Curvature { .. } => "curvature",
            Operation::Signs => "signs",
            Operation::Theorem { .. } => "theorem",
            Operation::Estimate { .. } => "estimate",
            Operation::Probe { .. } => "probe",
            Operation::Comparison { .. } => "comparison",
            Operation::Barrier { .. } => "barrier",
            Operation::CondG { .. } => "cond-g",
            Operation::HessianComparison { .. } => "hessian-comparison",
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Operation::Identities { .. }
            | Operation::SliceSuite { .. }
            | Operation::Algebraic { .. }
            | Operation::Curvature { .. }
            | Operation::Signs => Category::Verify,
            Operation::Theorem { .. } | Operation::Estimate { .. } => Category::Scenario,
            Operation::Probe { .. } => Category::Probe,
            Operation::Comparison { .. }
            | Operation::Barrier { .. }
            | Operation::CondG { .. }
            | Operation::HessianComparison { .. } => Category::Comparison,
        }
    }

    /// Needs a sampled graph.
    pub fn needs_immersion(&self) -> bool {
        matches!(
            self,
            Operation::Identities { .. } | Operation::Signs | Operation::Theorem { .. } | Operation::Estimate { .. }
        )
    }

    /// Needs an ambient warped product.
    pub fn needs_ambient(&self) -> bool {
        self.needs_immersion() || matches!(self, Operation::SliceSuite { .. } | Operation::Curvature { .. })
    }

    /// Operations run when a subcommand gets no operation of its category.
    pub fn defaults(cat: Category) -> Vec<Operation> {
        match cat {
            Category::Verify => vec![
                Operation::Algebraic { samples: default_samples(), max_n: default_max_n() },
                Operation::SliceSuite { t0: None, resolution: default_slice_resolution(), tol: None },
                Operation::Identities { levels: default_levels(), tol: None, min_slope: default_min_slope() },
            ],
            Category::Scenario => vec![Operation::Estimate { k: vec![1] }],
            Category::Probe => vec![Operation::Probe {
                model: default_model(),
                m: default_m(),
                r_max: default_r_max(),
                field: default_field(),
                growth: default_growth(),
                jmax: default_jmax(),
                nodes: default_nodes(),
                base: default_base(),
                trace: None,
            }],
            Category::Comparison => ["unit", "one-plus-square"]
                .into_iter()
                .flat_map(|g| {
                    [
                        Operation::Comparison {
                            growth: g.into(),
                            t_max: default_t_max(),
                            samples: default_ode_samples(),
                        },
                        Operation::Barrier { growth: g.into(), t_max: default_t_max(), samples: default_ode_samples() },
                    ]
                })
                .collect(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::MissingFile { path: path.to_path_buf(), reason: e.to_string() })?;
        Self::from_toml(&text)
    }

    /// Config of a subcommand run without `--config`.
    pub fn defaults_for(cat: Category) -> Self {
        let (ambient, immersion) = match cat {
            Category::Verify | Category::Scenario => (
                Some(AmbientSpec {
                    profile: "exp".into(),
                    epsilon: None,
                    value: None,
                    interval: None,
                    chart: "flat".into(),
                    scale: None,
                    kappa: None,
                    n: 2,
                }),
                Some(ImmersionSpec {
                    family: "random".into(),
                    t0: Some(0.0),
                    amplitude: Some(0.2),
                    modes: Some(1),
                    width: None,
                    center: None,
                    a: None,
                    radius: None,
                    seed: None,
                    resolution: 32,
                    domain: None,
                }),
            ),
            _ => (None, None),
        };
        Self { seed: 0, ambient, immersion, operations: Operation::defaults(cat), output: OutputSpec::default() }
    }

    /// Operations of `cat`. Any operation of another category is a config
    /// error; none at all selects the defaults.
    pub fn operations_for(&self, cat: Category) -> Result<Vec<Operation>, CliError> {
        if let Some(op) = self.operations.iter().find(|o| o.category() != cat) {
            return Err(CliError::Schema(format!(
                "operation '{}' belongs to the '{}' subcommand, not '{}'",
                op.name(),
                op.category().as_str(),
                cat.as_str()
            )));
        }
        Ok(if self.operations.is_empty() { Operation::defaults(cat) } else { self.operations.clone() })
    }

    /// Checks every registry name and builds nothing heavy.
    pub fn validate(&self, ops: &[Operation]) -> Result<(), CliError> {
        if ops.iter().any(Operation::needs_ambient) {
            self.ambient()?;
        }
        if ops.iter().any(Operation::needs_immersion) {
            self.family()?;
        }
        for op in ops {
            match op {
                Operation::Theorem { theorem, .. } => {
                    theorem.parse::<TheoremId>()?;
                }
                Operation::Probe { model, m, r_max, field, growth, base, trace, .. } => {
                    RadialModel::by_name(model, *m, *r_max)?;
                    RadialFunction::by_name(field)?;
                    GrowthFunction::by_name(growth)?;
                    parse_base(base)?;
                    probe_operator(*trace)?;
                }
                Operation::Comparison { growth, .. }
                | Operation::Barrier { growth, .. }
                | Operation::CondG { growth, .. } => {
                    GrowthFunction::by_name(growth)?;
                }
                Operation::HessianComparison { model, m, r_max, growth, .. } => {
                    RadialModel::by_name(model, *m, *r_max)?;
                    GrowthFunction::by_name(growth)?;
                }
                Operation::Identities { levels, .. } if *levels == 0 || *levels == 2 => {
                    return Err(CliError::Schema(format!(
                        "identities needs levels = 1 (base grid only) or levels >= 3 (slope fit), got {levels}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn chart(&self) -> Result<FiberChart, CliError> {
        let a = self.ambient_spec()?;
        let chart = match (a.chart.as_str(), a.kappa) {
            (_, Some(k)) if a.scale.is_some() => {
                return Err(CliError::Schema(format!("ambient sets both kappa = {k} and scale")));
            }
            ("flat", Some(k)) | ("sphere", Some(k)) | ("hyperbolic", Some(k)) => {
                let c = if k > 0.0 {
                    FiberChart::Sphere { scale: 1.0 / k.sqrt() }
                } else if k < 0.0 {
                    FiberChart::Hyperbolic { scale: 1.0 / (-k).sqrt() }
                } else {
                    FiberChart::Flat
                };
                if a.chart != "flat" && c.name() != a.chart {
                    return Err(CliError::Schema(format!("kappa = {k} contradicts chart '{}'", a.chart)));
                }
                c
            }
            ("flat", None) => FiberChart::Flat,
            ("sphere", None) => FiberChart::Sphere { scale: a.scale.unwrap_or(1.0) },
            ("hyperbolic", None) => FiberChart::Hyperbolic { scale: a.scale.unwrap_or(1.0) },
            (other, _) => {
                return Err(CliError::Schema(format!(
                    "unknown fiber chart '{other}'; known charts: flat, sphere, hyperbolic"
                )))
            }
        };
        Ok(chart)
    }

    fn ambient_spec(&self) -> Result<&AmbientSpec, CliError> {
        self.ambient.as_ref().ok_or_else(|| CliError::Schema("this operation needs an [ambient] table".into()))
    }

    fn immersion_spec(&self) -> Result<&ImmersionSpec, CliError> {
        self.immersion.as_ref().ok_or_else(|| CliError::Schema("this operation needs an [immersion] table".into()))
    }

    pub fn ambient(&self) -> Result<WarpedProduct, CliError> {
        let a = self.ambient_spec()?;
        if a.n == 0 {
            return Err(CliError::Schema("ambient fiber dimension n must be at least 1".into()));
        }
        let params =
            ProfileParams { epsilon: a.epsilon, value: a.value, interval: a.interval.map(|[lo, hi]| (lo, hi)) };
        let profile = ProfileRegistry::builtin().build(&a.profile, &params)?;
        Ok(WarpedProduct::new(profile, self.chart()?, a.n))
    }

    pub fn family(&self) -> Result<GraphFamily, CliError> {
        let s = self.immersion_spec()?;
        let chart = self.chart()?;
        let n = self.ambient_spec()?.n;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| CliError::Schema(format!("family '{}' needs '{key}'", s.family)))
        };
        let t0 = s.t0.unwrap_or(0.0);
        let fam = match s.family.as_str() {
            "slice" => GraphFamily::Slice { t0 },
            "random" => GraphFamily::random(
                chart,
                n,
                t0,
                s.amplitude.unwrap_or(0.2),
                s.modes.unwrap_or(1),
                s.seed.unwrap_or(self.seed),
            ),
            "bump" => GraphFamily::Bump {
                t0,
                amplitude: need(s.amplitude, "amplitude")?,
                width: s.width.unwrap_or(0.8),
                center: s.center.clone().unwrap_or_else(|| vec![0.0; n]),
            },
            "saddle" => GraphFamily::Saddle { t0, a: need(s.a, "a")? },
            "tilted" => GraphFamily::Tilted { t0, a: need(s.a, "a")? },
            "offset-sphere" => GraphFamily::OffsetSphere {
                radius: need(s.radius, "radius")?,
                center: s.center.clone().unwrap_or_else(|| vec![0.0; n + 1]),
            },
            other => {
                return Err(CliError::Schema(format!(
                    "unknown graph family '{other}'; known families: slice, random, bump, saddle, tilted, offset-sphere"
                )))
            }
        };
        fam.validate(chart, n)?;
        Ok(fam)
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        let chart = self.chart()?;
        let s = self.immersion_spec()?;
        let d = match (&s.domain, chart) {
            (None | Some(DomainSpec::Default), c) => Domain::default_for(c),
            (Some(DomainSpec::Torus { period }), FiberChart::Flat) => Domain::FlatTorus { period: *period },
            (Some(DomainSpec::Patch { lo, hi }), FiberChart::Flat) => Domain::FlatPatch { lo: *lo, hi: *hi },
            (Some(DomainSpec::Disk { radius }), FiberChart::Hyperbolic { .. }) => {
                Domain::HyperbolicDisk { radius: *radius }
            }
            (Some(d), c) => {
                return Err(CliError::Schema(format!("domain {d:?} does not fit the {} chart", c.name())));
            }
        };
        Ok(d)
    }

    pub fn immersion(&self) -> Result<GraphImmersion, CliError> {
        let w = self.ambient()?;
        let s = self.immersion_spec()?;
        Ok(GraphImmersion::sample(&w, self.domain()?, s.resolution, &self.family()?)?)
    }

    pub fn slice_t0(&self) -> Option<f64> {
        self.immersion.as_ref().and_then(|s| s.t0)
    }
}

pub fn parse_base(s: &str) -> Result<BasePoint, CliError> {
    match s {
        "origin" => Ok(BasePoint::Origin),
        "max-u" => Ok(BasePoint::MaxU),
        other => {
            other.strip_prefix("radius:").and_then(|r| r.trim().parse().ok()).map(BasePoint::Radius).ok_or_else(|| {
                CliError::Schema(format!("unknown base point '{other}'; use origin, max-u or radius:<r>"))
            })
        }
    }
}

pub fn probe_operator(trace: Option<[f64; 2]>) -> Result<ProbeOperator, CliError> {
    Ok(match trace {
        None => ProbeOperator::Laplacian,
        Some([mu_r, mu_t]) => ProbeOperator::Trace { mu_r, mu_t },
    })
}
