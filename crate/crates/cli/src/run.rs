//! Operation dispatch.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;
use warpcurv::comparison::{
    barrier_identity, check_cond_g, hessian_comparison_check, omori_yau_probe, solve_comparison, GrowthFunction,
    ProbeOptions, RadialFunction, RadialModel,
};
use warpcurv::hypersurface::{evaluate_geometry, DiscretizationConfig, GeometryGrid};
use warpcurv::scenarios::{
    curvature_estimate_scenario, elliptic_point_and_signs, theorem_audit, ScenarioReport, TheoremId, Verdict,
};
use warpcurv::suite::{algebraic_suite, curvature_suite, identity_suite_study, slice_suite, SLICE_TOL};

use crate::config::{parse_base, probe_operator, Category, Operation, ScenarioConfig};
use crate::report::Table;
use crate::{CliError, DEFAULT_OUT, EXIT_OK, EXIT_VIOLATION, OUT_ENV};

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Refinement levels for `identities`.
    pub refine: Option<usize>,
    /// Tolerance for analytic identities and slice exactness.
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    /// Every theorem audit in the operation had a failing hypothesis.
    NotApplicable,
    Violation,
}

#[derive(Debug, Clone)]
pub struct OpResult {
    pub index: usize,
    pub op: &'static str,
    pub status: Status,
    pub report: Value,
    pub table: Option<Table>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OpSummary {
    pub index: usize,
    pub op: String,
    pub status: Status,
    pub report: String,
    pub table: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub operations: Vec<OpSummary>,
    pub violations: usize,
    pub not_applicable_only: bool,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub results: Vec<OpResult>,
    pub summary: Summary,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.summary.exit_code
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Schema(format!("report serialization: {e}")))
}

fn out_dir(cfg: &ScenarioConfig, ov: &Overrides) -> PathBuf {
    ov.out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn scenario_status(reports: &[ScenarioReport]) -> Status {
    if reports.iter().any(|r| r.invariant_violation()) {
        Status::Violation
    } else if !reports.is_empty() && reports.iter().all(|r| r.verdict == Verdict::HypothesisViolated) {
        Status::NotApplicable
    } else {
        Status::Pass
    }
}

fn pass(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Violation
    }
}

/// Applies `ov`, validates and runs the operations of `cat`. Reports are
/// built in memory; [`crate::report::write_outcome`] puts them on disk.
pub fn run(mut cfg: ScenarioConfig, cat: Category, ov: &Overrides) -> Result<RunOutcome, CliError> {
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    let mut ops = cfg.operations_for(cat)?;
    for op in ops.iter_mut() {
        if let Operation::Identities { levels, tol, .. } = op {
            if let Some(r) = ov.refine {
                *levels = r;
            }
            if ov.tol.is_some() {
                *tol = ov.tol;
            }
        }
        if let Operation::SliceSuite { tol, .. } = op {
            if ov.tol.is_some() {
                *tol = ov.tol;
            }
        }
    }
    cfg.validate(&ops)?;
    cfg.operations = ops.clone();

    let geo: Option<GeometryGrid> = if ops.iter().any(Operation::needs_immersion) {
        Some(evaluate_geometry(&cfg.immersion()?, &DiscretizationConfig::default())?)
    } else {
        None
    };
    let geo = || geo.as_ref().expect("geometry evaluated for immersion operations");

    let mut results = Vec::with_capacity(ops.len());
    for (index, op) in ops.iter().enumerate() {
        let (status, report, table) = match op {
            Operation::Identities { levels, tol, min_slope } => {
                let r = identity_suite_study(
                    &cfg.immersion()?,
                    &DiscretizationConfig::default(),
                    *levels,
                    tol.unwrap_or(SLICE_TOL),
                    *min_slope,
                )?;
                (pass(r.pass), to_value(&r)?, Some(Table::identities(&r)))
            }
            Operation::SliceSuite { t0, resolution, tol } => {
                let w = cfg.ambient()?;
                let t0 = t0.or(cfg.slice_t0()).unwrap_or(w.profile.t0);
                let r = slice_suite(&w, t0, *resolution, tol.unwrap_or(SLICE_TOL))?;
                (pass(r.pass), to_value(&r)?, Some(Table::slice(&r)))
            }
            Operation::Algebraic { samples, max_n } => {
                let r = algebraic_suite(*samples, *max_n, cfg.seed)?;
                (pass(r.pass), to_value(&r)?, None)
            }
            Operation::Curvature { pairs } => {
                let r = curvature_suite(&cfg.ambient()?, *pairs, cfg.seed)?;
                (pass(r.pass), to_value(&r)?, None)
            }
            Operation::Signs => {
                let r = elliptic_point_and_signs(geo())?;
                let ok = r.sign_lemma.as_ref().is_none_or(|c| c.pass);
                (pass(ok), to_value(&r)?, None)
            }
            Operation::Theorem { theorem, k } => {
                let id: TheoremId = theorem.parse()?;
                let k = k.unwrap_or_else(|| id.orders(geo().n()).0);
                let r = theorem_audit(geo(), id, k)?;
                let reports = vec![r];
                (scenario_status(&reports), to_value(&reports[0])?, Some(Table::scenarios(&reports)))
            }
            Operation::Estimate { k } => {
                let reports =
                    k.iter().map(|&k| curvature_estimate_scenario(geo(), k)).collect::<Result<Vec<_>, _>>()?;
                (scenario_status(&reports), to_value(&reports)?, Some(Table::scenarios(&reports)))
            }
            Operation::Probe { model, m, r_max, field, growth, jmax, nodes, base, trace } => {
                let opts = ProbeOptions {
                    jmax: *jmax,
                    nodes: *nodes,
                    base: parse_base(base)?,
                    operator: probe_operator(*trace)?,
                    ..ProbeOptions::default()
                };
                let r = omori_yau_probe(
                    &RadialModel::by_name(model, *m, *r_max)?,
                    &RadialFunction::by_name(field)?,
                    &GrowthFunction::by_name(growth)?,
                    &opts,
                )?;
                (pass(r.claims_hold()), to_value(&r)?, Some(Table::probe(&r)))
            }
            Operation::Comparison { growth, t_max, samples } => {
                let r = solve_comparison(&GrowthFunction::by_name(growth)?, *t_max, *samples)?;
                (pass(r.sturm_holds), to_value(&r)?, Some(Table::comparison(&r)))
            }
            Operation::Barrier { growth, t_max, samples } => {
                let r = barrier_identity(&GrowthFunction::by_name(growth)?, *t_max, *samples)?;
                (pass(r.pass()), to_value(&r)?, Some(Table::barrier(&r)))
            }
            Operation::CondG { growth, t_max, samples } => {
                let r = check_cond_g(&GrowthFunction::by_name(growth)?, *t_max, *samples)?;
                (Status::Pass, to_value(&r)?, Some(Table::cond_g(&r)))
            }
            Operation::HessianComparison { model, m, r_max, growth, samples } => {
                let r = hessian_comparison_check(
                    &RadialModel::by_name(model, *m, *r_max)?,
                    &GrowthFunction::by_name(growth)?,
                    *samples,
                )?;
                (pass(r.shape_holds != Some(false)), to_value(&r)?, None)
            }
        };
        results.push(OpResult { index, op: op.name(), status, report, table });
    }

    let operations: Vec<OpSummary> = results
        .iter()
        .map(|r| OpSummary {
            index: r.index,
            op: r.op.to_string(),
            status: r.status,
            report: crate::report::report_name(r),
            table: r.table.as_ref().map(|_| crate::report::table_name(r)),
        })
        .collect();
    let violations = results.iter().filter(|r| r.status == Status::Violation).count();
    let not_applicable_only = !results.is_empty() && results.iter().all(|r| r.status == Status::NotApplicable);
    let summary = Summary {
        command: cat.as_str().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        operations,
        violations,
        not_applicable_only,
        exit_code: if violations > 0 { EXIT_VIOLATION } else { EXIT_OK },
    };
    Ok(RunOutcome { out_dir: out_dir(&cfg, ov), results, summary })
}
