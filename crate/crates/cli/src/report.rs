//! Report files.
//!
//! A run writes, into its output directory:
//!
//! - `NN-<op>.json`: the operation's report, pretty-printed JSON;
//! - `NN-<op>.csv`: plot data for operations that have a table;
//! - `summary.json`: command, seed, the resolved config, per-operation
//!   status and file names, and the exit code.
//!
//! `NN` is the zero-padded position in the operation list. Floats are
//! written in shortest round-trip form, so reruns are byte-identical.

use std::fs;
use std::path::Path;

use warpcurv::comparison::{BarrierReport, ComparisonSolution, CondGReport, OmoriYauProbe};
use warpcurv::scenarios::ScenarioReport;
use warpcurv::suite::{IdentitySuiteReport, SliceSuiteReport};

use crate::run::{OpResult, RunOutcome};
use crate::CliError;

/// Delimited plot data.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

fn num(x: f64) -> String {
    serde_json::Number::from_f64(x).map(|n| n.to_string()).unwrap_or_default()
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl Table {
    /// One row per `(identity, k, resolution)`.
    pub fn identities(r: &IdentitySuiteReport) -> Self {
        let mut rows = Vec::new();
        for (res, v) in r.residuals.iter().zip(&r.verdicts) {
            let levels: Vec<(usize, f64)> = match &res.convergence {
                Some(c) => c.resolutions.iter().copied().zip(c.residuals.iter().copied()).collect(),
                None => vec![(r.resolutions[0], res.max())],
            };
            for (n, x) in levels {
                rows.push(vec![
                    res.id.clone(),
                    opt(res.k),
                    n.to_string(),
                    num(x),
                    v.slope.map(num).unwrap_or_default(),
                    v.pass.to_string(),
                ]);
            }
        }
        Self { header: vec!["identity", "k", "resolution", "max_residual", "slope", "pass"], rows }
    }

    pub fn slice(r: &SliceSuiteReport) -> Self {
        let mut rows = vec![
            vec!["hk-error".to_string(), String::new(), num(r.hk_error)],
            vec!["theta-error".to_string(), String::new(), num(r.theta_error)],
        ];
        rows.extend(r.quantities.iter().map(|q| vec![q.id.clone(), opt(q.k), num(q.max())]));
        Self { header: vec!["quantity", "k", "max"], rows }
    }

    /// Hypothesis, conclusion and proof-line margins with the verdict.
    pub fn scenarios(reports: &[ScenarioReport]) -> Self {
        let mut rows = Vec::new();
        for r in reports {
            for (section, checks) in
                [("hypothesis", &r.hypotheses), ("conclusion", &r.conclusions), ("proof-line", &r.proof_lines)]
            {
                for c in checks {
                    rows.push(vec![
                        r.id.clone(),
                        section.to_string(),
                        c.name.clone(),
                        c.pass.to_string(),
                        num(c.margin),
                        r.verdict.to_string(),
                    ]);
                }
            }
        }
        Self { header: vec!["scenario", "section", "check", "pass", "margin", "verdict"], rows }
    }

    pub fn probe(r: &OmoriYauProbe) -> Self {
        let rows = r
            .records
            .iter()
            .map(|x| vec![x.j.to_string(), num(x.r), num(x.gap), num(x.gradient), num(x.lu), num(x.bound)])
            .collect();
        Self { header: vec!["j", "r", "gap", "gradient", "lu", "bound"], rows }
    }

    pub fn comparison(r: &ComparisonSolution) -> Self {
        let rows = (0..r.t.len())
            .map(|i| vec![num(r.t[i]), num(r.phi[i]), num(r.dphi[i]), num(r.psi[i]), num(r.dpsi[i])])
            .collect();
        Self { header: vec!["t", "phi", "dphi", "psi", "dpsi"], rows }
    }

    pub fn barrier(r: &BarrierReport) -> Self {
        let rows = r.t.iter().zip(&r.log_varphi).map(|(&t, &l)| vec![num(t), num(l)]).collect();
        Self { header: vec!["t", "log_varphi"], rows }
    }

    pub fn cond_g(r: &CondGReport) -> Self {
        let rows = r
            .checks
            .iter()
            .map(|c| vec![c.id.clone(), c.pass.to_string(), num(c.value), c.heuristic.to_string()])
            .collect();
        Self { header: vec!["check", "pass", "value", "heuristic"], rows }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let err = |e: &dyn std::fmt::Display| CliError::Output { path: path.to_path_buf(), reason: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
        w.write_record(&self.header).map_err(|e| err(&e))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| err(&e))?;
        }
        w.flush().map_err(|e| err(&e))
    }
}

pub fn report_name(r: &OpResult) -> String {
    format!("{:02}-{}.json", r.index, r.op)
}

pub fn table_name(r: &OpResult) -> String {
    format!("{:02}-{}.csv", r.index, r.op)
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Output { path: path.to_path_buf(), reason: e.to_string() };
    let mut text = serde_json::to_string_pretty(v).map_err(|e| err(&e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| err(&e))
}

/// Writes every report, table and the summary into `outcome.out_dir`.
pub fn write_outcome(outcome: &RunOutcome) -> Result<(), CliError> {
    let dir = &outcome.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Output { path: dir.clone(), reason: e.to_string() })?;
    for r in &outcome.results {
        write_json(&dir.join(report_name(r)), &r.report)?;
        if let Some(t) = &r.table {
            t.write(&dir.join(table_name(r)))?;
        }
    }
    write_json(&dir.join("summary.json"), &outcome.summary)
}
