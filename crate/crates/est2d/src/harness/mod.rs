//! Run drivers and reporting: captured and fitted runs of the benchmark
//! cases, split error norms against analytic references, observed
//! convergence orders, and file outputs.

pub mod cli;
pub mod est;
pub mod q1d;
pub mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cases::CaseDefinition;
use crate::error::{Error, Result};
use crate::gas::{GasModel, ParameterState};
use crate::geom::Vec2;
use crate::mesh::Mesh;

/// How a case is run: plain shock capturing, or capturing coupled to the
/// fitted front. "Hybrid" is the fitted driver with a front that covers only
/// part of the discontinuities; the remainder stays captured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Captured,
    Fitted,
    Hybrid,
}

impl RunMode {
    pub fn parse(s: &str) -> Result<RunMode> {
        match s {
            "sc" => Ok(RunMode::Captured),
            "est" => Ok(RunMode::Fitted),
            "hybrid" => Ok(RunMode::Hybrid),
            other => Err(Error::Case(format!(
                "unknown mode '{other}' (expected sc, est, or hybrid)"
            ))),
        }
    }

    pub fn is_fitted(&self) -> bool {
        !matches!(self, RunMode::Captured)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            RunMode::Captured => "sc",
            RunMode::Fitted => "est",
            RunMode::Hybrid => "hybrid",
        }
    }
}

/// Area-weighted mean absolute error of the parameter vector on one side of
/// the shock. Component order follows the parameter vector:
/// [sqrt(rho), sqrt(rho) H, sqrt(rho) u, sqrt(rho) v].
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SideError {
    pub l1: [f64; 4],
    pub weight: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ErrorSplit {
    pub upstream: SideError,
    pub downstream: SideError,
}

fn accumulate(
    side: &mut SideError,
    z: &ParameterState,
    z_exact: &ParameterState,
    weight: f64,
) {
    let a = z.as_array();
    let b = z_exact.as_array();
    for k in 0..4 {
        side.l1[k] += (a[k] - b[k]).abs() * weight;
    }
    side.weight += weight;
    side.nodes += 1;
}

fn finish(split: &mut ErrorSplit) {
    for side in [&mut split.upstream, &mut split.downstream] {
        if side.weight > 0.0 {
            for k in 0..4 {
                side.l1[k] /= side.weight;
            }
        }
    }
}

/// Splits the nodal error against an analytic reference by shock side.
/// `weight` is the (masked) dual area; nodes with zero weight or rejected by
/// `include` are skipped.
pub fn l1_error_split_2d(
    gas: &GasModel,
    mesh: &Mesh,
    z: &[ParameterState],
    weight: &[f64],
    exact: &dyn Fn(Vec2) -> crate::gas::PrimitiveState,
    is_downstream: &dyn Fn(Vec2) -> bool,
    include: &dyn Fn(usize, Vec2) -> bool,
) -> Result<ErrorSplit> {
    let mut split = ErrorSplit::default();
    for (i, x) in mesh.tri.points.iter().enumerate() {
        if weight[i] <= 0.0 || !include(i, *x) {
            continue;
        }
        let ze = gas.primitive_to_parameter(&exact(*x))?;
        let side = if is_downstream(*x) { &mut split.downstream } else { &mut split.upstream };
        accumulate(side, &z[i], &ze, weight[i]);
    }
    finish(&mut split);
    Ok(split)
}

/// One-dimensional counterpart: weights are dual interval widths.
pub fn l1_error_split_q1d(
    gas: &GasModel,
    x: &[f64],
    z: &[ParameterState],
    exact: &dyn Fn(f64) -> crate::gas::PrimitiveState,
    split_x: f64,
    include: &dyn Fn(usize, f64) -> bool,
) -> Result<ErrorSplit> {
    let n = x.len();
    let mut split = ErrorSplit::default();
    for i in 0..n {
        if !include(i, x[i]) {
            continue;
        }
        let lo = if i == 0 { x[0] } else { 0.5 * (x[i - 1] + x[i]) };
        let hi = if i == n - 1 { x[n - 1] } else { 0.5 * (x[i] + x[i + 1]) };
        let ze = gas.primitive_to_parameter(&exact(x[i]))?;
        let side = if x[i] > split_x { &mut split.downstream } else { &mut split.upstream };
        accumulate(side, &z[i], &ze, hi - lo);
    }
    finish(&mut split);
    Ok(split)
}

/// Observed orders from consecutive level pairs: log(e_k/e_{k+1}) /
/// log(h_k/h_{k+1}). Non-positive errors cannot be placed on the log scale;
/// those pairs are skipped with a note.
pub fn observed_orders(errors: &[f64], h: &[f64]) -> Vec<f64> {
    assert_eq!(errors.len(), h.len());
    let mut orders = Vec::new();
    for k in 0..errors.len().saturating_sub(1) {
        if errors[k] <= 0.0 || errors[k + 1] <= 0.0 {
            eprintln!(
                "warning: non-positive error at levels {k}/{} skipped in order estimate",
                k + 1
            );
            continue;
        }
        orders.push((errors[k] / errors[k + 1]).ln() / (h[k] / h[k + 1]).ln());
    }
    orders
}

/// Summary of one run; serialized as the run directory's summary.json.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub case: String,
    pub mode: String,
    /// Tracking iterations (fitted) or solver steps (captured).
    pub iterations: usize,
    pub converged: bool,
    pub wall_seconds: f64,
    pub residual_first: f64,
    pub residual_final: f64,
    /// Mean |front speed| at the last iteration, and its running maximum.
    pub mean_w_final: Option<f64>,
    pub mean_w_max: Option<f64>,
    /// Iteration at which the front-speed stop fired.
    pub w_converged_at: Option<usize>,
    pub rh_residual_max: Option<f64>,
    /// Fitted locus summary: shock x for ducts, mean front radius for
    /// circular fronts, axis standoff distance for the blunt body.
    pub shock_locus: Option<f64>,
    pub l1_upstream: Option<[f64; 4]>,
    pub l1_downstream: Option<[f64; 4]>,
    /// Captured runs only: downstream error excluding a 3h band around the
    /// exact locus.
    pub l1_downstream_banded: Option<[f64; 4]>,
    pub phase_seconds: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl RunReport {
    pub fn new(case: &str, mode: RunMode) -> RunReport {
        RunReport {
            case: case.to_string(),
            mode: mode.tag().to_string(),
            iterations: 0,
            converged: false,
            wall_seconds: 0.0,
            residual_first: 0.0,
            residual_final: 0.0,
            mean_w_final: None,
            mean_w_max: None,
            w_converged_at: None,
            rh_residual_max: None,
            shock_locus: None,
            l1_upstream: None,
            l1_downstream: None,
            l1_downstream_banded: None,
            phase_seconds: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    /// One human-readable block, mirrored into summary.txt.
    pub fn text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("case: {}\nmode: {}\n", self.case, self.mode));
        s.push_str(&format!(
            "iterations: {}\nconverged: {}\n",
            self.iterations, self.converged
        ));
        s.push_str(&format!(
            "residual: {:.3e} -> {:.3e}\n",
            self.residual_first, self.residual_final
        ));
        if let (Some(wf), Some(wm)) = (self.mean_w_final, self.mean_w_max) {
            s.push_str(&format!("mean |w|: final {wf:.3e}, max {wm:.3e}\n"));
        }
        if let Some(it) = self.w_converged_at {
            s.push_str(&format!("front speed stop at iteration {it}\n"));
        }
        if let Some(r) = self.rh_residual_max {
            s.push_str(&format!("max jump-solve residual: {r:.3e}\n"));
        }
        if let Some(x) = self.shock_locus {
            s.push_str(&format!("fitted locus: {x:.6}\n"));
        }
        if let Some(e) = self.l1_upstream {
            s.push_str(&format!("L1 upstream:   {e:.6e?}\n"));
        }
        if let Some(e) = self.l1_downstream {
            s.push_str(&format!("L1 downstream: {e:.6e?}\n"));
        }
        if let Some(e) = self.l1_downstream_banded {
            s.push_str(&format!("L1 downstream (shock band excluded): {e:.6e?}\n"));
        }
        s
    }
}

/// Where a run writes its artifacts; `None` keeps everything in memory.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    /// Also write the full field (VTK for meshes, CSV for ducts).
    pub write_fields: bool,
}

impl RunOptions {
    pub fn in_memory() -> RunOptions {
        RunOptions::default()
    }
}

pub enum RunDetail {
    Duct(q1d::DuctOutcome),
    Mesh2d(est::Mesh2dOutcome),
}

pub struct RunOutcome {
    pub report: RunReport,
    pub detail: RunDetail,
}

/// Runs a case in the requested mode, writing artifacts when an output
/// directory is configured.
pub fn run_case(case: &CaseDefinition, mode: RunMode, opts: &RunOptions) -> Result<RunOutcome> {
    case.validate()?;
    if case.is_duct() {
        q1d::run_duct(case, mode, opts)
    } else {
        est::run_mesh2d(case, mode, opts)
    }
}

pub(crate) struct OutputSink {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl OutputSink {
    pub fn new(opts: &RunOptions, case: &CaseDefinition, mode: RunMode) -> Result<OutputSink> {
        let dir = match (&opts.out_dir, &case.output.dir) {
            (Some(d), _) => Some(d.clone()),
            (None, Some(d)) => Some(PathBuf::from(d).join(format!("{}_{}", case.name, mode.tag()))),
            (None, None) => None,
        };
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)
                .map_err(|e| Error::Case(format!("cannot create run directory {}: {e}", d.display())))?;
        }
        Ok(OutputSink { dir, files: Vec::new() })
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    pub fn path(&mut self, name: &str) -> Option<PathBuf> {
        let d = self.dir.as_ref()?;
        self.files.push(name.to_string());
        Some(d.join(name))
    }

    /// Path for a diagnostic file that is not part of the regular manifest.
    pub fn debug_path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        if let Some(p) = self.path(name) {
            std::fs::write(&p, text)
                .map_err(|e| Error::Case(format!("cannot write {}: {e}", p.display())))?;
        }
        Ok(())
    }

    /// Writes summary.json, summary.txt, and the manifest; returns the file
    /// list recorded for the report.
    pub fn finish(mut self, report: &mut RunReport) -> Result<()> {
        if !self.enabled() {
            return Ok(());
        }
        report.outputs = self.files.clone();
        report.outputs.extend(["summary.json".into(), "summary.txt".into(), "manifest.txt".into()]);
        let json = serde_json::to_string_pretty(report)
            .map_err(|e| Error::Case(format!("cannot serialize summary: {e}")))?;
        self.write_text("summary.json", &json)?;
        self.write_text("summary.txt", &report.text())?;
        let manifest: String = report
            .outputs
            .iter()
            .map(|f| format!("{f}\n"))
            .collect();
        if let Some(d) = &self.dir {
            std::fs::write(d.join("manifest.txt"), manifest)
                .map_err(|e| Error::Case(format!("cannot write manifest: {e}")))?;
        }
        Ok(())
    }
}

/// history.csv writer shared by the drivers: fixed column set, one row per
/// tracking iteration.
pub(crate) fn history_csv(rows: &[IterationRecord]) -> (Vec<&'static str>, Vec<Vec<f64>>) {
    let header = vec![
        "iteration",
        "mean_w",
        "max_w",
        "dt",
        "rh_residual_max",
        "solver_residual",
        "crossed_nodes",
    ];
    let data = rows
        .iter()
        .map(|r| {
            vec![
                r.iteration as f64,
                r.mean_w,
                r.max_w,
                r.dt,
                r.rh_residual_max,
                r.solver_residual,
                r.crossed as f64,
            ]
        })
        .collect();
    (header, data)
}

/// Per-iteration diagnostics of the fitted drivers.
#[derive(Debug, Clone, Copy, Default)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mean_w: f64,
    pub max_w: f64,
    pub dt: f64,
    pub rh_residual_max: f64,
    pub solver_residual: f64,
    pub crossed: usize,
}

/// Shared front-speed stopping rule: absolute tolerance or a drop relative
/// to the running maximum (the latter only once a few iterations exist).
pub(crate) struct SpeedStop {
    tol_abs: f64,
    drop: f64,
    running_max: f64,
    pub converged_at: Option<usize>,
}

impl SpeedStop {
    pub fn new(tol_abs: f64, drop: f64) -> SpeedStop {
        SpeedStop { tol_abs, drop, running_max: 0.0, converged_at: None }
    }

    /// Feeds one iteration's mean |w|; returns true once the rule fires.
    pub fn update(&mut self, iter: usize, mean_w: f64) -> bool {
        self.running_max = self.running_max.max(mean_w);
        if self.converged_at.is_none() {
            let dropped = iter >= 5 && mean_w < self.drop * self.running_max;
            if mean_w < self.tol_abs || dropped {
                self.converged_at = Some(iter);
            }
        }
        self.converged_at.is_some()
    }

    pub fn running_max(&self) -> f64 {
        self.running_max
    }
}
