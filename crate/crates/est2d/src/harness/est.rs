//! Two-dimensional drivers: plain captured relaxation on the full mesh, and
//! the fitted driver that excavates a cavity around the front, closes it
//! with surrogate boundaries, and marches the front and the bulk field
//! together until the front stops moving.

use std::time::Instant;

use crate::cases::{seed_front_states, CaseDefinition, FrontSpec, MeshSpec};
use crate::cavity::{excavate, side_of_shock, CavityDecomposition, Side};
use crate::error::{Error, Result};
use crate::front::ShockFront;
use crate::gas::{GasModel, ParameterState, PrimitiveState};
use crate::geom::Vec2;
use crate::mesh::io::{self, VtkFields};
use crate::mesh::Mesh;
use crate::motion;
use crate::rh::ShockJumpProblem;
use crate::solver::{
    advance, advance_with_metrics, BoundaryCondition, MaskedMetrics, SolutionField,
    SolverControls,
};
use crate::transfer;

use super::{
    history_csv, l1_error_split_2d, ErrorSplit, IterationRecord, OutputSink, RunDetail,
    RunMode, RunOptions, RunOutcome, RunReport, SpeedStop,
};

/// The nine coupling phases of one tracking iteration, in execution order.
pub const PHASES: [&str; 9] = [
    "excavate",
    "tangents",
    "advance",
    "first-transfer",
    "shock-solve",
    "second-transfer",
    "displace",
    "reinterpolate",
    "redistribute",
];

pub struct Mesh2dOutcome {
    pub mesh: Mesh,
    pub z: Vec<ParameterState>,
    pub front: Option<ShockFront>,
    pub cav: Option<CavityDecomposition>,
    pub history: Vec<IterationRecord>,
    pub errors: Option<ErrorSplit>,
    pub errors_banded: Option<ErrorSplit>,
}

pub fn run_mesh2d(case: &CaseDefinition, mode: RunMode, opts: &RunOptions) -> Result<RunOutcome> {
    let t0 = Instant::now();
    let mesh = case.build_mesh()?;
    let bcs = case.build_bcs(&mesh)?;
    let gas = case.gas_model();
    let mut report = RunReport::new(&case.name, mode);
    let mut sink = OutputSink::new(opts, case, mode)?;

    let outcome = if mode.is_fitted() {
        run_fitted(case, &gas, mesh, &bcs, &mut report, &mut sink)?
    } else {
        run_captured(case, &gas, mesh, &bcs, &mut report)?
    };

    if sink.enabled() {
        if opts.write_fields || case.output.fields {
            if let Some(p) = sink.path("field_final.vtk") {
                write_field_vtk(&gas, &outcome.mesh, &outcome.z, outcome.cav.as_ref(), &p)?;
            }
        }
        if let Some(front) = &outcome.front {
            if let Some(p) = sink.path("front_final.csv") {
                front.write_polyline_csv(&gas, &p)?;
            }
        }
        if !outcome.history.is_empty() {
            if let Some(p) = sink.path("history.csv") {
                let (header, rows) = history_csv(&outcome.history);
                io::write_csv(&p, &header, rows)?;
            }
        }
    }

    report.wall_seconds = t0.elapsed().as_secs_f64();
    if let Some(e) = &outcome.errors {
        report.l1_upstream = Some(e.upstream.l1);
        report.l1_downstream = Some(e.downstream.l1);
    }
    report.l1_downstream_banded = outcome.errors_banded.as_ref().map(|e| e.downstream.l1);
    report.shock_locus = outcome.front.as_ref().and_then(|f| locus_summary(case, f));
    sink.finish(&mut report)?;
    Ok(RunOutcome { report, detail: RunDetail::Mesh2d(outcome) })
}

/// Case-specific scalar summarizing the fitted front: mean radius on the
/// annulus, axis standoff distance on the forebody.
fn locus_summary(case: &CaseDefinition, front: &ShockFront) -> Option<f64> {
    match case.mesh {
        MeshSpec::Annulus { .. } => {
            let n = front.points.len() as f64;
            Some(front.points.iter().map(|p| p.x.norm()).sum::<f64>() / n)
        }
        MeshSpec::Forebody { r_body, .. } => {
            // The symmetry-attached endpoint sits on the axis ahead of the
            // body nose.
            Some((-front.points[0].x.x) - r_body)
        }
        _ => None,
    }
}

/// Uniform free-stream state from the case's plain inflow, for impulsive
/// starts.
fn uniform_start(case: &CaseDefinition, bcs: &[BoundaryCondition]) -> Result<PrimitiveState> {
    for bc in bcs {
        if let BoundaryCondition::SupersonicInflow(s) = bc {
            return Ok(*s);
        }
    }
    Err(Error::Case(format!(
        "case '{}' has no uniform inflow to start from",
        case.name
    )))
}

fn run_captured(
    case: &CaseDefinition,
    gas: &GasModel,
    mesh: Mesh,
    bcs: &[BoundaryCondition],
    report: &mut RunReport,
) -> Result<Mesh2dOutcome> {
    let controls = case.solver.solver_controls()?;
    let n = mesh.tri.points.len();
    let mut field = match case.exact_source() {
        Ok(ex) => {
            // Analytic start with the discontinuity in place: the captured
            // run only has to relax the profile, not build it.
            SolutionField::from_fn(gas, n, |i| ex.state_at(mesh.tri.points[i]))?
        }
        Err(_) => SolutionField::uniform(gas, n, &uniform_start(case, bcs)?)?,
    };
    if case.solver.warmup_first_order > 0 {
        let warm = SolverControls { order: 1, residual_tol: 0.0, ..controls };
        advance(gas, &mesh, &mut field, None, bcs, &warm, case.solver.warmup_first_order)?;
    }
    advance(gas, &mesh, &mut field, None, bcs, &controls, controls.max_iters)?;

    report.iterations = field.iteration;
    report.residual_first = field.residual_history.first().copied().unwrap_or(0.0);
    report.residual_final = field.residual_history.last().copied().unwrap_or(0.0);
    report.converged = report.residual_final <= controls.residual_tol * report.residual_first
        || report.iterations >= case.solver.warmup_first_order + controls.max_iters;

    let (errors, errors_banded) = match case.exact_source() {
        Ok(ex) => {
            let split = |x: Vec2| x.norm() > ex.r_sh;
            let exact = |x: Vec2| {
                let r = x.norm();
                ex.state_radial_on(r, x / r, r > ex.r_sh)
            };
            let band = 3.0 * mesh.geo.h_mean;
            let e = l1_error_split_2d(
                gas,
                &mesh,
                &field.z,
                &mesh.geo.dual_area,
                &exact,
                &split,
                &|_, _| true,
            )?;
            let eb = l1_error_split_2d(
                gas,
                &mesh,
                &field.z,
                &mesh.geo.dual_area,
                &exact,
                &split,
                &|_, x| (x.norm() - ex.r_sh).abs() > band,
            )?;
            (Some(e), Some(eb))
        }
        Err(_) => (None, None),
    };

    Ok(Mesh2dOutcome {
        mesh,
        z: field.z,
        front: None,
        cav: None,
        history: Vec::new(),
        errors,
        errors_banded,
    })
}

/// Fitted-run state threaded through the tracking iterations.
struct Tracker<'a> {
    gas: GasModel,
    mesh: &'a Mesh,
    bcs: &'a [BoundaryCondition],
    controls: SolverControls,
    inner_steps: usize,
    redistribute_every: usize,
    front: ShockFront,
    field: SolutionField,
}

impl Tracker<'_> {
    /// Dumps the current state for post-mortem inspection when a phase
    /// fails; z components are written raw because the field may hold stale
    /// or excavated nodes that do not map back to primitives.
    fn fail(&self, sink: &OutputSink, phase: &'static str, e: Error) -> Error {
        if let Some(p) = sink.debug_path(&format!("abort_{phase}.vtk")) {
            let comp: Vec<Vec<f64>> =
                (0..4).map(|k| self.field.z.iter().map(|z| z.as_array()[k]).collect()).collect();
            let fields = VtkFields {
                scalars: vec![
                    ("z1", &comp[0]),
                    ("z2", &comp[1]),
                    ("z3", &comp[2]),
                    ("z4", &comp[3]),
                ],
                vectors: vec![],
            };
            let _ = io::write_vtk(&self.mesh.tri, &fields, &p);
        }
        if let Some(p) = sink.debug_path(&format!("abort_{phase}_front.csv")) {
            let _ = self.front.write_polyline_csv(&self.gas, &p);
        }
        e.in_phase(phase)
    }

    fn one_iteration(
        &mut self,
        iter: usize,
        sink: &OutputSink,
    ) -> Result<(IterationRecord, CavityDecomposition)> {
        let mut log: Vec<&'static str> = Vec::with_capacity(PHASES.len());
        macro_rules! phase {
            ($name:literal, $expr:expr) => {{
                log.push($name);
                match $expr {
                    Ok(v) => v,
                    Err(e) => return Err(self.fail(sink, $name, e)),
                }
            }};
        }

        let cav = phase!("excavate", excavate(self.mesh, &self.front));

        phase!("tangents", self.front.compute_tangents_normals(&self.gas));

        log.push("advance");
        let mm = match MaskedMetrics::build(self.mesh, Some(&cav.active_cell_mask)) {
            Ok(v) => v,
            Err(e) => return Err(self.fail(sink, "advance", e)),
        };
        let dt = match advance_with_metrics(
            &self.gas,
            self.mesh,
            &mm,
            &mut self.field,
            self.bcs,
            &self.controls,
            self.inner_steps,
        ) {
            Ok(v) => v,
            Err(e) => return Err(self.fail(sink, "advance", e)),
        };
        let solver_residual = self.field.residual_history.last().copied().unwrap_or(0.0);

        log.push("first-transfer");
        let grads = transfer::nodal_gradients(self.mesh, &self.field.z, Some(&cav.active_cell_mask));
        let np = self.front.points.len();
        let mut r_ds = vec![0.0f64; np];
        for i in 0..np {
            let pts = &self.mesh.tri.points;
            let up = match transfer::extrapolate_upstream(
                &self.front,
                i,
                &self.field.z,
                &grads,
                &cav.gamma_tilde_up,
                pts,
            ) {
                Ok((z, _)) => z,
                Err(e) => return Err(self.fail(sink, "first-transfer", e)),
            };
            let rd = match transfer::extract_downstream_riemann(
                &self.gas,
                &self.front,
                i,
                &self.field.z,
                &grads,
                &cav.gamma_tilde_down,
                pts,
            ) {
                Ok((r, _)) => r,
                Err(e) => return Err(self.fail(sink, "first-transfer", e)),
            };
            self.front.points[i].z_up = up;
            r_ds[i] = rd;
        }

        log.push("shock-solve");
        let mut rh_residual_max = 0.0f64;
        for i in 0..np {
            let res = (|| -> Result<()> {
                let p = &self.front.points[i];
                let upstream = self.gas.parameter_to_primitive(&p.z_up)?;
                let warm = match self.gas.parameter_to_primitive(&p.z_down) {
                    Ok(w) if p.w.is_finite() => Some([w.rho, w.u, w.v, w.p, p.w]),
                    _ => None,
                };
                let problem = ShockJumpProblem {
                    gas: self.gas,
                    upstream,
                    n: p.n,
                    tau: p.tau,
                    r_d: r_ds[i],
                };
                let sol = problem.solve(i, warm)?;
                let z_down = self.gas.primitive_to_parameter(&sol.downstream)?;
                let pm = &mut self.front.points[i];
                pm.z_down = z_down;
                pm.w = sol.w;
                rh_residual_max = rh_residual_max.max(sol.residual);
                Ok(())
            })();
            if let Err(e) = res {
                return Err(self.fail(sink, "shock-solve", e));
            }
        }

        log.push("second-transfer");
        if let Err(e) = transfer::second_transfer_downstream(
            &self.front,
            self.mesh,
            &cav,
            &grads,
            &mut self.field.z,
        ) {
            return Err(self.fail(sink, "second-transfer", e));
        }

        log.push("displace");
        let before = self.front.clone();
        if let Err(e) = motion::displace(&mut self.front, self.mesh, dt) {
            return Err(self.fail(sink, "displace", e));
        }

        log.push("reinterpolate");
        let crossed = match motion::detect_crossed_nodes(&before, &self.front, self.mesh) {
            Ok(v) => v,
            Err(e) => return Err(self.fail(sink, "reinterpolate", e)),
        };
        if let Err(e) = motion::reinterpolate_crossed_nodes(
            &crossed,
            &self.front,
            self.mesh,
            &cav,
            &grads,
            &mut self.field.z,
        ) {
            return Err(self.fail(sink, "reinterpolate", e));
        }

        log.push("redistribute");
        if (iter + 1) % self.redistribute_every == 0 {
            if let Err(e) = self.front.redistribute(self.front.l_sh) {
                return Err(self.fail(sink, "redistribute", e));
            }
            self.front.compute_geometric_normals();
        }

        assert_eq!(log, PHASES, "tracking iteration ran phases out of order");

        let mean_w = motion::mean_shock_speed(&self.front);
        let max_w = self.front.points.iter().fold(0.0f64, |m, p| m.max(p.w.abs()));
        Ok((
            IterationRecord {
                iteration: iter,
                mean_w,
                max_w,
                dt,
                rh_residual_max,
                solver_residual,
                crossed: crossed.len(),
            },
            cav,
        ))
    }
}

fn run_fitted(
    case: &CaseDefinition,
    gas: &GasModel,
    mesh: Mesh,
    bcs: &[BoundaryCondition],
    report: &mut RunReport,
    sink: &mut OutputSink,
) -> Result<Mesh2dOutcome> {
    let controls = case.solver.solver_controls()?;
    let spec = &case.solver;
    let n = mesh.tri.points.len();
    let mut front = case.initial_front(&mesh)?;
    let offset = case.shock.sample_offset * mesh.geo.h_mean;

    // Start field and front-state seeding. With an analytic reference the
    // start is the reference family with the shock forced onto the initial
    // front; otherwise a captured run supplies the start field.
    let field = match (&case.exact, &case.shock.front) {
        (Some(crate::cases::ExactSpec::SourceFlow { r_in, r_out, mach_in, .. }), FrontSpec::Circle { radius, .. }) => {
            let seed = crate::cases::exact::source_flow_with_shock_at(
                *r_in, *r_out, *mach_in, *radius, gas.gamma,
            )?;
            let f = SolutionField::from_fn(gas, n, |i| seed.state_at(mesh.tri.points[i]))?;
            seed_front_states(&mut front, gas, offset, &mut |x| Ok(seed.state_at(x)))?;
            f
        }
        _ => {
            // Captured warm start, then seed the front by nearest-node
            // sampling on each side.
            let mut sub = RunReport::new(&case.name, RunMode::Captured);
            let captured = run_captured(case, gas, mesh.clone(), bcs, &mut sub)?;
            let f = SolutionField { z: captured.z, iteration: 0, residual_history: Vec::new() };
            let z = f.z.clone();
            let pts = mesh.tri.points.clone();
            seed_front_states(&mut front, gas, offset, &mut |x| {
                let mut best = (f64::INFINITY, 0usize);
                for (i, p) in pts.iter().enumerate() {
                    let d = (*p - x).norm2();
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                gas.parameter_to_primitive(&z[best.1])
            })?;
            f
        }
    };

    let mut tracker = Tracker {
        gas: *gas,
        mesh: &mesh,
        bcs,
        controls,
        inner_steps: spec.inner_steps,
        redistribute_every: spec.redistribute_every,
        front,
        field,
    };

    let mut stop = SpeedStop::new(spec.w_tol_rel * case.reference_speed(), spec.w_drop);
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut rh_max = 0.0f64;
    let mut last_cav: Option<CavityDecomposition> = None;
    let mut polish_left: Option<usize> = None;
    for it in 0..(spec.max_track_iters + spec.polish_iters) {
        let (rec, cav) = tracker.one_iteration(it, sink)?;
        rh_max = rh_max.max(rec.rh_residual_max);
        stop.update(it, rec.mean_w);
        history.push(rec);
        last_cav = Some(cav);
        match &mut polish_left {
            None => {
                if stop.converged_at.is_some() || it + 1 >= spec.max_track_iters {
                    polish_left = Some(spec.polish_iters);
                }
            }
            Some(k) => {
                if *k == 0 {
                    break;
                }
                *k -= 1;
            }
        }
    }

    report.iterations = history.len();
    report.converged = stop.converged_at.is_some();
    report.w_converged_at = stop.converged_at;
    report.mean_w_final = history.last().map(|r| r.mean_w);
    report.mean_w_max = Some(stop.running_max());
    report.rh_residual_max = Some(rh_max);
    report.residual_first = history.first().map(|r| r.solver_residual).unwrap_or(0.0);
    report.residual_final = history.last().map(|r| r.solver_residual).unwrap_or(0.0);
    if !report.converged {
        eprintln!(
            "warning: fitted run '{}' hit the iteration cap with mean |w| {:.3e}",
            case.name,
            report.mean_w_final.unwrap_or(f64::NAN)
        );
    }

    let front = tracker.front;
    let z = tracker.field.z;
    let cav = match last_cav {
        Some(c) => c,
        None => excavate(&mesh, &front)?,
    };

    // Error norms against the analytic reference, split by the fitted front
    // and weighted with the masked dual areas (excavated nodes carry none).
    let errors = match case.exact_source() {
        Ok(ex) => {
            let mm = MaskedMetrics::build(&mesh, Some(&cav.active_cell_mask))?;
            let split = |x: Vec2| side_of_shock(&front, x) == Side::Downstream;
            let exact = |x: Vec2| {
                let r = x.norm();
                ex.state_radial_on(r, x / r, side_of_shock(&front, x) == Side::Downstream)
            };
            Some(l1_error_split_2d(
                gas,
                &mesh,
                &z,
                &mm.dual_area,
                &exact,
                &split,
                &|_, _| true,
            )?)
        }
        Err(_) => None,
    };

    Ok(Mesh2dOutcome {
        mesh,
        z,
        front: Some(front),
        cav: Some(cav),
        history,
        errors,
        errors_banded: None,
    })
}

/// Final-field VTK: primitive scalars where states decode, zeros on dead
/// nodes, plus the side labels when a cavity exists.
fn write_field_vtk(
    gas: &GasModel,
    mesh: &Mesh,
    z: &[ParameterState],
    cav: Option<&CavityDecomposition>,
    path: &std::path::Path,
) -> Result<()> {
    let n = mesh.tri.points.len();
    let mut rho = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut mach = vec![0.0; n];
    let mut vel = vec![Vec2::ZERO; n];
    for i in 0..n {
        if let Ok(w) = gas.parameter_to_primitive(&z[i]) {
            rho[i] = w.rho;
            p[i] = w.p;
            mach[i] = gas.mach(&w);
            vel[i] = w.velocity();
        }
    }
    let side: Vec<f64> = match cav {
        Some(c) => c
            .node_side
            .iter()
            .map(|s| match s {
                crate::cavity::NodeSide::Upstream => 0.0,
                crate::cavity::NodeSide::Downstream => 1.0,
                crate::cavity::NodeSide::Removed => 2.0,
            })
            .collect(),
        None => vec![0.0; n],
    };
    let fields = VtkFields {
        scalars: vec![("rho", &rho), ("p", &p), ("mach", &mach), ("side", &side)],
        vectors: vec![("velocity", &vel)],
    };
    io::write_vtk(&mesh.tri, &fields, path)
}
