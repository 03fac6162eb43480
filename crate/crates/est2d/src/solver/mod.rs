//! Vertex-centered median-dual finite-volume solver for the steady Euler
//! equations, with cell masking for cavity-based domain decomposition.

pub mod flux;
pub mod gradient;
pub mod q1d;

use crate::error::{Error, Result};
use crate::gas::{ConservedState, GasModel, ParameterState, PrimitiveState};
use crate::geom::Vec2;
use crate::mesh::{Mesh, NO_CELL};
use crate::par;

pub use gradient::Limiter;

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    SupersonicInflow(PrimitiveState),
    /// Position-dependent supersonic inflow: one state per boundary-edge
    /// half-face, evaluated at the flux quadrature points (see
    /// `inflow_profile`). Entries for edges of other patches are ignored.
    SupersonicInflowProfile(std::sync::Arc<Vec<[PrimitiveState; 2]>>),
    SupersonicOutflow,
    SubsonicOutflow { p_static: f64 },
    InviscidWall,
    Symmetry,
    /// Surrogate boundaries get no solver-side condition: faces are closed
    /// transmissively and the transfer operators own the node values.
    SurrogateUpstream,
    SurrogateDownstream,
}

/// Samples a state function at the two half-face quadrature points of every
/// boundary edge, in the layout `SupersonicInflowProfile` expects.
pub fn inflow_profile(
    mesh: &Mesh,
    f: impl Fn(Vec2) -> PrimitiveState,
) -> Vec<[PrimitiveState; 2]> {
    mesh.conn
        .boundary_edges
        .iter()
        .map(|be| {
            let (a, b) = (mesh.tri.points[be.dir[0]], mesh.tri.points[be.dir[1]]);
            [f(a * 0.75 + b * 0.25), f(b * 0.75 + a * 0.25)]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeStepMode {
    #[default]
    Local,
    Global,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverControls {
    pub cfl: f64,
    pub max_iters: usize,
    /// Relative L2 residual drop that counts as converged.
    pub residual_tol: f64,
    pub limiter: Limiter,
    /// 1 = piecewise constant, 2 = linear reconstruction.
    pub order: u8,
    pub time_step_mode: TimeStepMode,
    /// Optional hard cap on the time step (time-accurate runs).
    pub dt_cap: Option<f64>,
}

impl Default for SolverControls {
    fn default() -> Self {
        SolverControls {
            cfl: 0.8,
            max_iters: 20_000,
            residual_tol: 1e-10,
            limiter: Limiter::BarthJespersen,
            order: 2,
            time_step_mode: TimeStepMode::Local,
            dt_cap: None,
        }
    }
}

impl SolverControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0) {
            return Err(Error::Case(format!("cfl must be positive, got {}", self.cfl)));
        }
        if self.order != 1 && self.order != 2 {
            return Err(Error::Case(format!("order must be 1 or 2, got {}", self.order)));
        }
        Ok(())
    }
}

/// Per-node solution in parameter variables, aligned with mesh points.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub z: Vec<ParameterState>,
    pub iteration: usize,
    /// L2 norm of the mass residual per advance step.
    pub residual_history: Vec<f64>,
}

impl SolutionField {
    pub fn uniform(gas: &GasModel, n: usize, w: &PrimitiveState) -> Result<Self> {
        let z = gas.primitive_to_parameter(w)?;
        Ok(SolutionField {
            z: vec![z; n],
            iteration: 0,
            residual_history: Vec::new(),
        })
    }

    pub fn from_fn(
        gas: &GasModel,
        n: usize,
        mut f: impl FnMut(usize) -> PrimitiveState,
    ) -> Result<Self> {
        let z = (0..n)
            .map(|i| gas.primitive_to_parameter(&f(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SolutionField {
            z,
            iteration: 0,
            residual_history: Vec::new(),
        })
    }

    pub fn primitives(&self, gas: &GasModel) -> Result<Vec<PrimitiveState>> {
        self.z.iter().map(|z| gas.parameter_to_primitive(z)).collect()
    }
}

/// Mask-dependent metric data shared by all steps of one advance call.
#[derive(Debug, Clone)]
pub struct MaskedMetrics {
    /// Dual-face normal per edge under the mask, oriented lo -> hi.
    pub edge_nu: Vec<Vec2>,
    /// Edge participates in assembly (a nonzero face survives the mask).
    pub edge_active: Vec<bool>,
    /// Boundary half-face participates (owning cell active).
    pub boundary_active: Vec<bool>,
    /// Per node: transmissive face closing the truncated dual cell.
    pub closure_nu: Vec<Vec2>,
    /// Masked dual areas; zero means the node has no active cell.
    pub dual_area: Vec<f64>,
    pub alive: Vec<bool>,
    /// Total face magnitude per node, for the time-step length scale.
    pub perimeter: Vec<f64>,
}

impl MaskedMetrics {
    pub fn build(mesh: &Mesh, mask: Option<&[bool]>) -> Result<Self> {
        let n_nodes = mesh.tri.points.len();
        let n_cells = mesh.tri.triangles.len();
        if let Some(m) = mask {
            if m.len() != n_cells {
                return Err(Error::Topology(format!(
                    "mask length {} does not match cell count {n_cells}",
                    m.len()
                )));
            }
        }
        let cell_active = |c: usize| c != NO_CELL && mask.map_or(true, |m| m[c]);

        let n_edges = mesh.conn.edges.len();
        let mut edge_nu = vec![Vec2::ZERO; n_edges];
        let mut edge_active = vec![false; n_edges];
        for (e, edge) in mesh.conn.edges.iter().enumerate() {
            let mut nu = Vec2::ZERO;
            let mut any = false;
            for side in 0..2 {
                if cell_active(edge.tris[side]) {
                    nu += mesh.geo.edge_tri_normal[e][side];
                    any = true;
                }
            }
            edge_nu[e] = nu;
            edge_active[e] = any;
        }

        let mut boundary_active = vec![false; mesh.conn.boundary_edges.len()];
        let mut face_sum = vec![Vec2::ZERO; n_nodes];
        let mut perimeter = vec![0.0; n_nodes];
        for (e, edge) in mesh.conn.edges.iter().enumerate() {
            if !edge_active[e] {
                continue;
            }
            face_sum[edge.nodes[0]] += edge_nu[e];
            face_sum[edge.nodes[1]] -= edge_nu[e];
            let m = edge_nu[e].norm();
            perimeter[edge.nodes[0]] += m;
            perimeter[edge.nodes[1]] += m;
        }
        for (b, be) in mesh.conn.boundary_edges.iter().enumerate() {
            if !cell_active(be.tri) {
                continue;
            }
            boundary_active[b] = true;
            let hn = mesh.geo.boundary_half_normal[b];
            for node in be.dir {
                face_sum[node] += hn;
                perimeter[node] += hn.norm();
            }
        }

        let mut dual_area = vec![0.0; n_nodes];
        for (c, tri) in mesh.tri.triangles.iter().enumerate() {
            if !cell_active(c) {
                continue;
            }
            for &v in tri {
                dual_area[v] += mesh.geo.tri_area[c] / 3.0;
            }
        }

        let mut closure_nu = vec![Vec2::ZERO; n_nodes];
        let mut alive = vec![false; n_nodes];
        for i in 0..n_nodes {
            alive[i] = dual_area[i] > 0.0;
            if !alive[i] {
                continue;
            }
            let c = face_sum[i] * -1.0;
            if c.norm() > 1e-12 * (perimeter[i] + 1.0) {
                closure_nu[i] = c;
                perimeter[i] += c.norm();
            }
        }
        Ok(MaskedMetrics {
            edge_nu,
            edge_active,
            boundary_active,
            closure_nu,
            dual_area,
            alive,
            perimeter,
        })
    }
}

/// Unchecked conserved-to-primitive conversion for trial states; validity
/// is the caller's test.
#[inline]
fn prim_raw(gas: &GasModel, q: &ConservedState) -> PrimitiveState {
    let u = q.mom_x / q.rho;
    let v = q.mom_y / q.rho;
    let p = (gas.gamma - 1.0) * (q.rho_E - 0.5 * q.rho * (u * u + v * v));
    PrimitiveState::new(q.rho, u, v, p)
}

fn bc_for_patch<'a>(bcs: &'a [BoundaryCondition], patch: usize) -> Result<&'a BoundaryCondition> {
    bcs.get(patch).ok_or_else(|| {
        Error::Case(format!(
            "no boundary condition configured for patch {patch}"
        ))
    })
}

/// Residual vector per node: net outward flux over the masked dual cell.
/// `grads`/`phi` are used only in second-order mode.
#[allow(clippy::too_many_arguments)]
fn assemble_residual(
    gas: &GasModel,
    mesh: &Mesh,
    mm: &MaskedMetrics,
    w: &[PrimitiveState],
    grads: Option<&[[Vec2; 4]]>,
    phi: Option<&[[f64; 4]]>,
    bcs: &[BoundaryCondition],
) -> Result<Vec<[f64; 4]>> {
    let reconstruct = |i: usize, at: Vec2| -> PrimitiveState {
        match (grads, phi) {
            (Some(g), Some(p)) => {
                let d = at - mesh.tri.points[i];
                let wi = &w[i];
                let r = PrimitiveState::new(
                    wi.rho + p[i][0] * g[i][0].dot(d),
                    wi.u + p[i][1] * g[i][1].dot(d),
                    wi.v + p[i][2] * g[i][2].dot(d),
                    wi.p + p[i][3] * g[i][3].dot(d),
                );
                if r.rho > 0.0 && r.p > 0.0 {
                    r
                } else {
                    *wi
                }
            }
            _ => w[i],
        }
    };

    // Phase 1: one flux per active edge (deterministic, order-independent).
    let edge_flux: Vec<[f64; 4]> = par::map_indexed(mesh.conn.edges.len(), |e| {
        if !mm.edge_active[e] {
            return [0.0; 4];
        }
        let [lo, hi] = mesh.conn.edges[e].nodes;
        let xm = (mesh.tri.points[lo] + mesh.tri.points[hi]) * 0.5;
        let wl = reconstruct(lo, xm);
        let wr = reconstruct(hi, xm);
        flux::roe_flux(gas, &wl, &wr, mm.edge_nu[e])
    });

    // Phase 2: gather per node in fixed adjacency order.
    let res: Vec<Result<[f64; 4]>> = par::map_indexed(mesh.tri.points.len(), |i| {
        if !mm.alive[i] {
            return Ok([0.0; 4]);
        }
        let mut r = [0.0; 4];
        for &e in mesh.conn.node_edges.row(i) {
            if !mm.edge_active[e] {
                continue;
            }
            let f = &edge_flux[e];
            let sign = if mesh.conn.edges[e].nodes[0] == i { 1.0 } else { -1.0 };
            for k in 0..4 {
                r[k] += sign * f[k];
            }
        }
        for &b in mesh.conn.node_boundary_edges.row(i) {
            if !mm.boundary_active[b] {
                continue;
            }
            let be = &mesh.conn.boundary_edges[b];
            let hn = mesh.geo.boundary_half_normal[b];
            // Quadrature point of this node's half of the boundary edge.
            let other = if be.dir[0] == i { be.dir[1] } else { be.dir[0] };
            let xq = mesh.tri.points[i] * 0.75 + mesh.tri.points[other] * 0.25;
            let wf = reconstruct(i, xq);
            let f = match bc_for_patch(bcs, be.patch)? {
                BoundaryCondition::SupersonicInflow(state) => gas.flux_normal(state, hn),
                BoundaryCondition::SupersonicInflowProfile(tbl) => {
                    let slot = if be.dir[0] == i { 0 } else { 1 };
                    gas.flux_normal(&tbl[b][slot], hn)
                }
                BoundaryCondition::SupersonicOutflow
                | BoundaryCondition::SurrogateUpstream
                | BoundaryCondition::SurrogateDownstream => gas.flux_normal(&wf, hn),
                BoundaryCondition::SubsonicOutflow { p_static } => {
                    // Upwinding against a pressure ghost keeps this
                    // characteristic-consistent even if the exit runs
                    // locally supersonic.
                    let ghost = PrimitiveState::new(wf.rho, wf.u, wf.v, *p_static);
                    flux::roe_flux(gas, &wf, &ghost, hn)
                }
                BoundaryCondition::InviscidWall | BoundaryCondition::Symmetry => {
                    flux::wall_flux(wf.p, hn)
                }
            };
            for k in 0..4 {
                r[k] += f[k];
            }
        }
        if mm.closure_nu[i] != Vec2::ZERO {
            let f = gas.flux_normal(&w[i], mm.closure_nu[i]);
            for k in 0..4 {
                r[k] += f[k];
            }
        }
        Ok(r)
    });
    res.into_iter().collect()
}

/// Stable time step per alive node and the global minimum.
pub fn compute_dt(
    gas: &GasModel,
    mesh: &Mesh,
    mm: &MaskedMetrics,
    w: &[PrimitiveState],
    controls: &SolverControls,
) -> (Vec<f64>, f64) {
    let n = mesh.tri.points.len();
    let mut dt = vec![0.0; n];
    let mut global = f64::INFINITY;
    for i in 0..n {
        if !mm.alive[i] || mm.perimeter[i] == 0.0 {
            continue;
        }
        let speed = w[i].velocity().norm() + gas.sound_speed(&w[i]);
        let length = mm.dual_area[i] / (0.5 * mm.perimeter[i]);
        let mut d = controls.cfl * length / speed;
        if let Some(cap) = controls.dt_cap {
            d = d.min(cap);
        }
        dt[i] = d;
        global = global.min(d);
    }
    if !global.is_finite() {
        global = 0.0;
    }
    (dt, global)
}

/// Explicit pseudo-time march of the masked domain. Returns the global
/// minimum time step actually used in the final accepted step.
#[allow(clippy::too_many_arguments)]
pub fn advance(
    gas: &GasModel,
    mesh: &Mesh,
    field: &mut SolutionField,
    mask: Option<&[bool]>,
    bcs: &[BoundaryCondition],
    controls: &SolverControls,
    n_steps: usize,
) -> Result<f64> {
    controls.validate()?;
    let mm = MaskedMetrics::build(mesh, mask)?;
    advance_with_metrics(gas, mesh, &mm, field, bcs, controls, n_steps)
}

/// As `advance`, reusing precomputed masked metrics.
#[allow(clippy::too_many_arguments)]
pub fn advance_with_metrics(
    gas: &GasModel,
    mesh: &Mesh,
    mm: &MaskedMetrics,
    field: &mut SolutionField,
    bcs: &[BoundaryCondition],
    controls: &SolverControls,
    n_steps: usize,
) -> Result<f64> {
    let n = mesh.tri.points.len();
    if field.z.len() != n {
        return Err(Error::Case(format!(
            "field has {} nodes, mesh has {n}",
            field.z.len()
        )));
    }
    let mut w = field.primitives(gas)?;
    let mut u = w
        .iter()
        .map(|wi| gas.primitive_to_conserved(wi))
        .collect::<Result<Vec<ConservedState>>>()?;
    let mut dt_last = 0.0;
    let mut first_norm = None;

    let eval = |wv: &[PrimitiveState]| -> Result<Vec<[f64; 4]>> {
        let (grads, phi) = if controls.order == 2 {
            let g = gradient::lsq_gradients(mesh, wv, &mm.alive, &mm.edge_active);
            let p = gradient::limiter_factors(
                mesh,
                wv,
                &g,
                &mm.alive,
                &mm.edge_active,
                controls.limiter,
            );
            (Some(g), Some(p))
        } else {
            (None, None)
        };
        assemble_residual(gas, mesh, mm, wv, grads.as_deref(), phi.as_deref(), bcs)
    };

    // One forward-Euler-type stage with positivity backtracking: the
    // (linear) update is rescaled, not reassembled.
    let try_stage = |u0: &[ConservedState],
                     r: &[[f64; 4]],
                     dt: &[f64],
                     dt_global: f64|
     -> Result<(Vec<ConservedState>, Vec<PrimitiveState>, f64)> {
        let node_dt = |i: usize| match controls.time_step_mode {
            TimeStepMode::Local => dt[i],
            TimeStepMode::Global => dt_global,
        };
        let mut scale = 1.0;
        for retry in 0..=10 {
            let mut valid = true;
            let mut bad_node = 0;
            let mut u1 = u0.to_vec();
            let mut w1 = vec![PrimitiveState::default(); n];
            for i in 0..n {
                if !mm.alive[i] {
                    continue;
                }
                let f = scale * node_dt(i) / mm.dual_area[i];
                u1[i] = ConservedState::from_array([
                    u0[i].rho - f * r[i][0],
                    u0[i].mom_x - f * r[i][1],
                    u0[i].mom_y - f * r[i][2],
                    u0[i].rho_E - f * r[i][3],
                ]);
                let wc = prim_raw(gas, &u1[i]);
                if !(wc.rho > 0.0 && wc.p > 0.0 && wc.p.is_finite()) {
                    valid = false;
                    bad_node = i;
                    break;
                }
                w1[i] = wc;
            }
            if valid {
                if retry > 2 {
                    eprintln!("warning: stage accepted after {retry} halvings");
                }
                return Ok((u1, w1, scale));
            }
            scale *= 0.5;
            if retry == 10 {
                return Err(Error::StepRejected {
                    node: bad_node,
                    retries: 10,
                });
            }
        }
        unreachable!()
    };

    for _ in 0..n_steps {
        let r1 = eval(&w)?;
        let (dt, dt_global) = compute_dt(gas, mesh, mm, &w, controls);
        if dt_global == 0.0 {
            // No alive nodes: nothing to march.
            break;
        }
        let (u1, w1, s1) = try_stage(&u, &r1, &dt, dt_global)?;
        let scale_used;
        if controls.order == 2 {
            // Two-stage SSP integrator: forward Euler alone is weakly
            // unstable with (near-)central linear reconstruction, and the
            // admissible-state set is convex, so the averaging stage keeps
            // positivity.
            let r2 = eval(&w1)?;
            let (u2, _w2, s2) = try_stage(&u1, &r2, &dt, dt_global)?;
            for i in 0..n {
                if !mm.alive[i] {
                    continue;
                }
                let a = u[i].as_array();
                let b = u2[i].as_array();
                u[i] = ConservedState::from_array([
                    0.5 * (a[0] + b[0]),
                    0.5 * (a[1] + b[1]),
                    0.5 * (a[2] + b[2]),
                    0.5 * (a[3] + b[3]),
                ]);
                w[i] = prim_raw(gas, &u[i]);
            }
            scale_used = s1.min(s2);
        } else {
            u = u1;
            w = w1;
            scale_used = s1;
        }

        let mut norm2 = 0.0;
        for i in 0..n {
            if mm.alive[i] {
                norm2 += (r1[i][0] / mm.dual_area[i]).powi(2);
            }
        }
        let norm = norm2.sqrt();
        field.residual_history.push(norm);
        field.iteration += 1;
        dt_last = scale_used * dt_global;
        let base = *first_norm.get_or_insert(norm);
        if base > 0.0 && norm <= controls.residual_tol * base {
            break;
        }
    }

    for i in 0..n {
        if mm.alive[i] {
            field.z[i] = gas.primitive_to_parameter(&w[i])?;
        }
    }
    Ok(dt_last)
}
