//! Benchmark case definitions: mesh recipes, boundary assignments, initial
//! shock geometry, solver settings, and the sectioned key-value files they
//! round-trip through.

pub mod exact;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::front::{EndpointKind, ShockFront};
use crate::gas::{GasModel, PrimitiveState};
use crate::geom::Vec2;
use crate::mesh::{generate, Mesh};
use crate::solver::q1d::Q1dGrid;
use crate::solver::{
    inflow_profile, BoundaryCondition, Limiter, SolverControls, TimeStepMode,
};

use exact::{area_ratio_of_mach, area_rule_mach, isentropic_state, Branch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GasSpec {
    pub gamma: f64,
}

impl Default for GasSpec {
    fn default() -> Self {
        GasSpec { gamma: 1.4 }
    }
}

/// Mesh recipe. `refine` nests the generated mesh that many times (4-to-1
/// uniform splits), so level k of a convergence family halves h k times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeshSpec {
    /// One-dimensional duct with area ratio 1 + (a_e - 1) x^2 on
    /// [x_left, 1], throat at x = 0; `cells` intervals.
    Duct {
        x_left: f64,
        area_exit_ratio: f64,
        cells: usize,
    },
    Annulus {
        r_in: f64,
        r_out: f64,
        n_in: usize,
        n_out: usize,
        n_interior: usize,
        seed: u64,
        #[serde(default)]
        refine: usize,
    },
    Channel {
        length: f64,
        height: f64,
        x_ramp: f64,
        ramp_deg: f64,
        n_bottom_pre: usize,
        n_bottom_ramp: usize,
        n_right: usize,
        n_top: usize,
        n_left: usize,
        n_interior: usize,
        seed: u64,
        #[serde(default)]
        refine: usize,
    },
    Forebody {
        r_body: f64,
        r_outer: f64,
        n_sym: usize,
        n_body: usize,
        n_out: usize,
        n_arc: usize,
        n_interior: usize,
        seed: u64,
        #[serde(default)]
        refine: usize,
    },
    /// Load `base.node` / `base.ele` / `base.poly`.
    TriangleFiles {
        base: String,
        #[serde(default)]
        refine: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BcSpec {
    SupersonicInflow { rho: f64, u: f64, v: f64, p: f64 },
    /// Supersonic inflow from a point source at the origin: purely radial
    /// velocity at Mach `mach` where the patch sits at radius `r_ref`,
    /// normalized by stagnation conditions, evaluated per quadrature point.
    RadialSourceInflow { r_ref: f64, mach: f64 },
    SupersonicOutflow,
    SubsonicOutflow { p_static: f64 },
    Wall,
    Symmetry,
}

/// Initial shock geometry. States at the points are seeded separately by
/// sampling a start field on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FrontSpec {
    /// Tracked shock position for one-dimensional duct cases.
    Point { x: f64 },
    /// Closed circle, discretized counterclockwise at the shock edge length.
    Circle {
        cx: f64,
        cy: f64,
        radius: f64,
        upstream_inside: bool,
    },
    /// Open circular arc from `theta0` to `theta1` (radians, traversed in
    /// that order), discretized at the shock edge length.
    Arc {
        cx: f64,
        cy: f64,
        radius: f64,
        theta0: f64,
        theta1: f64,
        upstream_left: bool,
        #[serde(default)]
        attach_start: Option<String>,
        #[serde(default)]
        attach_end: Option<String>,
    },
    Polyline {
        points: Vec<[f64; 2]>,
        closed: bool,
        upstream_left: bool,
        #[serde(default)]
        attach_start: Option<String>,
        #[serde(default)]
        attach_end: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockSpec {
    pub front: FrontSpec,
    /// Target shock edge length for discretization and redistribution.
    pub l_sh: f64,
    /// Side states are seeded by sampling at this many mean mesh widths
    /// along +/- n from each point.
    #[serde(default = "default_sample_offset")]
    pub sample_offset: f64,
}

fn default_sample_offset() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlsSpec {
    pub cfl: f64,
    /// 1 = piecewise constant, 2 = linear reconstruction.
    pub order: u8,
    /// "none" | "barth-jespersen" | "venkatakrishnan" | "van-albada"
    pub limiter: String,
    /// Pseudo-time step cap for plain captured runs.
    pub max_iters: usize,
    /// Relative residual drop treated as converged.
    pub residual_tol: f64,
    /// "local" | "global"
    pub time_step: String,
    /// Solver steps per tracking iteration.
    pub inner_steps: usize,
    /// Cap on tracking iterations.
    pub max_track_iters: usize,
    /// Front speed tolerance, relative to the case reference speed.
    pub w_tol_rel: f64,
    /// Alternative stop: mean front speed falls to this fraction of its
    /// running maximum.
    pub w_drop: f64,
    /// Extra tracking iterations after the front-speed stop, to settle the
    /// bulk field before error norms are taken.
    pub polish_iters: usize,
    /// First-order solver steps before any seeding run (impulsive starts).
    pub warmup_first_order: usize,
    /// Redistribute the front every this many tracking iterations.
    pub redistribute_every: usize,
}

impl Default for ControlsSpec {
    fn default() -> Self {
        ControlsSpec {
            cfl: 0.8,
            order: 2,
            limiter: "barth-jespersen".into(),
            max_iters: 20_000,
            residual_tol: 1e-10,
            time_step: "local".into(),
            inner_steps: 1,
            max_track_iters: 2000,
            w_tol_rel: 1e-6,
            w_drop: 1e-3,
            polish_iters: 400,
            warmup_first_order: 0,
            redistribute_every: 10,
        }
    }
}

impl ControlsSpec {
    pub fn solver_controls(&self) -> Result<SolverControls> {
        let limiter = match self.limiter.as_str() {
            "none" => Limiter::None,
            "barth-jespersen" => Limiter::BarthJespersen,
            "venkatakrishnan" => Limiter::Venkatakrishnan,
            "van-albada" => Limiter::VanAlbada,
            other => return Err(Error::Case(format!("unknown limiter '{other}'"))),
        };
        let time_step_mode = match self.time_step.as_str() {
            "local" => TimeStepMode::Local,
            "global" => TimeStepMode::Global,
            other => return Err(Error::Case(format!("unknown time step mode '{other}'"))),
        };
        let c = SolverControls {
            cfl: self.cfl,
            max_iters: self.max_iters,
            residual_tol: self.residual_tol,
            limiter,
            order: self.order,
            time_step_mode,
            dt_cap: None,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct OutputSpec {
    /// Run directory; defaults to runs/<case>_<mode> under the working
    /// directory when absent.
    pub dir: Option<String>,
    /// Write field snapshots (final state is always written).
    pub fields: bool,
}

/// Analytic reference attached to a case, when one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExactSpec {
    Q1dNozzle {
        area_exit_ratio: f64,
        p_out_ratio: f64,
        x_left: f64,
    },
    SourceFlow {
        r_in: f64,
        r_out: f64,
        mach_in: f64,
        p_out_ratio: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDefinition {
    pub name: String,
    #[serde(default)]
    pub gas: GasSpec,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub bc: BTreeMap<String, BcSpec>,
    pub shock: ShockSpec,
    #[serde(default)]
    pub solver: ControlsSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub exact: Option<ExactSpec>,
}

impl CaseDefinition {
    pub fn gas_model(&self) -> GasModel {
        GasModel { gamma: self.gas.gamma }
    }

    pub fn is_duct(&self) -> bool {
        matches!(self.mesh, MeshSpec::Duct { .. })
    }

    /// Basic internal consistency; mesh-independent.
    pub fn validate(&self) -> Result<()> {
        if !(self.shock.l_sh > 0.0) {
            return Err(Error::Case("shock edge length must be positive".into()));
        }
        self.solver.solver_controls()?;
        match (&self.mesh, &self.shock.front) {
            (MeshSpec::Duct { .. }, FrontSpec::Point { .. }) => {
                if !matches!(self.exact, Some(ExactSpec::Q1dNozzle { .. })) {
                    return Err(Error::Case(
                        "duct cases need the nozzle reference to define their end conditions"
                            .into(),
                    ));
                }
                if !self.bc.is_empty() {
                    return Err(Error::Case(
                        "duct cases carry no patch boundary conditions".into(),
                    ));
                }
            }
            (MeshSpec::Duct { .. }, _) => {
                return Err(Error::Case("duct cases track a point, not a polyline".into()))
            }
            (_, FrontSpec::Point { .. }) => {
                return Err(Error::Case("a tracked point needs a duct mesh".into()))
            }
            _ => {}
        }
        if let MeshSpec::Duct { x_left, cells, .. } = self.mesh {
            if !(x_left > 0.0 && x_left < 1.0) {
                return Err(Error::Case(format!("duct x_left {x_left} outside (0, 1)")));
            }
            if cells < 8 {
                return Err(Error::Case("duct needs at least 8 cells".into()));
            }
            if let FrontSpec::Point { x } = self.shock.front {
                if !(x > x_left && x < 1.0) {
                    return Err(Error::Case(format!(
                        "initial shock position {x} outside the duct ({x_left}, 1)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The case derived by k nested refinements (duct cell counts double per
    /// level); the shock edge length halves with the mesh width.
    pub fn at_level(&self, level: usize) -> CaseDefinition {
        let mut c = self.clone();
        if level == 0 {
            return c;
        }
        match &mut c.mesh {
            MeshSpec::Duct { cells, .. } => *cells <<= level,
            MeshSpec::Annulus { refine, .. }
            | MeshSpec::Channel { refine, .. }
            | MeshSpec::Forebody { refine, .. }
            | MeshSpec::TriangleFiles { refine, .. } => *refine += level,
        }
        c.shock.l_sh /= (1u64 << level) as f64;
        c.name = format!("{}_l{level}", self.name);
        c
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        let (mut tri, refine) = match &self.mesh {
            MeshSpec::Duct { .. } => {
                return Err(Error::Case(format!(
                    "case '{}' is one-dimensional and has no triangulation",
                    self.name
                )))
            }
            MeshSpec::Annulus { r_in, r_out, n_in, n_out, n_interior, seed, refine } => (
                generate::unstructured_annulus(*r_in, *r_out, *n_in, *n_out, *n_interior, *seed)?,
                *refine,
            ),
            MeshSpec::Channel {
                length,
                height,
                x_ramp,
                ramp_deg,
                n_bottom_pre,
                n_bottom_ramp,
                n_right,
                n_top,
                n_left,
                n_interior,
                seed,
                refine,
            } => (
                generate::generate_channel(
                    *length,
                    *height,
                    *x_ramp,
                    *ramp_deg,
                    *n_bottom_pre,
                    *n_bottom_ramp,
                    *n_right,
                    *n_top,
                    *n_left,
                    *n_interior,
                    *seed,
                )?,
                *refine,
            ),
            MeshSpec::Forebody {
                r_body,
                r_outer,
                n_sym,
                n_body,
                n_out,
                n_arc,
                n_interior,
                seed,
                refine,
            } => (
                generate::generate_cylinder_forebody(
                    *r_body, *r_outer, *n_sym, *n_body, *n_out, *n_arc, *n_interior, *seed,
                )?,
                *refine,
            ),
            MeshSpec::TriangleFiles { base, refine } => {
                let node = format!("{base}.node");
                let ele = format!("{base}.ele");
                let poly = format!("{base}.poly");
                let poly_path = Path::new(&poly);
                (
                    crate::mesh::io::load_triangle_format(
                        Path::new(&node),
                        Path::new(&ele),
                        poly_path.is_file().then_some(poly_path),
                    )?,
                    *refine,
                )
            }
        };
        for _ in 0..refine {
            tri = generate::refine(&tri)?;
        }
        Mesh::build(tri)
    }

    /// Duct grid (uniform nodes) and its area function.
    pub fn duct_grid(&self) -> Result<(Q1dGrid, Arc<dyn Fn(f64) -> f64 + Send + Sync>)> {
        let MeshSpec::Duct { x_left, area_exit_ratio, cells } = self.mesh else {
            return Err(Error::Case(format!("case '{}' is not a duct", self.name)));
        };
        let n = cells + 1;
        let x: Vec<f64> = (0..n)
            .map(|i| x_left + (1.0 - x_left) * i as f64 / cells as f64)
            .collect();
        let area: Arc<dyn Fn(f64) -> f64 + Send + Sync> =
            Arc::new(move |xi: f64| 1.0 + (area_exit_ratio - 1.0) * xi * xi);
        Ok((Q1dGrid::new(x, &*area)?, area))
    }

    /// One condition per mesh patch, in patch order.
    pub fn build_bcs(&self, mesh: &Mesh) -> Result<Vec<BoundaryCondition>> {
        for name in self.bc.keys() {
            if mesh.patch_id(name).is_none() {
                return Err(Error::Case(format!(
                    "boundary condition for unknown patch '{name}'"
                )));
            }
        }
        mesh.tri
            .patches
            .iter()
            .map(|p| {
                let spec = self.bc.get(&p.name).ok_or_else(|| {
                    Error::Case(format!("no boundary condition for patch '{}'", p.name))
                })?;
                Ok(match spec {
                    BcSpec::SupersonicInflow { rho, u, v, p } => {
                        BoundaryCondition::SupersonicInflow(PrimitiveState::new(*rho, *u, *v, *p))
                    }
                    BcSpec::RadialSourceInflow { r_ref, mach } => {
                        let gamma = self.gas.gamma;
                        let r_star = r_ref / area_ratio_of_mach(*mach, gamma);
                        let state = move |x: Vec2| {
                            let r = x.norm();
                            let m = area_rule_mach(r / r_star, Branch::Supersonic, gamma)
                                .expect("inflow radius maps to a supersonic Mach");
                            isentropic_state(m, 1.0, 1.0, x / r, gamma)
                        };
                        BoundaryCondition::SupersonicInflowProfile(Arc::new(inflow_profile(
                            mesh, state,
                        )))
                    }
                    BcSpec::SupersonicOutflow => BoundaryCondition::SupersonicOutflow,
                    BcSpec::SubsonicOutflow { p_static } => {
                        BoundaryCondition::SubsonicOutflow { p_static: *p_static }
                    }
                    BcSpec::Wall => BoundaryCondition::InviscidWall,
                    BcSpec::Symmetry => BoundaryCondition::Symmetry,
                })
            })
            .collect()
    }

    /// Initial front polyline with geometric normals; states at the points
    /// are not yet seeded. One-dimensional cases have no polyline.
    pub fn initial_front(&self, mesh: &Mesh) -> Result<ShockFront> {
        let spec = &self.shock;
        let mut front = match &spec.front {
            FrontSpec::Point { .. } => {
                return Err(Error::Case(format!(
                    "case '{}' tracks a point, not a polyline",
                    self.name
                )))
            }
            FrontSpec::Circle { cx, cy, radius, upstream_inside } => {
                let n = ((2.0 * std::f64::consts::PI * radius / spec.l_sh).round() as usize).max(8);
                let pts: Vec<Vec2> = (0..n)
                    .map(|k| {
                        let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                        Vec2::new(cx + radius * th.cos(), cy + radius * th.sin())
                    })
                    .collect();
                // Counterclockwise traversal puts the enclosed region on the
                // left of the tangent.
                ShockFront::new(pts, true, *upstream_inside, spec.l_sh)?
            }
            FrontSpec::Arc {
                cx,
                cy,
                radius,
                theta0,
                theta1,
                upstream_left,
                attach_start,
                attach_end,
            } => {
                let sweep = (theta1 - theta0).abs();
                let n = ((sweep * radius / spec.l_sh).round() as usize).max(4) + 1;
                let pts: Vec<Vec2> = (0..n)
                    .map(|k| {
                        let th = theta0 + (theta1 - theta0) * k as f64 / (n - 1) as f64;
                        Vec2::new(cx + radius * th.cos(), cy + radius * th.sin())
                    })
                    .collect();
                let mut f = ShockFront::new(pts, false, *upstream_left, spec.l_sh)?;
                f.endpoints = [
                    attachment(mesh, attach_start.as_deref())?,
                    attachment(mesh, attach_end.as_deref())?,
                ];
                f
            }
            FrontSpec::Polyline { points, closed, upstream_left, attach_start, attach_end } => {
                let pts: Vec<Vec2> = points.iter().map(|p| Vec2::new(p[0], p[1])).collect();
                let mut f = ShockFront::new(pts, *closed, *upstream_left, spec.l_sh)?;
                if !closed {
                    f.endpoints = [
                        attachment(mesh, attach_start.as_deref())?,
                        attachment(mesh, attach_end.as_deref())?,
                    ];
                }
                f
            }
        };
        front.attach_endpoints_to_boundary(mesh)?;
        front.redistribute(spec.l_sh)?;
        front.compute_geometric_normals();
        let bb =
            crate::geom::Aabb::of_points(mesh.tri.points.iter().copied()).inflate(mesh.geo.h_mean);
        for p in &front.points {
            if p.x.x < bb.min.x || p.x.x > bb.max.x || p.x.y < bb.min.y || p.x.y > bb.max.y {
                return Err(Error::Front(format!(
                    "initial front point ({}, {}) lies outside the domain",
                    p.x.x, p.x.y
                )));
            }
        }
        Ok(front)
    }

    /// Velocity scale used for relative front-speed tolerances.
    pub fn reference_speed(&self) -> f64 {
        let gamma = self.gas.gamma;
        match &self.exact {
            Some(ExactSpec::Q1dNozzle { area_exit_ratio, x_left, .. }) => {
                let a = 1.0 + (area_exit_ratio - 1.0) * x_left * x_left;
                if let Ok(m) = area_rule_mach(a, Branch::Supersonic, gamma) {
                    let s = isentropic_state(m, 1.0, 1.0, Vec2::new(1.0, 0.0), gamma);
                    return s.velocity().norm();
                }
            }
            Some(ExactSpec::SourceFlow { r_in: _, mach_in, .. }) => {
                let s = isentropic_state(*mach_in, 1.0, 1.0, Vec2::new(1.0, 0.0), gamma);
                return s.velocity().norm();
            }
            None => {}
        }
        for bc in self.bc.values() {
            if let BcSpec::SupersonicInflow { u, v, .. } = bc {
                return Vec2::new(*u, *v).norm();
            }
        }
        1.0
    }

    pub fn exact_q1d(&self) -> Result<exact::Q1dExact> {
        match &self.exact {
            Some(ExactSpec::Q1dNozzle { area_exit_ratio, p_out_ratio, x_left }) => {
                exact::q1d_exact(*area_exit_ratio, *p_out_ratio, self.gas.gamma, *x_left)
            }
            _ => Err(Error::Case(format!("case '{}' has no nozzle reference", self.name))),
        }
    }

    pub fn exact_source(&self) -> Result<exact::SourceFlowExact> {
        match &self.exact {
            Some(ExactSpec::SourceFlow { r_in, r_out, mach_in, p_out_ratio }) => {
                exact::source_flow_exact(*r_in, *r_out, *mach_in, *p_out_ratio, self.gas.gamma)
            }
            _ => Err(Error::Case(format!("case '{}' has no source-flow reference", self.name))),
        }
    }
}

fn attachment(mesh: &Mesh, patch: Option<&str>) -> Result<EndpointKind> {
    match patch {
        None => Ok(EndpointKind::Free),
        Some(name) => match mesh.patch_id(name) {
            Some(id) => Ok(EndpointKind::Attached { patch: id }),
            None => Err(Error::Case(format!("attachment to unknown patch '{name}'"))),
        },
    }
}

/// Seeds side states at every front point by sampling `field` at
/// `offset` along the normal on each side, then runs the flow-aware
/// tangent pass. `field(x)` must be defined on both sides of the front.
pub fn seed_front_states(
    front: &mut ShockFront,
    gas: &GasModel,
    offset: f64,
    field: &mut dyn FnMut(Vec2) -> Result<PrimitiveState>,
) -> Result<()> {
    front.compute_geometric_normals();
    for i in 0..front.points.len() {
        let (x, n) = (front.points[i].x, front.points[i].n);
        let up = field(x + n * offset)?;
        let down = field(x - n * offset)?;
        front.points[i].z_up = gas.primitive_to_parameter(&up)?;
        front.points[i].z_down = gas.primitive_to_parameter(&down)?;
        front.points[i].w = 0.0;
    }
    front.compute_tangents_normals(gas)
}

pub fn load_case_file(path: &Path) -> Result<CaseDefinition> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Case(format!("cannot read case file {}: {e}", path.display())))?;
    let case: CaseDefinition = toml::from_str(&text)
        .map_err(|e| Error::Case(format!("case file {}: {e}", path.display())))?;
    case.validate()?;
    Ok(case)
}

pub fn save_case_file(case: &CaseDefinition, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(case)
        .map_err(|e| Error::Case(format!("cannot serialize case '{}': {e}", case.name)))?;
    std::fs::write(path, text)
        .map_err(|e| Error::Case(format!("cannot write case file {}: {e}", path.display())))
}

/// Finds a case by name among the built-ins, or loads a file if the name
/// points at one.
pub fn resolve_case(name_or_path: &str) -> Result<CaseDefinition> {
    let p = Path::new(name_or_path);
    if p.is_file() {
        return load_case_file(p);
    }
    builtin_cases()
        .into_iter()
        .find(|c| c.name == name_or_path)
        .ok_or_else(|| {
            let names: Vec<String> = builtin_cases().into_iter().map(|c| c.name).collect();
            Error::Case(format!(
                "'{name_or_path}' is neither a case file nor a built-in case (built-ins: {})",
                names.join(", ")
            ))
        })
}

/// The benchmark family: transonic nozzle, cylindrical source flow (three
/// nested levels), hypersonic blunt body, and the shock-reflection channel.
pub fn builtin_cases() -> Vec<CaseDefinition> {
    let mut cases = Vec::new();

    // Shocked transonic nozzle; the outlet pressure puts the exact shock at
    // x = 0.75.
    cases.push(CaseDefinition {
        name: "q1d_nozzle".into(),
        gas: GasSpec::default(),
        mesh: MeshSpec::Duct { x_left: 0.05, area_exit_ratio: 2.0, cells: 800 },
        bc: BTreeMap::new(),
        shock: ShockSpec {
            front: FrontSpec::Point { x: 0.7 },
            l_sh: 0.01,
            sample_offset: 1.5,
        },
        solver: ControlsSpec {
            max_iters: 40_000,
            max_track_iters: 2000,
            polish_iters: 2000,
            ..ControlsSpec::default()
        },
        output: OutputSpec::default(),
        exact: Some(ExactSpec::Q1dNozzle {
            area_exit_ratio: 2.0,
            p_out_ratio: 0.6773482639996156,
            x_left: 0.05,
        }),
    });

    // Cylindrical source flow through an annulus, standing shock at
    // r = 1.5 r_in.
    let source = CaseDefinition {
        name: "planar_source".into(),
        gas: GasSpec::default(),
        mesh: MeshSpec::Annulus {
            r_in: 1.0,
            r_out: 2.0,
            n_in: 126,
            n_out: 250,
            n_interior: 6540,
            seed: 42,
            refine: 0,
        },
        bc: BTreeMap::from([
            ("inflow".to_string(), BcSpec::RadialSourceInflow { r_ref: 1.0, mach: 2.0 }),
            ("outflow".to_string(), BcSpec::SubsonicOutflow { p_static: 0.47 }),
        ]),
        shock: ShockSpec {
            front: FrontSpec::Circle { cx: 0.0, cy: 0.0, radius: 1.4, upstream_inside: true },
            l_sh: 0.05,
            sample_offset: 1.5,
        },
        solver: ControlsSpec {
            max_track_iters: 2000,
            polish_iters: 600,
            ..ControlsSpec::default()
        },
        output: OutputSpec::default(),
        exact: Some(ExactSpec::SourceFlow {
            r_in: 1.0,
            r_out: 2.0,
            mach_in: 2.0,
            p_out_ratio: 0.47,
        }),
    };
    cases.push(source.at_level(1));
    cases.push(source.at_level(2));
    cases.push(source);

    // Mach-20 cylinder forebody; free stream normalized to rho = p = 1.
    cases.push(CaseDefinition {
        name: "blunt_body".into(),
        gas: GasSpec::default(),
        mesh: MeshSpec::Forebody {
            r_body: 1.0,
            r_outer: 3.0,
            n_sym: 20,
            n_body: 60,
            n_out: 16,
            n_arc: 60,
            n_interior: 652,
            seed: 7,
            refine: 0,
        },
        bc: BTreeMap::from([
            (
                "inflow".to_string(),
                BcSpec::SupersonicInflow {
                    rho: 1.0,
                    u: 23.664319132398465,
                    v: 0.0,
                    p: 1.0,
                },
            ),
            ("outflow".to_string(), BcSpec::SupersonicOutflow),
            ("wall".to_string(), BcSpec::Wall),
            ("symmetry".to_string(), BcSpec::Symmetry),
        ]),
        shock: ShockSpec {
            front: FrontSpec::Arc {
                cx: 0.0,
                cy: 0.0,
                radius: 1.5,
                theta0: 3.141592653589793,
                theta1: 1.5707963267948966,
                upstream_left: true,
                attach_start: Some("symmetry".into()),
                attach_end: Some("outflow".into()),
            },
            l_sh: 0.09,
            sample_offset: 1.5,
        },
        solver: ControlsSpec {
            cfl: 0.5,
            warmup_first_order: 600,
            max_track_iters: 2000,
            polish_iters: 600,
            ..ControlsSpec::default()
        },
        output: OutputSpec::default(),
        exact: None,
    });

    // Mach-2 channel with a 14-degree compression ramp: the reflection at
    // the straight wall is irregular, with a tracked stem-plus-reflected
    // front and the incident shock captured in the bulk field.
    cases.push(CaseDefinition {
        name: "mach_reflection".into(),
        gas: GasSpec::default(),
        mesh: MeshSpec::Channel {
            length: 2.2,
            height: 1.0,
            x_ramp: 0.5,
            ramp_deg: 14.0,
            n_bottom_pre: 37,
            n_bottom_ramp: 131,
            n_right: 43,
            n_top: 164,
            n_left: 75,
            n_interior: 14383,
            seed: 11,
            refine: 0,
        },
        bc: BTreeMap::from([
            (
                "inflow".to_string(),
                BcSpec::SupersonicInflow { rho: 1.0, u: 2.3664319132398464, v: 0.0, p: 1.0 },
            ),
            ("outflow".to_string(), BcSpec::SupersonicOutflow),
            ("wall_bottom".to_string(), BcSpec::Wall),
            ("wall_top".to_string(), BcSpec::Wall),
        ]),
        shock: ShockSpec {
            front: FrontSpec::Polyline {
                points: vec![
                    [1.53, 1.0],
                    [1.54, 0.92],
                    [1.55, 0.85],
                    [1.75, 0.72],
                    [1.95, 0.58],
                ],
                closed: false,
                upstream_left: false,
                attach_start: Some("wall_top".into()),
                attach_end: None,
            },
            l_sh: 0.016,
            sample_offset: 1.5,
        },
        solver: ControlsSpec {
            cfl: 0.6,
            max_track_iters: 2000,
            polish_iters: 400,
            ..ControlsSpec::default()
        },
        output: OutputSpec::default(),
        exact: None,
    });

    cases
}
