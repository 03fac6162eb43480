//! Front displacement, detection and re-interpolation of grid nodes the
//! moving front sweeps over, and the convergence monitor.

use crate::cavity::{self, CavityDecomposition, Side};
use crate::error::{Error, Result};
use crate::front::{project_to_patch, EndpointKind, ShockFront};
use crate::gas::ParameterState;
use crate::geom::{self, Vec2};
use crate::mesh::Mesh;
use crate::transfer::{self, Grad4};

/// The quadrilateral swept by one front edge over a step: old endpoints
/// followed by the new ones in reverse, giving a simple polygon for small
/// displacements.
#[derive(Debug, Clone, Copy)]
pub struct SweptQuad {
    pub verts: [Vec2; 4],
}

impl SweptQuad {
    pub fn new(p1_old: Vec2, p2_old: Vec2, p2_new: Vec2, p1_new: Vec2) -> Self {
        SweptQuad {
            verts: [p1_old, p2_old, p2_new, p1_new],
        }
    }

    /// Zero-sweep quads have no interior.
    pub fn is_degenerate(&self, tol: f64) -> bool {
        let [a, b, c, d] = self.verts;
        let area = 0.5
            * ((b - a).cross(c - a) + (c - a).cross(d - a))
                .abs();
        area <= tol * tol
    }

    pub fn contains_strict(&self, p: Vec2, tol: f64) -> bool {
        !self.is_degenerate(tol) && geom::point_strictly_in_quad(p, &self.verts, tol)
    }
}

/// Moves every point by its normal displacement speed, re-projects attached
/// endpoints onto their boundary patch, and re-checks simplicity.
pub fn displace(front: &mut ShockFront, mesh: &Mesh, dt: f64) -> Result<()> {
    for p in &mut front.points {
        p.x = p.x + p.n * (p.w * dt);
    }
    if !front.closed {
        let last = front.points.len() - 1;
        for (slot, idx) in [(0usize, 0usize), (1, last)] {
            if let EndpointKind::Attached { patch } = front.endpoints[slot] {
                front.points[idx].x = project_to_patch(mesh, patch, front.points[idx].x)?;
            }
        }
    }
    front.validate_geometry().map_err(|e| {
        Error::Front(format!(
            "front self-intersects after displacement ({e}); reduce the time step"
        ))
    })
}

/// Builds the per-edge swept quads between two snapshots of the same front.
pub fn swept_quads(before: &ShockFront, after: &ShockFront) -> Result<Vec<SweptQuad>> {
    if before.len() != after.len() || before.closed != after.closed {
        return Err(Error::Front(
            "swept-quad detection needs matching front snapshots".into(),
        ));
    }
    let n = before.len();
    Ok((0..before.n_segments())
        .map(|k| {
            let k2 = (k + 1) % n;
            SweptQuad::new(
                before.points[k].x,
                before.points[k2].x,
                after.points[k2].x,
                after.points[k].x,
            )
        })
        .collect())
}

/// Nodes the front swept over in one step, with the side they came from.
/// Each node is tested against the swept quad of its nearest edge at the
/// old position, widened to the two neighbor quads to cover concave kinks.
pub fn detect_crossed_nodes(
    before: &ShockFront,
    after: &ShockFront,
    mesh: &Mesh,
) -> Result<Vec<(usize, Side)>> {
    let quads = swept_quads(before, after)?;
    let tol = 1e-12 * mesh.geo.h_mean.max(1.0);
    let mut bb = geom::Aabb::empty();
    for q in &quads {
        for &v in &q.verts {
            bb.include(v);
        }
    }
    let bb = bb.inflate(tol);
    let n_seg = quads.len() as isize;
    let mut crossed = Vec::new();
    for (i, &p) in mesh.tri.points.iter().enumerate() {
        if p.x < bb.min.x || p.x > bb.max.x || p.y < bb.min.y || p.y > bb.max.y {
            continue;
        }
        let mut nearest = (f64::INFINITY, 0isize);
        for (k, _) in quads.iter().enumerate() {
            let (a, b) = before.segment(k);
            let (_, cp) = geom::closest_point_on_segment(p, a, b);
            let d2 = (p - cp).norm2();
            if d2 < nearest.0 {
                nearest = (d2, k as isize);
            }
        }
        let inside = [-1isize, 0, 1].iter().any(|&off| {
            let k = nearest.1 + off;
            let k = if before.closed {
                k.rem_euclid(n_seg)
            } else if (0..n_seg).contains(&k) {
                k
            } else {
                return false;
            };
            quads[k as usize].contains_strict(p, tol)
        });
        if inside {
            crossed.push((i, cavity::side_of_shock(before, p)));
        }
    }
    Ok(crossed)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReinterpStats {
    pub into_downstream: usize,
    pub into_upstream: usize,
    pub fallbacks: usize,
}

/// Rebuilds the state at swept nodes. A node the front passed toward
/// upstream (it came from the upstream side) now sits downstream: it takes
/// the projection/auxiliary-triangle blend from the new front and the old
/// inner downstream rim. A node now upstream takes a normal-ray Taylor
/// extension from the old upstream rim.
pub fn reinterpolate_crossed_nodes(
    crossed: &[(usize, Side)],
    front_after: &ShockFront,
    mesh: &Mesh,
    cav_old: &CavityDecomposition,
    grads: &[Grad4],
    z: &mut [ParameterState],
) -> Result<ReinterpStats> {
    let pts = &mesh.tri.points;
    let inner_nodes = CavityDecomposition::rim_nodes(&cav_old.gamma_hat_down);
    let mut stats = ReinterpStats::default();
    let mut updates = Vec::with_capacity(crossed.len());
    for &(i, from) in crossed {
        let xi = pts[i];
        match from {
            Side::Upstream => {
                let (v, fb) = transfer::downstream_value_at(
                    front_after,
                    pts,
                    &inner_nodes,
                    grads,
                    z,
                    xi,
                )?;
                if fb {
                    stats.fallbacks += 1;
                }
                stats.into_downstream += 1;
                updates.push((i, v));
            }
            Side::Downstream => {
                let proj = transfer::project_to_front(front_after, xi);
                let hit = transfer::trace_ray_to_rim(
                    xi,
                    proj.normal,
                    &cav_old.gamma_tilde_up,
                    pts,
                )?;
                if hit.fallback {
                    stats.fallbacks += 1;
                }
                let z0 = transfer::interpolate_state_at_hit(z, &hit);
                let g0 = transfer::interpolate_grad_at_hit(grads, &hit);
                let mut out = z0.as_array();
                let d = xi - hit.point;
                for k in 0..4 {
                    out[k] += g0[k].dot(d);
                }
                stats.into_upstream += 1;
                updates.push((i, ParameterState::from_array(out)));
            }
        }
    }
    for (i, v) in updates {
        z[i] = v;
    }
    Ok(stats)
}

/// Arithmetic mean of the absolute displacement speeds; the steady-state
/// monitor.
pub fn mean_shock_speed(front: &ShockFront) -> f64 {
    if front.points.is_empty() {
        return 0.0;
    }
    front.points.iter().map(|p| p.w.abs()).sum::<f64>() / front.points.len() as f64
}
