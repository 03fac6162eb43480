//! Gradient reconstruction and the Taylor-expansion transfer operators that
//! couple the hole rims with the tracked front: upstream state extrapolation
//! to the shock, downstream acoustic-invariant extraction, and the second
//! transfer rebuilding downstream rim values after the jump solve.

use crate::cavity::CavityDecomposition;
use crate::cavity::SurrogateEdge;
use crate::error::{Error, Result};
use crate::front::ShockFront;
use crate::gas::{GasModel, ParameterState};
use crate::geom::{self, Vec2};
use crate::mesh::Mesh;
use crate::rh;

/// Per-component spatial gradient of the 4-entry parameter vector.
pub type Grad4 = [Vec2; 4];

/// Exact gradient of a linear field over one triangle:
/// sum of vertex values times inward scaled edge normals over twice the area.
pub fn cell_gradient(mesh: &Mesh, z: &[ParameterState], cell: usize) -> Result<Grad4> {
    let (area, normals) = mesh.tri.cell_geometry(cell)?;
    let tri = mesh.tri.triangles[cell];
    let mut g = [Vec2::ZERO; 4];
    for k in 0..3 {
        let zv = z[tri[k]].as_array();
        for c in 0..4 {
            g[c] = g[c] + normals[k] * zv[c];
        }
    }
    for gc in &mut g {
        *gc = *gc / (2.0 * area);
    }
    Ok(g)
}

/// Area-weighted average of incident cell gradients, restricted to active
/// cells so hole values never pollute rim gradients.
pub fn nodal_gradient(
    mesh: &Mesh,
    z: &[ParameterState],
    node: usize,
    cell_mask: Option<&[bool]>,
) -> Result<Grad4> {
    let mut g = [Vec2::ZERO; 4];
    let mut area_sum = 0.0;
    for &c in mesh.conn.node_cells.row(node) {
        if let Some(mask) = cell_mask {
            if !mask[c] {
                continue;
            }
        }
        let gc = cell_gradient(mesh, z, c)?;
        let a = mesh.geo.tri_area[c];
        for k in 0..4 {
            g[k] = g[k] + gc[k] * a;
        }
        area_sum += a;
    }
    if area_sum <= 0.0 {
        return Err(Error::Transfer(format!(
            "node {node} has no active incident cell"
        )));
    }
    for gc in &mut g {
        *gc = *gc / area_sum;
    }
    Ok(g)
}

/// Bulk nodal gradients; nodes with no active incident cell get a zero
/// gradient (they carry no state and are never read by the transfers).
pub fn nodal_gradients(
    mesh: &Mesh,
    z: &[ParameterState],
    cell_mask: Option<&[bool]>,
) -> Vec<Grad4> {
    crate::par::map_indexed(mesh.tri.points.len(), |i| {
        nodal_gradient(mesh, z, i, cell_mask).unwrap_or([Vec2::ZERO; 4])
    })
}

/// Where a shock-normal ray met a surrogate rim. `w = [w1, w2]` are the
/// normalized distances of the hit to the first and second edge node; the
/// interpolation convention crosses them (near node gets the far weight).
#[derive(Debug, Clone, Copy)]
pub struct TraceHit {
    pub edge: usize,
    pub point: Vec2,
    pub t: f64,
    pub nodes: [usize; 2],
    pub w: [f64; 2],
    /// True when no ray intersection existed and the closest rim point was
    /// used instead (front near a physical boundary).
    pub fallback: bool,
}

fn hit_on(rim_edge: &SurrogateEdge, edge_idx: usize, pts: &[Vec2], t: f64, fallback: bool) -> TraceHit {
    // Snap endpoint grazes so weights are exactly {0,1}; ownership of a
    // shared endpoint is deterministic because edges are scanned in rim
    // order and the first (smallest-index) edge wins ties.
    let t = if t < 1e-12 {
        0.0
    } else if t > 1.0 - 1e-12 {
        1.0
    } else {
        t
    };
    let [a, b] = rim_edge.nodes;
    let p = pts[a].lerp(pts[b], t);
    TraceHit {
        edge: edge_idx,
        point: p,
        t,
        nodes: [a, b],
        w: [t, 1.0 - t],
        fallback,
    }
}

/// First intersection of the ray from shock point `i` along `dir` with the
/// rim. Falls back to the closest rim point when the ray misses entirely.
pub fn trace_to_surrogate(
    front: &ShockFront,
    i: usize,
    rim: &[SurrogateEdge],
    pts: &[Vec2],
    dir: Vec2,
) -> Result<TraceHit> {
    trace_ray_to_rim(front.points[i].x, dir, rim, pts)
}

/// Ray-versus-rim trace from an arbitrary origin.
pub fn trace_ray_to_rim(
    origin: Vec2,
    dir: Vec2,
    rim: &[SurrogateEdge],
    pts: &[Vec2],
) -> Result<TraceHit> {
    if rim.is_empty() {
        return Err(Error::Transfer("empty surrogate rim".into()));
    }
    let mut best: Option<(f64, usize, f64)> = None;
    for (e, f) in rim.iter().enumerate() {
        let (a, b) = (pts[f.nodes[0]], pts[f.nodes[1]]);
        if let Some((t_ray, s)) = geom::ray_segment_intersection(origin, dir, a, b) {
            if t_ray >= 0.0 && best.map_or(true, |(bt, _, _)| t_ray < bt) {
                best = Some((t_ray, e, s));
            }
        }
    }
    if let Some((_, e, s)) = best {
        return Ok(hit_on(&rim[e], e, pts, s, false));
    }
    // Closest-point fallback.
    let mut cb = (f64::INFINITY, 0usize, 0.0f64);
    for (e, f) in rim.iter().enumerate() {
        let (a, b) = (pts[f.nodes[0]], pts[f.nodes[1]]);
        let (s, cp) = geom::closest_point_on_segment(origin, a, b);
        let d2 = (origin - cp).norm2();
        if d2 < cb.0 {
            cb = (d2, e, s);
        }
    }
    Ok(hit_on(&rim[cb.1], cb.1, pts, cb.2, true))
}

/// Linear edge interpolation with crossed weights: value at the hit is the
/// first node's value times w2 plus the second node's value times w1.
pub fn interpolate_state_at_hit(z: &[ParameterState], hit: &TraceHit) -> ParameterState {
    let a = z[hit.nodes[0]].as_array();
    let b = z[hit.nodes[1]].as_array();
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[k] = a[k] * hit.w[1] + b[k] * hit.w[0];
    }
    ParameterState::from_array(out)
}

/// As `interpolate_state_at_hit`, for gradients.
pub fn interpolate_grad_at_hit(grads: &[Grad4], hit: &TraceHit) -> Grad4 {
    let a = grads[hit.nodes[0]];
    let b = grads[hit.nodes[1]];
    let mut out = [Vec2::ZERO; 4];
    for k in 0..4 {
        out[k] = a[k] * hit.w[1] + b[k] * hit.w[0];
    }
    out
}

fn taylor(z0: ParameterState, g: &Grad4, d: Vec2) -> ParameterState {
    let mut out = z0.as_array();
    for k in 0..4 {
        out[k] += g[k].dot(d);
    }
    ParameterState::from_array(out)
}

/// Upstream state at shock point `i`: trace along +n to the upstream rim,
/// then extend the rim value by its gradient (first-order Taylor, second
/// order accurate in the gap width).
pub fn extrapolate_upstream(
    front: &ShockFront,
    i: usize,
    z: &[ParameterState],
    grads: &[Grad4],
    rim: &[SurrogateEdge],
    pts: &[Vec2],
) -> Result<(ParameterState, TraceHit)> {
    let n = front.points[i].n;
    let hit = trace_to_surrogate(front, i, rim, pts, n)?;
    let z_tilde = interpolate_state_at_hit(z, &hit);
    let g_tilde = interpolate_grad_at_hit(grads, &hit);
    let zv = taylor(z_tilde, &g_tilde, front.points[i].x - hit.point);
    Ok((zv, hit))
}

/// Downstream acoustic invariant at shock point `i`: extrapolate the full
/// state from the downstream rim (trace along -n), then evaluate
/// a + (gamma-1)/2 u.n with the current shock normal.
pub fn extract_downstream_riemann(
    gas: &GasModel,
    front: &ShockFront,
    i: usize,
    z: &[ParameterState],
    grads: &[Grad4],
    rim: &[SurrogateEdge],
    pts: &[Vec2],
) -> Result<(f64, TraceHit)> {
    let n = front.points[i].n;
    let hit = trace_to_surrogate(front, i, rim, pts, n * -1.0)?;
    let z_tilde = interpolate_state_at_hit(z, &hit);
    let g_tilde = interpolate_grad_at_hit(grads, &hit);
    let zv = taylor(z_tilde, &g_tilde, front.points[i].x - hit.point);
    let w = gas.parameter_to_primitive(&zv)?;
    Ok((rh::riemann_closure(gas, &w, n), hit))
}

/// Projection of a point onto the front along the distance-weighted average
/// of the nearest edge's endpoint normals.
#[derive(Debug, Clone, Copy)]
pub struct FrontProjection {
    pub edge: usize,
    pub s: f64,
    pub point: Vec2,
    /// The averaged normal used for the projection direction.
    pub normal: Vec2,
}

pub fn project_to_front(front: &ShockFront, p: Vec2) -> FrontProjection {
    let ns = front.n_segments();
    let mut best = (f64::INFINITY, 0usize, 0.0f64);
    for k in 0..ns {
        let (a, b) = front.segment(k);
        let (s, cp) = geom::closest_point_on_segment(p, a, b);
        let d2 = (p - cp).norm2();
        if d2 < best.0 {
            best = (d2, k, s);
        }
    }
    let (_, k, s0) = best;
    let (a, b) = front.segment(k);
    let n = front.points.len();
    let (n1, n2) = (front.points[k].n, front.points[(k + 1) % n].n);
    // Distances to the endpoints, cross-weighted so the near normal
    // dominates.
    let d1 = p.dist(a);
    let d2 = p.dist(b);
    let nbar = if d1 + d2 > 0.0 {
        let w1 = d1 / (d1 + d2);
        let w2 = d2 / (d1 + d2);
        (n1 * w2 + n2 * w1).normalized()
    } else {
        (n1 + n2).normalized()
    };
    // Intersect the line through p along nbar with the edge's line; fall
    // back to the closest-point parameter if near-parallel, clamp to the
    // segment.
    let e = b - a;
    let det = e.cross(nbar);
    let s = if det.abs() > 1e-14 * e.norm() {
        ((p - a).cross(nbar) / det).clamp(0.0, 1.0)
    } else {
        s0
    };
    FrontProjection {
        edge: k,
        s,
        point: a.lerp(b, s),
        normal: nbar,
    }
}

/// Downstream-side value at an arbitrary point: shock state interpolated at
/// the point's front projection, blended barycentrically with two nearby
/// inner-rim nodes whose triangle contains the point; Taylor extension from
/// the nearest inner-rim node when no such triangle exists. Returns the
/// value and whether the fallback was used.
pub fn downstream_value_at(
    front: &ShockFront,
    pts: &[Vec2],
    inner_nodes: &[usize],
    grads: &[Grad4],
    z: &[ParameterState],
    xi: Vec2,
) -> Result<(ParameterState, bool)> {
    if inner_nodes.is_empty() {
        return Err(Error::Transfer("empty inner downstream rim".into()));
    }
    let npts = front.points.len();
    let proj = project_to_front(front, xi);
    let (k, s) = (proj.edge, proj.s);
    // Shock downstream state at the projection, cross-weighted by the
    // normalized distances to the edge's shock points.
    let za = front.points[k].z_down.as_array();
    let zb = front.points[(k + 1) % npts].z_down.as_array();
    let mut zp = [0.0; 4];
    for c in 0..4 {
        zp[c] = za[c] * (1.0 - s) + zb[c] * s;
    }

    // Candidate triangles (proj, q1, q2) from inner-rim nodes sorted by
    // distance; consecutive sorted pairs first, then all pairs among the
    // nearest few.
    let mut order: Vec<usize> = (0..inner_nodes.len()).collect();
    order.sort_by(|&a, &b| {
        let da = pts[inner_nodes[a]].dist(xi);
        let db = pts[inner_nodes[b]].dist(xi);
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for w in order.windows(2) {
        pairs.push((w[0], w[1]));
    }
    let m = order.len().min(6);
    for a in 0..m {
        for b in (a + 1)..m {
            pairs.push((order[a], order[b]));
        }
    }
    for (a, b) in pairs {
        let (q1, q2) = (inner_nodes[a], inner_nodes[b]);
        if let Some(bc) = geom::barycentric(xi, proj.point, pts[q1], pts[q2]) {
            if bc.iter().all(|&l| l >= -1e-10) {
                let z1 = z[q1].as_array();
                let z2 = z[q2].as_array();
                let mut out = [0.0; 4];
                for c in 0..4 {
                    out[c] = bc[0] * zp[c] + bc[1] * z1[c] + bc[2] * z2[c];
                }
                return Ok((ParameterState::from_array(out), false));
            }
        }
    }
    // Taylor extension from the nearest inner-rim node.
    let q = inner_nodes[order[0]];
    Ok((taylor(z[q], &grads[q], xi - pts[q]), true))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SecondTransferStats {
    pub updated: usize,
    pub fallbacks: usize,
}

/// Rebuilds downstream rim values from the just-solved shock states: each
/// rim node takes a barycentric blend of the shock state at its projection
/// and two nearby inner-rim nodes, falling back to a Taylor extension from
/// the nearest inner-rim node when no containing triangle exists (rim ends
/// at physical boundaries).
pub fn second_transfer_downstream(
    front: &ShockFront,
    mesh: &Mesh,
    cav: &CavityDecomposition,
    grads: &[Grad4],
    z: &mut [ParameterState],
) -> Result<SecondTransferStats> {
    let pts = &mesh.tri.points;
    let rim_nodes = CavityDecomposition::rim_nodes(&cav.gamma_tilde_down);
    let inner_nodes = CavityDecomposition::rim_nodes(&cav.gamma_hat_down);
    let mut stats = SecondTransferStats::default();
    let mut updates: Vec<(usize, ParameterState)> = Vec::with_capacity(rim_nodes.len());
    for &i in &rim_nodes {
        let (znew, fb) = downstream_value_at(front, pts, &inner_nodes, grads, z, pts[i])?;
        if fb {
            stats.fallbacks += 1;
        }
        updates.push((i, znew));
        stats.updated += 1;
    }
    for (i, v) in updates {
        z[i] = v;
    }
    Ok(stats)
}

/// One-sided Taylor extension on a 1D node line: gradient from the interior
/// neighbor away from the shock, evaluated at `x_target`.
pub fn q1d_gradient_and_extrapolation(
    z: &[ParameterState],
    x: &[f64],
    idx: usize,
    shock_x: f64,
    x_target: f64,
) -> Result<ParameterState> {
    if z.len() != x.len() || x.len() < 2 || idx >= x.len() {
        return Err(Error::Transfer("1d extrapolation needs >= 2 nodes".into()));
    }
    let nb = if shock_x > x[idx] {
        idx.checked_sub(1)
            .ok_or_else(|| Error::Transfer("no interior neighbor left of surrogate".into()))?
    } else {
        let j = idx + 1;
        if j >= x.len() {
            return Err(Error::Transfer(
                "no interior neighbor right of surrogate".into(),
            ));
        }
        j
    };
    let dx = x[idx] - x[nb];
    let zi = z[idx].as_array();
    let zn = z[nb].as_array();
    let mut out = [0.0; 4];
    for k in 0..4 {
        let g = (zi[k] - zn[k]) / dx;
        out[k] = zi[k] + g * (x_target - x[idx]);
    }
    Ok(ParameterState::from_array(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{excavate, Side};
    use crate::front::ShockFront;
    use crate::mesh::{Patch, Triangulation};

    const GAS: GasModel = GasModel::AIR;

    fn strip_mesh(nx: usize, ny: usize) -> Mesh {
        let (lx, ly) = (2.0, 1.0);
        let mut pts = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                pts.push(Vec2::new(
                    lx * i as f64 / nx as f64,
                    ly * j as f64 / ny as f64,
                ));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut tris = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut edges = Vec::new();
        for i in 0..nx {
            edges.push([id(i, 0), id(i + 1, 0)]);
            edges.push([id(i + 1, ny), id(i, ny)]);
        }
        for j in 0..ny {
            edges.push([id(nx, j), id(nx, j + 1)]);
            edges.push([id(0, j + 1), id(0, j)]);
        }
        let patches = vec![Patch {
            name: "wall".into(),
            marker: 1,
            edges,
        }];
        Mesh::build(Triangulation::new(pts, tris, patches).unwrap()).unwrap()
    }

    fn linear_state(p: Vec2) -> ParameterState {
        ParameterState::from_array([
            1.0 + 0.3 * p.x - 0.1 * p.y,
            2.0 - 0.2 * p.x + 0.4 * p.y,
            0.5 + 0.1 * p.x + 0.2 * p.y,
            -0.3 + 0.25 * p.x - 0.15 * p.y,
        ])
    }

    const LINEAR_GRAD: Grad4 = [
        Vec2 { x: 0.3, y: -0.1 },
        Vec2 { x: -0.2, y: 0.4 },
        Vec2 { x: 0.1, y: 0.2 },
        Vec2 { x: 0.25, y: -0.15 },
    ];

    fn vertical_front(x: f64, n: usize) -> ShockFront {
        let pts: Vec<Vec2> = (0..n)
            .map(|k| Vec2::new(x, -0.2 + 1.4 * k as f64 / (n - 1) as f64))
            .collect();
        let mut f = ShockFront::new(pts, false, true, 0.2).unwrap();
        for p in &mut f.points {
            p.n = Vec2::new(-1.0, 0.0);
            p.tau = Vec2::new(0.0, 1.0);
        }
        f
    }

    #[test]
    fn cell_gradient_is_exact_on_linear_fields() {
        let mesh = strip_mesh(8, 4);
        let z: Vec<ParameterState> = mesh.tri.points.iter().map(|&p| linear_state(p)).collect();
        for c in 0..mesh.tri.triangles.len() {
            let g = cell_gradient(&mesh, &z, c).unwrap();
            for k in 0..4 {
                assert!((g[k] - LINEAR_GRAD[k]).norm() < 1e-13);
            }
        }
        // Constant field: zero gradient.
        let z0 = vec![ParameterState::from_array([1.0, 2.0, 3.0, 4.0]); mesh.tri.points.len()];
        let g = cell_gradient(&mesh, &z0, 3).unwrap();
        for k in 0..4 {
            assert!(g[k].norm() < 1e-14);
        }
    }

    #[test]
    fn cell_gradient_unit_right_triangle() {
        // z0 = 3x - 2y on the unit right triangle.
        let tri = Triangulation::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
            vec![Patch {
                name: "b".into(),
                marker: 1,
                edges: vec![[0, 1], [1, 2], [2, 0]],
            }],
        )
        .unwrap();
        let mesh = Mesh::build(tri).unwrap();
        let z: Vec<ParameterState> = mesh
            .tri
            .points
            .iter()
            .map(|&p| ParameterState::from_array([3.0 * p.x - 2.0 * p.y, 0.0, 0.0, 0.0]))
            .collect();
        let g = cell_gradient(&mesh, &z, 0).unwrap();
        assert!((g[0] - Vec2::new(3.0, -2.0)).norm() < 1e-14);
    }

    #[test]
    fn nodal_gradient_masked_and_refinement_order() {
        let mesh = strip_mesh(10, 5);
        let z: Vec<ParameterState> = mesh.tri.points.iter().map(|&p| linear_state(p)).collect();
        // Linear fields: exact at every node under any mask that keeps the
        // node alive.
        let mut mask = vec![true; mesh.tri.triangles.len()];
        for c in (0..mask.len()).step_by(3) {
            mask[c] = false;
        }
        for i in 0..mesh.tri.points.len() {
            if let Ok(g) = nodal_gradient(&mesh, &z, i, Some(&mask)) {
                for k in 0..4 {
                    assert!((g[k] - LINEAR_GRAD[k]).norm() < 1e-13);
                }
            }
        }
        // Fully-masked node errors.
        let none = vec![false; mesh.tri.triangles.len()];
        assert!(nodal_gradient(&mesh, &z, 0, Some(&none)).is_err());
        // A node with a single active incident cell returns that cell's
        // gradient.
        let corner = 0;
        let cells = mesh.conn.node_cells.row(corner);
        let mut single = vec![false; mesh.tri.triangles.len()];
        single[cells[0]] = true;
        let g1 = nodal_gradient(&mesh, &z, corner, Some(&single)).unwrap();
        let gc = cell_gradient(&mesh, &z, cells[0]).unwrap();
        for k in 0..4 {
            assert!((g1[k] - gc[k]).norm() < 1e-15);
        }

        // Quadratic field: at least first-order convergence of nodal
        // gradients. On symmetric structured grids the average is
        // superconvergent, so measure on an unstructured mesh and its
        // midpoint refinement.
        let quad_err = |mesh: &Mesh| -> f64 {
            let z: Vec<ParameterState> = mesh
                .tri
                .points
                .iter()
                .map(|&p| ParameterState::from_array([p.x * p.x, p.x * p.y, p.y * p.y, 0.0]))
                .collect();
            let mut worst = 0.0f64;
            for i in 0..mesh.tri.points.len() {
                if mesh.conn.is_boundary_node[i] {
                    continue;
                }
                let p = mesh.tri.points[i];
                let g = nodal_gradient(&mesh, &z, i, None).unwrap();
                let exact = [
                    Vec2::new(2.0 * p.x, 0.0),
                    Vec2::new(p.y, p.x),
                    Vec2::new(0.0, 2.0 * p.y),
                    Vec2::ZERO,
                ];
                for k in 0..4 {
                    worst = worst.max((g[k] - exact[k]).norm());
                }
            }
            worst
        };
        let coarse = Mesh::build(
            crate::mesh::generate::unstructured_annulus(1.0, 2.0, 24, 48, 260, 3).unwrap(),
        )
        .unwrap();
        let fine =
            Mesh::build(crate::mesh::generate::refine(&coarse.tri).unwrap()).unwrap();
        let e1 = quad_err(&coarse);
        let e2 = quad_err(&fine);
        let order = (e1 / e2).log2();
        assert!(order > 0.8, "gradient order {order} (e1={e1}, e2={e2})");
    }

    #[test]
    fn trace_hits_straight_rim_with_expected_geometry() {
        let mesh = strip_mesh(10, 5);
        let front = vertical_front(0.63, 8);
        let cav = excavate(&mesh, &front).unwrap();
        for i in 0..front.len() {
            let y = front.points[i].x.y;
            if !(0.0..=1.0).contains(&y) {
                continue;
            }
            let hit = trace_to_surrogate(
                &front,
                i,
                &cav.gamma_tilde_up,
                &mesh.tri.points,
                front.points[i].n,
            )
            .unwrap();
            assert!(!hit.fallback);
            assert!((hit.point.x - 0.6).abs() < 1e-12);
            assert!((hit.point.y - y).abs() < 1e-12);
            assert!((hit.w[0] + hit.w[1] - 1.0).abs() < 1e-12);
            assert!(hit.w[0] >= 0.0 && hit.w[0] <= 1.0);
            let hit_d = trace_to_surrogate(
                &front,
                i,
                &cav.gamma_tilde_down,
                &mesh.tri.points,
                front.points[i].n * -1.0,
            )
            .unwrap();
            assert!(!hit_d.fallback);
            assert!((hit_d.point.x - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_endpoint_hit_snaps_weights() {
        let mesh = strip_mesh(10, 5);
        let mut front = vertical_front(0.63, 8);
        // Align one shock point with a rim node height (y = 0.4).
        front.points[3].x = Vec2::new(0.63, 0.4);
        let cav = excavate(&mesh, &front).unwrap();
        let hit = trace_to_surrogate(
            &front,
            3,
            &cav.gamma_tilde_up,
            &mesh.tri.points,
            front.points[3].n,
        )
        .unwrap();
        assert!(hit.t == 0.0 || hit.t == 1.0);
        assert!((hit.point - Vec2::new(0.6, 0.4)).norm() < 1e-12);
    }

    #[test]
    fn hit_interpolation_conventions() {
        let z = vec![
            ParameterState::from_array([1.0, 10.0, 100.0, 1000.0]),
            ParameterState::from_array([3.0, 30.0, 300.0, 3000.0]),
        ];
        let mid = TraceHit {
            edge: 0,
            point: Vec2::ZERO,
            t: 0.5,
            nodes: [0, 1],
            w: [0.5, 0.5],
            fallback: false,
        };
        let v = interpolate_state_at_hit(&z, &mid).as_array();
        assert_eq!(v, [2.0, 20.0, 200.0, 2000.0]);
        let end = TraceHit {
            edge: 0,
            point: Vec2::ZERO,
            t: 0.0,
            nodes: [0, 1],
            w: [0.0, 1.0],
            fallback: false,
        };
        let v = interpolate_state_at_hit(&z, &end).as_array();
        assert_eq!(v, [1.0, 10.0, 100.0, 1000.0]);
    }

    #[test]
    fn upstream_extrapolation_linear_exact_and_constant_copied() {
        let mesh = strip_mesh(10, 5);
        let front = vertical_front(0.63, 8);
        let cav = excavate(&mesh, &front).unwrap();
        let z: Vec<ParameterState> = mesh.tri.points.iter().map(|&p| linear_state(p)).collect();
        let grads = nodal_gradients(&mesh, &z, Some(&cav.active_cell_mask));
        for i in 0..front.len() {
            let y = front.points[i].x.y;
            if !(0.05..=0.95).contains(&y) {
                continue;
            }
            let (zv, hit) = extrapolate_upstream(
                &front,
                i,
                &z,
                &grads,
                &cav.gamma_tilde_up,
                &mesh.tri.points,
            )
            .unwrap();
            assert!(!hit.fallback);
            let exact = linear_state(front.points[i].x).as_array();
            for (a, b) in zv.as_array().iter().zip(exact) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let z0 = vec![ParameterState::from_array([1.1, 2.2, 3.3, 4.4]); mesh.tri.points.len()];
        let g0 = nodal_gradients(&mesh, &z0, Some(&cav.active_cell_mask));
        let (zv, _) = extrapolate_upstream(
            &front,
            3,
            &z0,
            &g0,
            &cav.gamma_tilde_up,
            &mesh.tri.points,
        )
        .unwrap();
        for (a, b) in zv.as_array().iter().zip([1.1, 2.2, 3.3, 4.4]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn upstream_extrapolation_error_is_second_order_in_gap() {
        // Synthetic straight rim at x = x_rim, exact quadratic values and
        // exact gradients at rim nodes: the only error is the Taylor
        // truncation, which must scale as the square of the gap.
        let quad = |p: Vec2| {
            ParameterState::from_array([
                p.x * p.x + 0.5 * p.x * p.y,
                p.y * p.y - p.x * p.y,
                p.x * p.x + p.y * p.y,
                0.5 * p.x * p.x,
            ])
        };
        let grad_quad = |p: Vec2| -> Grad4 {
            [
                Vec2::new(2.0 * p.x + 0.5 * p.y, 0.5 * p.x),
                Vec2::new(-p.y, 2.0 * p.y - p.x),
                Vec2::new(2.0 * p.x, 2.0 * p.y),
                Vec2::new(p.x, 0.0),
            ]
        };
        let err_at_gap = |d: f64| -> f64 {
            let x_sh = 1.0;
            let x_rim = x_sh + d;
            let rim_pts: Vec<Vec2> = (0..11)
                .map(|k| Vec2::new(x_rim, 0.1 * k as f64))
                .collect();
            let rim: Vec<SurrogateEdge> = (0..10)
                .map(|k| SurrogateEdge {
                    nodes: [k, k + 1],
                    cell: 0,
                })
                .collect();
            let z: Vec<ParameterState> = rim_pts.iter().map(|&p| quad(p)).collect();
            let grads: Vec<Grad4> = rim_pts.iter().map(|&p| grad_quad(p)).collect();
            let front = vertical_front(x_sh, 6);
            let mut worst = 0.0f64;
            for i in 0..front.len() {
                let y = front.points[i].x.y;
                if !(0.05..=0.95).contains(&y) {
                    continue;
                }
                // Upstream normal must point toward the rim here.
                let mut f = front.clone();
                for p in &mut f.points {
                    p.n = Vec2::new(1.0, 0.0);
                }
                let (zv, _) = extrapolate_upstream(&f, i, &z, &grads, &rim, &rim_pts).unwrap();
                let exact = quad(front.points[i].x).as_array();
                for (a, b) in zv.as_array().iter().zip(exact) {
                    worst = worst.max((a - b).abs());
                }
            }
            worst
        };
        let e1 = err_at_gap(0.2);
        let e2 = err_at_gap(0.1);
        let order = (e1 / e2).log2();
        assert!(order > 1.9, "gap order {order} (e1={e1}, e2={e2})");
    }

    #[test]
    fn downstream_riemann_matches_definitions() {
        let mesh = strip_mesh(10, 5);
        let front = vertical_front(0.63, 8);
        let cav = excavate(&mesh, &front).unwrap();

        // Uniform downstream state: R_D = a + 0.2 u.n for gamma = 1.4.
        let wd = crate::gas::PrimitiveState::new(1.9, 0.7, -0.2, 2.3);
        let zd = GAS.primitive_to_parameter(&wd).unwrap();
        let z = vec![zd; mesh.tri.points.len()];
        let grads = nodal_gradients(&mesh, &z, Some(&cav.active_cell_mask));
        let n = front.points[3].n;
        let (rd, hit) = extract_downstream_riemann(
            &GAS,
            &front,
            3,
            &z,
            &grads,
            &cav.gamma_tilde_down,
            &mesh.tri.points,
        )
        .unwrap();
        assert!(!hit.fallback);
        let a = GAS.sound_speed(&wd);
        let manual = a + 0.2 * (wd.u * n.x + wd.v * n.y);
        assert!((rd - manual).abs() < 1e-12);

        // Exact normal-shock downstream of an M = 2 stream.
        let up = crate::gas::PrimitiveState::new(1.0, 2.0 * GAS.gamma.sqrt(), 0.0, 1.0);
        let ns = crate::cases::exact::normal_shock(2.0, GAS.gamma).unwrap();
        let wd2 = crate::gas::PrimitiveState::new(
            ns.rho_ratio * up.rho,
            ns.u_ratio * up.u,
            0.0,
            ns.p_ratio * up.p,
        );
        let zd2 = GAS.primitive_to_parameter(&wd2).unwrap();
        let z2 = vec![zd2; mesh.tri.points.len()];
        let g2 = nodal_gradients(&mesh, &z2, Some(&cav.active_cell_mask));
        let (rd2, _) = extract_downstream_riemann(
            &GAS,
            &front,
            3,
            &z2,
            &g2,
            &cav.gamma_tilde_down,
            &mesh.tri.points,
        )
        .unwrap();
        // The front normal is (-1, 0): u.n = -u_d.
        let manual2 = GAS.sound_speed(&wd2) + 0.2 * (wd2.u * -1.0);
        assert!((rd2 - manual2).abs() < 1e-12);

        // Linear synthetic field stays exact through the full path.
        let lin3 = |p: Vec2| {
            ParameterState::from_array([
                1.2 + 0.05 * p.x + 0.02 * p.y,
                6.0 + 0.06 * p.x + 0.01 * p.y,
                0.1 + 0.02 * p.x - 0.01 * p.y,
                0.3 - 0.01 * p.x + 0.02 * p.y,
            ])
        };
        let z3: Vec<ParameterState> = mesh.tri.points.iter().map(|&p| lin3(p)).collect();
        let g3 = nodal_gradients(&mesh, &z3, Some(&cav.active_cell_mask));
        let (rd3, _) = extract_downstream_riemann(
            &GAS,
            &front,
            3,
            &z3,
            &g3,
            &cav.gamma_tilde_down,
            &mesh.tri.points,
        )
        .unwrap();
        let w3 = GAS
            .parameter_to_primitive(&lin3(front.points[3].x))
            .unwrap();
        let manual3 = rh::riemann_closure(&GAS, &w3, n);
        assert!((rd3 - manual3).abs() < 1e-12);
    }

    #[test]
    fn projection_weights_at_symmetry() {
        let front = vertical_front(0.63, 8);
        // Segment 3 spans y in [0.4, 0.6]; a point level with its midpoint
        // projects to s = 0.5.
        let (a, b) = front.segment(3);
        let midy = 0.5 * (a.y + b.y);
        let pr = project_to_front(&front, Vec2::new(0.8, midy));
        assert_eq!(pr.edge, 3);
        assert!((pr.s - 0.5).abs() < 1e-12);
        assert!((pr.point - Vec2::new(0.63, midy)).norm() < 1e-12);
        assert!((pr.normal - Vec2::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn second_transfer_reproduces_linear_fields() {
        let mesh = strip_mesh(10, 5);
        let mut front = vertical_front(0.63, 8);
        let cav = excavate(&mesh, &front).unwrap();
        let mut z: Vec<ParameterState> =
            mesh.tri.points.iter().map(|&p| linear_state(p)).collect();
        for p in &mut front.points {
            p.z_down = linear_state(p.x);
        }
        let grads = nodal_gradients(&mesh, &z, Some(&cav.active_cell_mask));
        // Poison the rim values to prove they are rebuilt, not reused.
        let rim = CavityDecomposition::rim_nodes(&cav.gamma_tilde_down);
        for &i in &rim {
            z[i] = ParameterState::from_array([99.0, 99.0, 99.0, 99.0]);
        }
        let stats = second_transfer_downstream(&front, &mesh, &cav, &grads, &mut z).unwrap();
        assert_eq!(stats.updated, rim.len());
        for &i in &rim {
            let exact = linear_state(mesh.tri.points[i]).as_array();
            for (a, b) in z[i].as_array().iter().zip(exact) {
                assert!((a - b).abs() < 1e-12, "node {i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn q1d_taylor_extension() {
        let x: Vec<f64> = (0..6).map(|k| 0.1 * k as f64).collect();
        let lin = |t: f64| ParameterState::from_array([1.0 + 2.0 * t, -t, 0.5 * t, 3.0]);
        let z: Vec<ParameterState> = x.iter().map(|&t| lin(t)).collect();
        // Surrogate at index 2, shock to the right at 0.27.
        let out = q1d_gradient_and_extrapolation(&z, &x, 2, 0.27, 0.27).unwrap();
        for (a, b) in out.as_array().iter().zip(lin(0.27).as_array()) {
            assert!((a - b).abs() < 1e-13);
        }
        // Constant copies.
        let zc = vec![ParameterState::from_array([5.0, 6.0, 7.0, 8.0]); 6];
        let out = q1d_gradient_and_extrapolation(&zc, &x, 2, 0.27, 0.27).unwrap();
        assert_eq!(out.as_array(), [5.0, 6.0, 7.0, 8.0]);
        // Quadratic: error scales as the square of the extension distance.
        let quad = |t: f64| ParameterState::from_array([t * t, 0.0, 0.0, 0.0]);
        let zq: Vec<ParameterState> = x.iter().map(|&t| quad(t)).collect();
        let err = |d: f64| {
            let out = q1d_gradient_and_extrapolation(&zq, &x, 2, 0.2 + d, 0.2 + d).unwrap();
            (out.as_array()[0] - (0.2 + d) * (0.2 + d)).abs()
        };
        let e1 = err(0.2);
        let e2 = err(0.1);
        // One-sided secant gradient: truncation O(d^2 + d*h); with h fixed
        // the ratio sits between 2 and 4.
        assert!(e1 / e2 > 1.9, "ratio {}", e1 / e2);
        // Ends without a neighbor error out.
        assert!(q1d_gradient_and_extrapolation(&zq, &x, 0, 0.05, 0.05).is_err());
        let side = crate::cavity::side_of_shock(&vertical_front(0.63, 4), Vec2::new(0.0, 0.0));
        assert_eq!(side, Side::Upstream);
    }
}
