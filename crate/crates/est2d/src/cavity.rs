//! Cavity excavation: remove the background cells crossed by the shock
//! polyline and extract the surrogate boundary polylines left behind on the
//! upstream and downstream rims of the hole.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::front::ShockFront;
use crate::geom::{self, Aabb, UniformBins, Vec2};
use crate::mesh::{Mesh, NO_CELL};

/// Which side of the shock a point lies on. `n` points from downstream
/// toward upstream, so a positive normal offset is upstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upstream,
    Downstream,
}

/// Per-node classification after excavation. A node is `Removed` when every
/// incident cell was excavated; it keeps its storage but carries no state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSide {
    Upstream,
    Downstream,
    Removed,
}

/// One face of a surrogate polyline: node pair oriented so the hole lies on
/// the left, plus the kept cell that owns the face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurrogateEdge {
    pub nodes: [usize; 2],
    pub cell: usize,
}

/// The excavated background mesh: the cell mask, the hole-rim polylines on
/// either side, the inner downstream rim one cell layer deeper, and the
/// per-node side labels.
#[derive(Debug, Clone)]
pub struct CavityDecomposition {
    pub active_cell_mask: Vec<bool>,
    pub gamma_tilde_up: Vec<SurrogateEdge>,
    pub gamma_tilde_down: Vec<SurrogateEdge>,
    pub gamma_hat_down: Vec<SurrogateEdge>,
    pub node_side: Vec<NodeSide>,
}

/// Classifies a point by the nearest front segment: the sign of the offset
/// from the closest point, projected on that segment's normal (averaged with
/// the neighbor segment when the closest point is a shared vertex). Exact
/// ties resolve downstream.
pub fn side_of_shock(front: &ShockFront, p: Vec2) -> Side {
    let ns = front.n_segments();
    let mut best = (f64::INFINITY, 0usize, Vec2::ZERO, 0.0);
    for k in 0..ns {
        let (a, b) = front.segment(k);
        let (t, cp) = geom::closest_point_on_segment(p, a, b);
        let d2 = (p - cp).norm2();
        if d2 < best.0 {
            best = (d2, k, cp, t);
        }
    }
    let (_, k, cp, t) = best;
    let mut n = front.segment_normal(k);
    // Closest point at a shared vertex: bisect the two adjacent normals so
    // points inside the wedge of a kink classify consistently.
    let eps = 1e-9;
    if t <= eps {
        if let Some(prev) = seg_neighbor(front, k, -1) {
            n = (n + front.segment_normal(prev)).normalized();
        }
    } else if t >= 1.0 - eps {
        if let Some(next) = seg_neighbor(front, k, 1) {
            n = (n + front.segment_normal(next)).normalized();
        }
    }
    if (p - cp).dot(n) > 0.0 {
        Side::Upstream
    } else {
        Side::Downstream
    }
}

fn seg_neighbor(front: &ShockFront, k: usize, step: isize) -> Option<usize> {
    let ns = front.n_segments() as isize;
    let j = k as isize + step;
    if front.closed {
        Some(j.rem_euclid(ns) as usize)
    } else if (0..ns).contains(&j) {
        Some(j as usize)
    } else {
        None
    }
}

/// Removes every cell whose closed triangle intersects the front polyline
/// (vertex grazes count), then classifies the rim of the hole. The hole may
/// touch physical boundaries; those boundary edges simply go inactive.
pub fn excavate(mesh: &Mesh, front: &ShockFront) -> Result<CavityDecomposition> {
    front.validate_geometry()?;
    let active_cell_mask = removal_mask(mesh, front)?;

    let pts = &mesh.tri.points;
    let mut up = Vec::new();
    let mut down = Vec::new();
    for e in &mesh.conn.edges {
        let [t0, t1] = e.tris;
        if t1 == NO_CELL || active_cell_mask[t0] == active_cell_mask[t1] {
            continue;
        }
        let (kept, hole) = if active_cell_mask[t0] { (t0, t1) } else { (t1, t0) };
        let face = oriented_face(pts, e.nodes, mesh.geo.tri_centroid[hole], kept);
        let mid = (pts[e.nodes[0]] + pts[e.nodes[1]]) * 0.5;
        match side_of_shock(front, mid) {
            Side::Upstream => up.push(face),
            Side::Downstream => down.push(face),
        }
    }
    let gamma_tilde_up = chain_faces(up, "upstream surrogate")?;
    let gamma_tilde_down = chain_faces(down, "downstream surrogate")?;
    let gamma_hat_down =
        inner_downstream_rim(mesh, front, &active_cell_mask, &gamma_tilde_down)?;

    let mut node_side = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let any_active = mesh
            .conn
            .node_cells
            .row(i)
            .iter()
            .any(|&c| active_cell_mask[c]);
        node_side.push(if !any_active {
            NodeSide::Removed
        } else {
            match side_of_shock(front, pts[i]) {
                Side::Upstream => NodeSide::Upstream,
                Side::Downstream => NodeSide::Downstream,
            }
        });
    }

    Ok(CavityDecomposition {
        active_cell_mask,
        gamma_tilde_up,
        gamma_tilde_down,
        gamma_hat_down,
        node_side,
    })
}

/// Per-cell keep mask: false exactly when some front segment intersects the
/// closed triangle. Binned by bounding box so cost scales with front length.
fn removal_mask(mesh: &Mesh, front: &ShockFront) -> Result<Vec<bool>> {
    let pts = &mesh.tri.points;
    let boxes: Vec<Aabb> = mesh
        .tri
        .triangles
        .iter()
        .map(|t| Aabb::of_points(t.iter().map(|&k| pts[k])))
        .collect();
    let domain = Aabb::of_points(pts.iter().copied());
    let bins = UniformBins::build(domain, &boxes);
    let tol = 1e-12 * mesh.geo.h_mean;
    let mut removed = vec![false; mesh.tri.triangles.len()];
    for k in 0..front.n_segments() {
        let (a, b) = front.segment(k);
        let qb = Aabb::of_points([a, b]).inflate(tol);
        for c in bins.query(&qb) {
            let c = c as usize;
            if removed[c] {
                continue;
            }
            let [i, j, m] = mesh.tri.triangles[c];
            if geom::seg_intersects_tri(a, b, pts[i], pts[j], pts[m], tol) {
                removed[c] = true;
            }
        }
    }
    if !removed.iter().any(|&r| r) {
        return Err(Error::Cavity(
            "front does not intersect the mesh interior".into(),
        ));
    }
    Ok(removed.iter().map(|&r| !r).collect())
}

fn oriented_face(pts: &[Vec2], nodes: [usize; 2], hole_centroid: Vec2, kept: usize) -> SurrogateEdge {
    let [mut a, mut b] = nodes;
    if geom::orient(pts[a], pts[b], hole_centroid) < 0.0 {
        std::mem::swap(&mut a, &mut b);
    }
    SurrogateEdge {
        nodes: [a, b],
        cell: kept,
    }
}

/// Orders rim faces into a single polyline (or closed loop) by walking
/// head-to-tail. Rejects branching (non-manifold rims) and disconnection.
fn chain_faces(faces: Vec<SurrogateEdge>, what: &str) -> Result<Vec<SurrogateEdge>> {
    if faces.len() <= 1 {
        return Ok(faces);
    }
    let mut from: HashMap<usize, usize> = HashMap::new();
    let mut heads: HashSet<usize> = HashSet::new();
    for (i, f) in faces.iter().enumerate() {
        if from.insert(f.nodes[0], i).is_some() {
            return Err(Error::Cavity(format!(
                "{what} is not a manifold polyline (branching at node {})",
                f.nodes[0]
            )));
        }
        if !heads.insert(f.nodes[1]) {
            return Err(Error::Cavity(format!(
                "{what} is not a manifold polyline (branching at node {})",
                f.nodes[1]
            )));
        }
    }
    // Open chain start: a tail that is nobody's head. Closed loop: start at
    // the smallest tail node for determinism.
    let start = faces
        .iter()
        .map(|f| f.nodes[0])
        .filter(|t| !heads.contains(t))
        .min()
        .or_else(|| faces.iter().map(|f| f.nodes[0]).min())
        .unwrap();
    let mut ordered = Vec::with_capacity(faces.len());
    let mut cur = start;
    for _ in 0..faces.len() {
        let Some(&i) = from.get(&cur) else { break };
        ordered.push(faces[i]);
        cur = faces[i].nodes[1];
        if cur == start {
            break;
        }
    }
    if ordered.len() != faces.len() {
        return Err(Error::Cavity(format!("{what} is disconnected")));
    }
    Ok(ordered)
}

/// Downstream rim of the widened hole obtained by additionally removing
/// every kept cell with a node on the downstream rim. Data extracted here
/// stay clear of the cells whose values the coupling overwrites.
fn inner_downstream_rim(
    mesh: &Mesh,
    front: &ShockFront,
    active: &[bool],
    gamma_tilde_down: &[SurrogateEdge],
) -> Result<Vec<SurrogateEdge>> {
    let pts = &mesh.tri.points;
    let rim_nodes: HashSet<usize> = gamma_tilde_down
        .iter()
        .flat_map(|f| f.nodes)
        .collect();
    let mut removed2: Vec<bool> = active.iter().map(|&a| !a).collect();
    for (c, tri) in mesh.tri.triangles.iter().enumerate() {
        if active[c] && tri.iter().any(|n| rim_nodes.contains(n)) {
            removed2[c] = true;
        }
    }
    let mut faces = Vec::new();
    for e in &mesh.conn.edges {
        let [t0, t1] = e.tris;
        if t1 == NO_CELL || removed2[t0] == removed2[t1] {
            continue;
        }
        let (kept, hole) = if removed2[t0] { (t1, t0) } else { (t0, t1) };
        let mid = (pts[e.nodes[0]] + pts[e.nodes[1]]) * 0.5;
        if side_of_shock(front, mid) == Side::Downstream {
            faces.push(oriented_face(pts, e.nodes, mesh.geo.tri_centroid[hole], kept));
        }
    }
    if faces.is_empty() {
        return Err(Error::Cavity(
            "downstream region too thin for an inner rim; refine the mesh or shorten the \
             front spacing"
                .into(),
        ));
    }
    chain_faces(faces, "inner downstream surrogate")
}

impl CavityDecomposition {
    /// True when no path of active cells (through shared edges) connects an
    /// upstream rim owner to a downstream rim owner.
    pub fn upstream_downstream_disconnected(&self, mesh: &Mesh) -> bool {
        let nt = mesh.tri.triangles.len();
        let mut comp = vec![usize::MAX; nt];
        let mut next = 0usize;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nt];
        for e in &mesh.conn.edges {
            let [t0, t1] = e.tris;
            if t1 != NO_CELL && self.active_cell_mask[t0] && self.active_cell_mask[t1] {
                adj[t0].push(t1);
                adj[t1].push(t0);
            }
        }
        for c in 0..nt {
            if !self.active_cell_mask[c] || comp[c] != usize::MAX {
                continue;
            }
            let mut stack = vec![c];
            comp[c] = next;
            while let Some(t) = stack.pop() {
                for &u in &adj[t] {
                    if comp[u] == usize::MAX {
                        comp[u] = next;
                        stack.push(u);
                    }
                }
            }
            next += 1;
        }
        let up: HashSet<usize> = self.gamma_tilde_up.iter().map(|f| comp[f.cell]).collect();
        let down: HashSet<usize> = self
            .gamma_tilde_down
            .iter()
            .map(|f| comp[f.cell])
            .collect();
        up.is_disjoint(&down)
    }

    /// Node indices of a rim in walk order (deduplicated, preserves loop
    /// closure by omitting the repeated final node).
    pub fn rim_nodes(rim: &[SurrogateEdge]) -> Vec<usize> {
        let mut nodes = Vec::with_capacity(rim.len() + 1);
        for (i, f) in rim.iter().enumerate() {
            if i == 0 {
                nodes.push(f.nodes[0]);
            }
            if f.nodes[1] != nodes[0] {
                nodes.push(f.nodes[1]);
            }
        }
        nodes
    }
}
