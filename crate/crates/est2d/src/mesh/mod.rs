//! Triangulations: storage, connectivity, and the median-dual metrics used by
//! the vertex-centered solver.

pub mod generate;
pub mod io;

use crate::error::{Error, Result};
use crate::geom::{self, Vec2};
use std::collections::HashMap;

/// A named group of boundary edges (endpoint pairs in boundary order where
/// available). `marker` is the integer tag from the input format.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub name: String,
    pub marker: i32,
    pub edges: Vec<[usize; 2]>,
}

/// A conforming triangulation with counterclockwise cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub points: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub patches: Vec<Patch>,
}

impl Triangulation {
    /// Validates counts and orientation; clockwise cells are reoriented with
    /// a warning, zero-area cells are an error.
    pub fn new(
        points: Vec<Vec2>,
        mut triangles: Vec<[usize; 3]>,
        patches: Vec<Patch>,
    ) -> Result<Self> {
        let n = points.len();
        let mut flipped = 0usize;
        for (c, tri) in triangles.iter_mut().enumerate() {
            for &k in tri.iter() {
                if k >= n {
                    return Err(Error::Topology(format!(
                        "cell {c} references point {k} of {n}"
                    )));
                }
            }
            let [a, b, cc] = *tri;
            let area2 = geom::orient(points[a], points[b], points[cc]);
            let scale = (points[b] - points[a]).norm2() + (points[cc] - points[a]).norm2();
            if area2.abs() <= 1e-14 * scale.max(1e-300) {
                return Err(Error::DegenerateCell {
                    cell: c,
                    area: 0.5 * area2,
                });
            }
            if area2 < 0.0 {
                tri.swap(1, 2);
                flipped += 1;
            }
        }
        if flipped > 0 {
            eprintln!("warning: reoriented {flipped} clockwise triangles");
        }
        for p in &patches {
            for e in &p.edges {
                if e[0] >= n || e[1] >= n {
                    return Err(Error::Topology(format!(
                        "patch {} references point outside mesh",
                        p.name
                    )));
                }
            }
        }
        Ok(Triangulation {
            points,
            triangles,
            patches,
        })
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_cells(&self) -> usize {
        self.triangles.len()
    }

    /// Area and the three inward edge normals scaled by edge length; normal k
    /// belongs to the edge opposite local vertex k. The three normals sum to
    /// zero because the cell boundary closes.
    pub fn cell_geometry(&self, cell: usize) -> Result<(f64, [Vec2; 3])> {
        let [a, b, c] = self.triangles[cell];
        let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
        let area = geom::tri_signed_area(pa, pb, pc);
        if area <= 0.0 {
            return Err(Error::DegenerateCell { cell, area });
        }
        // CCW traversal keeps the interior on the left, so +90-degree
        // rotation of each directed edge points inward.
        let n0 = (pc - pb).rot90_ccw();
        let n1 = (pa - pc).rot90_ccw();
        let n2 = (pb - pa).rot90_ccw();
        Ok((area, [n0, n1, n2]))
    }
}

/// Compressed row storage for small per-node lists.
#[derive(Debug, Clone, Default)]
pub struct Csr {
    pub offsets: Vec<usize>,
    pub items: Vec<usize>,
}

impl Csr {
    pub fn from_pairs(n_rows: usize, pairs: impl Iterator<Item = (usize, usize)> + Clone) -> Csr {
        let mut counts = vec![0usize; n_rows];
        for (r, _) in pairs.clone() {
            counts[r] += 1;
        }
        let mut offsets = vec![0usize; n_rows + 1];
        for i in 0..n_rows {
            offsets[i + 1] = offsets[i] + counts[i];
        }
        let mut items = vec![0usize; offsets[n_rows]];
        let mut cursor = offsets.clone();
        for (r, v) in pairs {
            items[cursor[r]] = v;
            cursor[r] += 1;
        }
        Csr { offsets, items }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[usize] {
        &self.items[self.offsets[r]..self.offsets[r + 1]]
    }
}

pub const NO_CELL: usize = usize::MAX;

/// A unique mesh edge. `tris` lists the adjacent cells; a boundary edge has
/// `tris[1] == NO_CELL`. The stored node order is `nodes[0] < nodes[1]`.
#[derive(Debug, Clone)]
pub struct Edge {
    pub nodes: [usize; 2],
    pub tris: [usize; 2],
}

/// A boundary edge directed so the adjacent cell lies on its left, i.e. in
/// counterclockwise order around the domain. `patch` indexes
/// `Triangulation::patches`.
#[derive(Debug, Clone)]
pub struct BoundaryEdge {
    pub edge: usize,
    pub dir: [usize; 2],
    pub tri: usize,
    pub patch: usize,
}

#[derive(Debug, Clone)]
pub struct Connectivity {
    pub edges: Vec<Edge>,
    /// Edge id for a node pair, keyed by (lo, hi).
    pub edge_of: HashMap<(usize, usize), usize>,
    pub node_cells: Csr,
    pub node_edges: Csr,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Index into `boundary_edges`, or NO_CELL for interior edges.
    pub boundary_of_edge: Vec<usize>,
    pub is_boundary_node: Vec<bool>,
    /// Per node, ids of incident boundary edges (0, 1, or 2 for manifold
    /// boundaries).
    pub node_boundary_edges: Csr,
}

impl Connectivity {
    pub fn build(t: &Triangulation) -> Result<Connectivity> {
        let n_pts = t.points.len();
        let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        // Directed-edge bookkeeping to recover boundary orientation later:
        // in a CCW cell each directed edge has the cell on its left.
        let mut dir_owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (c, tri) in t.triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let id = *edge_of.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        nodes: [key.0, key.1],
                        tris: [NO_CELL, NO_CELL],
                    });
                    edges.len() - 1
                });
                let e = &mut edges[id];
                if e.tris[0] == NO_CELL {
                    e.tris[0] = c;
                } else if e.tris[1] == NO_CELL {
                    e.tris[1] = c;
                } else {
                    return Err(Error::Topology(format!(
                        "edge ({a}, {b}) adjacent to more than two cells"
                    )));
                }
                if dir_owner.insert((a, b), c).is_some() {
                    return Err(Error::Topology(format!(
                        "directed edge ({a}, {b}) appears twice; inconsistent orientation"
                    )));
                }
            }
        }

        // Patch lookup for boundary edges.
        let mut patch_of: HashMap<(usize, usize), usize> = HashMap::new();
        for (pid, p) in t.patches.iter().enumerate() {
            for e in &p.edges {
                let key = (e[0].min(e[1]), e[0].max(e[1]));
                patch_of.insert(key, pid);
            }
        }

        let mut boundary_edges = Vec::new();
        let mut boundary_of_edge = vec![NO_CELL; edges.len()];
        let mut is_boundary_node = vec![false; n_pts];
        for (id, e) in edges.iter().enumerate() {
            if e.tris[1] != NO_CELL {
                continue;
            }
            let [lo, hi] = e.nodes;
            // Orient so the owning cell sits on the left.
            let dir = if dir_owner.contains_key(&(lo, hi)) {
                [lo, hi]
            } else {
                [hi, lo]
            };
            let patch = patch_of.get(&(lo, hi)).copied().ok_or_else(|| {
                Error::Topology(format!(
                    "boundary edge ({lo}, {hi}) is not covered by any patch"
                ))
            })?;
            boundary_of_edge[id] = boundary_edges.len();
            boundary_edges.push(BoundaryEdge {
                edge: id,
                dir,
                tri: e.tris[0],
                patch,
            });
            is_boundary_node[lo] = true;
            is_boundary_node[hi] = true;
        }

        // A patch edge that is not a mesh boundary edge indicates a stale or
        // wrong patch description.
        for p in &t.patches {
            for pe in &p.edges {
                let key = (pe[0].min(pe[1]), pe[0].max(pe[1]));
                match edge_of.get(&key) {
                    Some(&id) if edges[id].tris[1] == NO_CELL => {}
                    _ => {
                        return Err(Error::Topology(format!(
                            "patch {} edge ({}, {}) is not a boundary edge of the triangulation",
                            p.name, pe[0], pe[1]
                        )))
                    }
                }
            }
        }

        let node_cells = Csr::from_pairs(
            n_pts,
            TriNodePairs {
                tris: &t.triangles,
                c: 0,
                k: 0,
            },
        );
        let node_edges = Csr::from_pairs(
            n_pts,
            edges
                .iter()
                .enumerate()
                .flat_map(|(id, e)| [(e.nodes[0], id), (e.nodes[1], id)])
                .collect::<Vec<_>>()
                .into_iter(),
        );
        let node_boundary_edges = Csr::from_pairs(
            n_pts,
            boundary_edges
                .iter()
                .enumerate()
                .flat_map(|(i, be)| [(be.dir[0], i), (be.dir[1], i)])
                .collect::<Vec<_>>()
                .into_iter(),
        );

        Ok(Connectivity {
            edges,
            edge_of,
            node_cells,
            node_edges,
            boundary_edges,
            boundary_of_edge,
            is_boundary_node,
            node_boundary_edges,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Checks E = (3T + B) / 2, which holds for any conforming triangulation.
    pub fn euler_consistent(&self, n_tris: usize) -> bool {
        2 * self.edges.len() == 3 * n_tris + self.boundary_edges.len()
    }
}

// Cloneable iterator over (node, cell) incidences without allocating.
#[derive(Clone)]
struct TriNodePairs<'a> {
    tris: &'a [[usize; 3]],
    c: usize,
    k: usize,
}

impl<'a> Iterator for TriNodePairs<'a> {
    type Item = (usize, usize);
    fn next(&mut self) -> Option<(usize, usize)> {
        if self.c >= self.tris.len() {
            return None;
        }
        let item = (self.tris[self.c][self.k], self.c);
        self.k += 1;
        if self.k == 3 {
            self.k = 0;
            self.c += 1;
        }
        Some(item)
    }
}

/// Median-dual metrics. For edge (lo, hi), the dual face joins the midpoints
/// of the adjacent cells' centroids with the edge midpoint; its scaled normal
/// is oriented lo -> hi and split per adjacent cell so masked assemblies can
/// drop the contribution of an excavated cell.
#[derive(Debug, Clone)]
pub struct MeshGeometry {
    pub tri_area: Vec<f64>,
    pub tri_centroid: Vec<Vec2>,
    /// Inward scaled edge normals per cell, normal k opposite local vertex k.
    pub tri_inward_normals: Vec<[Vec2; 3]>,
    /// Median-dual cell area per node (one third of incident cell areas).
    pub dual_area: Vec<f64>,
    /// Per edge: dual-face normal contribution from tris[0] and tris[1],
    /// each oriented from nodes[0] (lo) to nodes[1] (hi).
    pub edge_tri_normal: Vec<[Vec2; 2]>,
    /// Per boundary edge: outward half-face normal belonging to each of its
    /// two endpoint dual cells (equal halves of the full edge normal).
    pub boundary_half_normal: Vec<Vec2>,
    /// Mean mesh edge length, a convenient resolution scale.
    pub h_mean: f64,
    /// Minimum mesh edge length.
    pub h_min: f64,
}

impl MeshGeometry {
    pub fn build(t: &Triangulation, conn: &Connectivity) -> Result<MeshGeometry> {
        let n_cells = t.n_cells();
        let mut tri_area = Vec::with_capacity(n_cells);
        let mut tri_centroid = Vec::with_capacity(n_cells);
        let mut tri_inward_normals = Vec::with_capacity(n_cells);
        let mut dual_area = vec![0.0f64; t.n_points()];
        for c in 0..n_cells {
            let (area, normals) = t.cell_geometry(c)?;
            let [a, b, cc] = t.triangles[c];
            tri_area.push(area);
            tri_centroid.push((t.points[a] + t.points[b] + t.points[cc]) / 3.0);
            tri_inward_normals.push(normals);
            for &k in &t.triangles[c] {
                dual_area[k] += area / 3.0;
            }
        }

        let mut edge_tri_normal = vec![[Vec2::ZERO; 2]; conn.edges.len()];
        for (c, tri) in t.triangles.iter().enumerate() {
            let g = tri_centroid[c];
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let id = conn.edge_of[&key];
                let m = (t.points[a] + t.points[b]) * 0.5;
                // Directed a -> b with the cell on the left: the dual face
                // from edge midpoint to centroid separates a from b, and the
                // clockwise rotation of (g - m) points from a toward b.
                let mut nu = (g - m).rot90_cw();
                if a != key.0 {
                    nu = -nu; // store lo -> hi
                }
                let side = if conn.edges[id].tris[0] == c { 0 } else { 1 };
                edge_tri_normal[id][side] += nu;
            }
        }

        let mut boundary_half_normal = Vec::with_capacity(conn.boundary_edges.len());
        for be in &conn.boundary_edges {
            let a = t.points[be.dir[0]];
            let b = t.points[be.dir[1]];
            // Domain interior lies left of dir, so outward is the clockwise
            // rotation; each endpoint owns half the edge.
            boundary_half_normal.push((b - a).rot90_cw() * 0.5);
        }

        let mut h_sum = 0.0;
        let mut h_min = f64::INFINITY;
        for e in &conn.edges {
            let l = t.points[e.nodes[0]].dist(t.points[e.nodes[1]]);
            h_sum += l;
            h_min = h_min.min(l);
        }
        let h_mean = h_sum / conn.edges.len().max(1) as f64;

        Ok(MeshGeometry {
            tri_area,
            tri_centroid,
            tri_inward_normals,
            dual_area,
            edge_tri_normal,
            boundary_half_normal,
            h_mean,
            h_min,
        })
    }

    /// Full dual-face normal of an edge (both cell contributions).
    #[inline]
    pub fn edge_normal(&self, edge: usize) -> Vec2 {
        self.edge_tri_normal[edge][0] + self.edge_tri_normal[edge][1]
    }
}

/// A triangulation bundled with its connectivity and metrics; most of the
/// toolkit passes this around.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub tri: Triangulation,
    pub conn: Connectivity,
    pub geo: MeshGeometry,
}

impl Mesh {
    pub fn build(tri: Triangulation) -> Result<Mesh> {
        let conn = Connectivity::build(&tri)?;
        if !conn.euler_consistent(tri.n_cells()) {
            return Err(Error::Topology(format!(
                "edge count {} violates 2E = 3T + B (T = {}, B = {})",
                conn.edges.len(),
                tri.n_cells(),
                conn.boundary_edges.len()
            )));
        }
        let geo = MeshGeometry::build(&tri, &conn)?;
        Ok(Mesh { tri, conn, geo })
    }

    pub fn n_points(&self) -> usize {
        self.tri.n_points()
    }

    pub fn n_cells(&self) -> usize {
        self.tri.n_cells()
    }

    pub fn patch_id(&self, name: &str) -> Option<usize> {
        self.tri.patches.iter().position(|p| p.name == name)
    }

    /// Control surfaces close: for every node, dual-face normals (signed
    /// outward) plus boundary half-faces sum to zero. Returns the largest
    /// violation, for tests.
    pub fn max_dual_closure_defect(&self) -> f64 {
        let mut sum = vec![Vec2::ZERO; self.n_points()];
        for (id, e) in self.conn.edges.iter().enumerate() {
            let nu = self.geo.edge_normal(id);
            sum[e.nodes[0]] += nu; // outward from lo
            sum[e.nodes[1]] -= nu; // inward seen from hi
        }
        for (i, be) in self.conn.boundary_edges.iter().enumerate() {
            let hn = self.geo.boundary_half_normal[i];
            sum[be.dir[0]] += hn;
            sum[be.dir[1]] += hn;
        }
        sum.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn unit_square() -> Triangulation {
        // Two CCW triangles on the unit square.
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let tris = vec![[0, 1, 2], [0, 2, 3]];
        let patches = vec![Patch {
            name: "wall".into(),
            marker: 1,
            edges: vec![[0, 1], [1, 2], [2, 3], [3, 0]],
        }];
        Triangulation::new(pts, tris, patches).unwrap()
    }

    #[test]
    fn square_connectivity_counts() {
        let t = unit_square();
        let conn = Connectivity::build(&t).unwrap();
        assert_eq!(conn.edges.len(), 5);
        let interior = conn.edges.iter().filter(|e| e.tris[1] != NO_CELL).count();
        assert_eq!(interior, 1);
        assert_eq!(conn.boundary_edges.len(), 4);
        assert!(conn.euler_consistent(2));
        assert!(conn.is_boundary_node.iter().all(|&b| b));
    }

    #[test]
    fn single_triangle_edges_all_boundary() {
        let t = Triangulation::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
            vec![Patch {
                name: "b".into(),
                marker: 1,
                edges: vec![[0, 1], [1, 2], [2, 0]],
            }],
        )
        .unwrap();
        let conn = Connectivity::build(&t).unwrap();
        assert_eq!(conn.edges.len(), 3);
        assert_eq!(conn.boundary_edges.len(), 3);
    }

    #[test]
    fn cell_geometry_normals_close() {
        let t = unit_square();
        let (area, n) = t.cell_geometry(0).unwrap();
        assert!((area - 0.5).abs() < 1e-15);
        let s = n[0] + n[1] + n[2];
        assert!(s.norm() < 1e-15);
        // Inward check: normal opposite vertex 0 points toward vertex 0.
        let [a, b, c] = t.triangles[0];
        let mid = (t.points[b] + t.points[c]) * 0.5;
        assert!(n[0].dot(t.points[a] - mid) > 0.0);
    }

    #[test]
    fn equilateral_area() {
        let t = Triangulation::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.5, 3.0_f64.sqrt() / 2.0),
            ],
            vec![[0, 1, 2]],
            vec![Patch {
                name: "b".into(),
                marker: 1,
                edges: vec![[0, 1], [1, 2], [2, 0]],
            }],
        )
        .unwrap();
        let (area, _) = t.cell_geometry(0).unwrap();
        assert!((area - 3.0_f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn clockwise_cells_are_reoriented() {
        let t = Triangulation::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            vec![[0, 2, 1]],
            vec![Patch {
                name: "b".into(),
                marker: 1,
                edges: vec![[0, 1], [1, 2], [2, 0]],
            }],
        )
        .unwrap();
        assert_eq!(t.triangles[0], [0, 1, 2]);
    }

    #[test]
    fn degenerate_cell_rejected() {
        let r = Triangulation::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)],
            vec![[0, 1, 2]],
            vec![],
        );
        assert!(matches!(r, Err(Error::DegenerateCell { .. })));
    }

    #[test]
    fn dual_areas_partition_domain() {
        let mesh = Mesh::build(unit_square()).unwrap();
        let total: f64 = mesh.geo.dual_area.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dual_control_surfaces_close() {
        let mesh = Mesh::build(unit_square()).unwrap();
        assert!(mesh.max_dual_closure_defect() < 1e-14);
    }

    #[test]
    fn boundary_normals_point_outward() {
        let mesh = Mesh::build(unit_square()).unwrap();
        for (i, be) in mesh.conn.boundary_edges.iter().enumerate() {
            let m = (mesh.tri.points[be.dir[0]] + mesh.tri.points[be.dir[1]]) * 0.5;
            let center = Vec2::new(0.5, 0.5);
            assert!(mesh.geo.boundary_half_normal[i].dot(m - center) > 0.0);
        }
    }
}
