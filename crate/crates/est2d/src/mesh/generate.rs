//! Built-in mesh generators. Unstructured variants place boundary points on
//! the exact geometry, scatter jittered interior points with a fixed seed,
//! triangulate with a Delaunay kernel, and validate that every requested
//! boundary edge survived, so results are deterministic and conforming.

use super::{Patch, Triangulation};
use crate::error::{Error, Result};
use crate::geom::{self, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{DelaunayTriangulation, Point2, Triangulation as _};
use std::collections::HashMap;
use std::f64::consts::PI;

/// A closed boundary loop. Segment k joins `points[k]` to `points[k+1]`
/// (wrapping); the domain must lie on the left, so outer loops run
/// counterclockwise and hole loops clockwise. `seg_patch[k]` indexes the
/// patch table passed alongside.
#[derive(Debug, Clone)]
pub struct LoopSpec {
    pub points: Vec<Vec2>,
    pub seg_patch: Vec<usize>,
    pub is_hole: bool,
}

impl LoopSpec {
    fn validate(&self) -> Result<()> {
        if self.points.len() < 3 {
            return Err(Error::Topology("boundary loop needs at least 3 points".into()));
        }
        if self.seg_patch.len() != self.points.len() {
            return Err(Error::Topology(
                "loop needs one patch id per segment".into(),
            ));
        }
        Ok(())
    }

    fn contains(&self, p: Vec2) -> bool {
        geom::point_strictly_in_polygon(p, &self.points, 0.0)
    }
}

/// Minimum distance from `p` to any segment of any loop.
fn distance_to_loops(loops: &[LoopSpec], p: Vec2) -> f64 {
    let mut d = f64::INFINITY;
    for lp in loops {
        let n = lp.points.len();
        for k in 0..n {
            let (_, cp) = geom::closest_point_on_segment(p, lp.points[k], lp.points[(k + 1) % n]);
            d = d.min(p.dist(cp));
        }
    }
    d
}

fn in_domain(loops: &[LoopSpec], p: Vec2) -> bool {
    let mut inside_outer = false;
    for lp in loops {
        if lp.is_hole {
            if lp.contains(p) {
                return false;
            }
        } else if lp.contains(p) {
            inside_outer = true;
        }
    }
    inside_outer
}

/// Scatters exactly `n_interior` jittered-grid points inside the domain with
/// the given clearance from all boundary loops. Deterministic for a seed.
fn scatter_interior(
    loops: &[LoopSpec],
    n_interior: usize,
    clearance: f64,
    seed: u64,
) -> Result<Vec<Vec2>> {
    if n_interior == 0 {
        return Ok(Vec::new());
    }
    let bbox = geom::Aabb::of_points(loops.iter().flat_map(|l| l.points.iter().copied()));
    let area_box = (bbox.max.x - bbox.min.x) * (bbox.max.y - bbox.min.y);
    // Start optimistic and shrink the grid until enough candidates survive.
    let mut s = (area_box / n_interior as f64).sqrt();
    for attempt in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let nx = ((bbox.max.x - bbox.min.x) / s).ceil() as usize + 1;
        let ny = ((bbox.max.y - bbox.min.y) / s).ceil() as usize + 1;
        let mut candidates = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let jx = rng.gen_range(-0.35..0.35);
                let jy = rng.gen_range(-0.35..0.35);
                let p = Vec2::new(
                    bbox.min.x + (ix as f64 + 0.5 + jx) * s,
                    bbox.min.y + (iy as f64 + 0.5 + jy) * s,
                );
                if in_domain(loops, p) && distance_to_loops(loops, p) >= clearance {
                    candidates.push(p);
                }
            }
        }
        if candidates.len() >= n_interior {
            // Thin uniformly at random to the exact count.
            for i in (1..candidates.len()).rev() {
                let j = rng.gen_range(0..=i);
                candidates.swap(i, j);
            }
            candidates.truncate(n_interior);
            return Ok(candidates);
        }
        s *= 0.93;
    }
    Err(Error::Topology(format!(
        "could not place {n_interior} interior points with clearance {clearance}"
    )))
}

/// Triangulates boundary loops plus interior points and validates the result:
/// every loop segment must appear as a boundary edge of the kept mesh and
/// vice versa.
pub fn unstructured_from_loops(
    loops: &[LoopSpec],
    patch_defs: &[(&str, i32)],
    interior: Vec<Vec2>,
) -> Result<Triangulation> {
    for lp in loops {
        lp.validate()?;
    }
    let mut points: Vec<Vec2> = Vec::new();
    for lp in loops {
        points.extend_from_slice(&lp.points);
    }
    let n_boundary = points.len();
    points.extend(interior);

    let mut dt: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
    let mut index_of: HashMap<(u64, u64), usize> = HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if index_of.insert((p.x.to_bits(), p.y.to_bits()), i).is_some() {
            return Err(Error::Topology(format!(
                "duplicate generator point at ({}, {})",
                p.x, p.y
            )));
        }
        dt.insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::Topology(format!("triangulation insert failed: {e:?}")))?;
    }
    if dt.num_vertices() != points.len() {
        return Err(Error::Topology(
            "triangulation merged points; generator spacing too tight".into(),
        ));
    }

    let mut triangles = Vec::new();
    for face in dt.inner_faces() {
        let vs = face.vertices();
        let mut tri = [0usize; 3];
        for (slot, v) in tri.iter_mut().zip(vs.iter()) {
            let pos = v.position();
            *slot = *index_of
                .get(&(pos.x.to_bits(), pos.y.to_bits()))
                .ok_or_else(|| Error::Topology("triangulation moved a point".into()))?;
        }
        let g = (points[tri[0]] + points[tri[1]] + points[tri[2]]) / 3.0;
        if in_domain(loops, g) {
            triangles.push(tri);
        }
    }

    // Assemble patches from loop segments, offsetting node ids per loop.
    let mut patches: Vec<Patch> = patch_defs
        .iter()
        .map(|(name, marker)| Patch {
            name: (*name).to_string(),
            marker: *marker,
            edges: Vec::new(),
        })
        .collect();
    let mut offset = 0usize;
    for lp in loops {
        let n = lp.points.len();
        for k in 0..n {
            let a = offset + k;
            let b = offset + (k + 1) % n;
            let pid = lp.seg_patch[k];
            if pid >= patches.len() {
                return Err(Error::Topology(format!("segment patch id {pid} out of range")));
            }
            patches[pid].edges.push([a, b]);
        }
        offset += n;
    }

    let t = Triangulation::new(points, triangles, patches)?;

    // Boundary preservation: kept-mesh boundary edges and declared loop
    // segments must be the same set.
    let mut edge_use: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in &t.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *edge_use.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut declared: Vec<(usize, usize)> = t
        .patches
        .iter()
        .flat_map(|p| p.edges.iter().map(|e| (e[0].min(e[1]), e[0].max(e[1]))))
        .collect();
    declared.sort_unstable();
    declared.dedup();
    let mut actual: Vec<(usize, usize)> = edge_use
        .iter()
        .filter(|&(_, &uses)| uses == 1)
        .map(|(&e, _)| e)
        .collect();
    actual.sort_unstable();
    if declared != actual {
        return Err(Error::Topology(format!(
            "boundary not preserved: {} declared vs {} actual boundary edges",
            declared.len(),
            actual.len()
        )));
    }
    let _ = n_boundary;
    Ok(t)
}

/// Points on a circular arc of radius r about `center`, from angle `a0` to
/// `a1`, with `n` segments; the end point is excluded so chained arcs share
/// corners exactly once.
pub fn arc_points(center: Vec2, r: f64, a0: f64, a1: f64, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let a = a0 + (a1 - a0) * k as f64 / n as f64;
            center + Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

/// Evenly spaced points from `a` to `b` with `n` segments, end excluded.
pub fn line_points(a: Vec2, b: Vec2, n: usize) -> Vec<Vec2> {
    (0..n).map(|k| a.lerp(b, k as f64 / n as f64)).collect()
}

/// Annulus between radii `r_in` and `r_out`, exact unstructured point
/// counts: `n_in`/`n_out` points on the circles and `n_interior` inside.
/// Patches: `inflow` on the inner circle, `outflow` on the outer.
pub fn unstructured_annulus(
    r_in: f64,
    r_out: f64,
    n_in: usize,
    n_out: usize,
    n_interior: usize,
    seed: u64,
) -> Result<Triangulation> {
    if !(r_out > r_in && r_in > 0.0) {
        return Err(Error::Topology("annulus needs 0 < r_in < r_out".into()));
    }
    let outer = LoopSpec {
        points: arc_points(Vec2::ZERO, r_out, 0.0, 2.0 * PI, n_out),
        seg_patch: vec![1; n_out],
        is_hole: false,
    };
    // Hole loop runs clockwise so the domain stays on the left.
    let inner = LoopSpec {
        points: arc_points(Vec2::ZERO, r_in, 2.0 * PI, 0.0, n_in),
        seg_patch: vec![0; n_in],
        is_hole: true,
    };
    let h_bnd = 2.0 * PI * r_in / n_in as f64;
    let loops = [inner, outer];
    let interior = scatter_interior(&loops, n_interior, 0.55 * h_bnd, seed)?;
    unstructured_from_loops(&loops, &[("inflow", 1), ("outflow", 2)], interior)
}

/// Annulus generator. Structured mode lays `n_r` rings of `n_theta` points
/// and splits each quad; unstructured mode sizes counts from `n_theta` on
/// the inner circle with near-uniform spacing. The radius ratio is honored
/// exactly: generated ring points sit on the requested circles.
pub fn generate_annulus(
    r_in: f64,
    r_out: f64,
    n_theta: usize,
    n_r: usize,
    unstructured: bool,
) -> Result<Triangulation> {
    if !(r_out > r_in && r_in > 0.0) {
        return Err(Error::Topology("annulus needs 0 < r_in < r_out".into()));
    }
    if n_theta < 3 || n_r < 1 {
        return Err(Error::Topology(
            "annulus needs n_theta >= 3 and n_r >= 1".into(),
        ));
    }
    if unstructured {
        let h = 2.0 * PI * r_in / n_theta as f64;
        let n_out = (2.0 * PI * r_out / h).round() as usize;
        let area = PI * (r_out * r_out - r_in * r_in);
        // Equilateral-lattice vertex density for spacing h.
        let n_total = (area / (0.866 * h * h)).round() as usize;
        let n_interior = n_total.saturating_sub(n_theta + n_out).max(1);
        return unstructured_annulus(r_in, r_out, n_theta, n_out, n_interior, 0x5eed);
    }
    let mut points = Vec::with_capacity(n_theta * (n_r + 1));
    for ir in 0..=n_r {
        let r = r_in + (r_out - r_in) * ir as f64 / n_r as f64;
        for it in 0..n_theta {
            let a = 2.0 * PI * it as f64 / n_theta as f64;
            points.push(Vec2::new(r * a.cos(), r * a.sin()));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n_theta * n_r);
    let id = |ir: usize, it: usize| ir * n_theta + (it % n_theta);
    for ir in 0..n_r {
        for it in 0..n_theta {
            let (a, b) = (id(ir, it), id(ir, it + 1));
            let (c, d) = (id(ir + 1, it + 1), id(ir + 1, it));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let inner_edges: Vec<[usize; 2]> = (0..n_theta).map(|it| [id(0, it + 1), id(0, it)]).collect();
    let outer_edges: Vec<[usize; 2]> = (0..n_theta).map(|it| [id(n_r, it), id(n_r, it + 1)]).collect();
    Triangulation::new(
        points,
        triangles,
        vec![
            Patch {
                name: "inflow".into(),
                marker: 1,
                edges: inner_edges,
            },
            Patch {
                name: "outflow".into(),
                marker: 2,
                edges: outer_edges,
            },
        ],
    )
}

/// Straight channel with a bottom-wall compression ramp. The bottom wall
/// runs from x = 0 to `x_ramp`, then rises at `ramp_deg` until `length`; the
/// top wall is flat at `height`. Patches: inflow (left), outflow (right),
/// wall_bottom, wall_top.
pub fn generate_channel(
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
) -> Result<Triangulation> {
    if !(x_ramp > 0.0 && x_ramp < length && height > 0.0) {
        return Err(Error::Topology("invalid channel dimensions".into()));
    }
    let tanr = (ramp_deg * PI / 180.0).tan();
    let y_end = (length - x_ramp) * tanr;
    if y_end >= height {
        return Err(Error::Topology("ramp reaches the top wall".into()));
    }
    let corner = Vec2::new(x_ramp, 0.0);
    let ramp_end = Vec2::new(length, y_end);
    let mut pts = Vec::new();
    let mut seg_patch = Vec::new();
    // CCW: bottom (patch 2), right/outflow (1), top (3), left/inflow (0).
    pts.extend(line_points(Vec2::ZERO, corner, n_bottom_pre));
    seg_patch.extend(std::iter::repeat(2).take(n_bottom_pre));
    // Rounded ramp points sit within an ulp of the exact line; an ulp-scale
    // outward bulge would let the Delaunay kernel emit zero-area boundary
    // slivers. Nudging interior ramp points a hair into the domain makes
    // every near-collinear triple decisively concave, which no empty
    // circumcircle can host.
    let ramp_in = (ramp_end - corner).normalized().rot90_ccw() * 1e-12;
    let mut ramp_pts = line_points(corner, ramp_end, n_bottom_ramp);
    for p in ramp_pts.iter_mut().skip(1) {
        *p += ramp_in;
    }
    pts.extend(ramp_pts);
    seg_patch.extend(std::iter::repeat(2).take(n_bottom_ramp));
    pts.extend(line_points(ramp_end, Vec2::new(length, height), n_right));
    seg_patch.extend(std::iter::repeat(1).take(n_right));
    pts.extend(line_points(
        Vec2::new(length, height),
        Vec2::new(0.0, height),
        n_top,
    ));
    seg_patch.extend(std::iter::repeat(3).take(n_top));
    pts.extend(line_points(Vec2::new(0.0, height), Vec2::ZERO, n_left));
    seg_patch.extend(std::iter::repeat(0).take(n_left));
    let h_bnd = x_ramp / n_bottom_pre as f64;
    let loops = [LoopSpec {
        points: pts,
        seg_patch,
        is_hole: false,
    }];
    let interior = scatter_interior(&loops, n_interior, 0.55 * h_bnd, seed)?;
    unstructured_from_loops(
        &loops,
        &[
            ("inflow", 1),
            ("outflow", 2),
            ("wall_bottom", 3),
            ("wall_top", 4),
        ],
        interior,
    )
}

/// Forebody domain of a circular cylinder of radius `r_body` centered at the
/// origin in a stream running toward +x: the region between the cylinder and
/// an outer circular arc of radius `r_outer`, above the symmetry line y = 0
/// and upstream of x = 0. Patches: inflow (outer arc), outflow (top segment
/// x = 0), wall (cylinder arc), symmetry (y = 0 segment).
pub fn generate_cylinder_forebody(
    r_body: f64,
    r_outer: f64,
    n_sym: usize,
    n_body: usize,
    n_out: usize,
    n_arc: usize,
    n_interior: usize,
    seed: u64,
) -> Result<Triangulation> {
    if !(r_outer > r_body && r_body > 0.0) {
        return Err(Error::Topology("forebody needs r_outer > r_body > 0".into()));
    }
    let mut pts = Vec::new();
    let mut seg_patch = Vec::new();
    // CCW loop: symmetry (-r_outer,0) -> (-r_body,0), cylinder arc up to
    // (0, r_body), outflow segment up to (0, r_outer), outer arc back.
    pts.extend(line_points(
        Vec2::new(-r_outer, 0.0),
        Vec2::new(-r_body, 0.0),
        n_sym,
    ));
    seg_patch.extend(std::iter::repeat(3).take(n_sym));
    pts.extend(arc_points(Vec2::ZERO, r_body, PI, 0.5 * PI, n_body));
    seg_patch.extend(std::iter::repeat(2).take(n_body));
    pts.extend(line_points(
        Vec2::new(0.0, r_body),
        Vec2::new(0.0, r_outer),
        n_out,
    ));
    seg_patch.extend(std::iter::repeat(1).take(n_out));
    pts.extend(arc_points(Vec2::ZERO, r_outer, 0.5 * PI, PI, n_arc));
    seg_patch.extend(std::iter::repeat(0).take(n_arc));
    let h_bnd = 0.5 * PI * r_body / n_body as f64;
    let loops = [LoopSpec {
        points: pts,
        seg_patch,
        is_hole: false,
    }];
    let interior = scatter_interior(&loops, n_interior, 0.55 * h_bnd, seed)?;
    unstructured_from_loops(
        &loops,
        &[
            ("inflow", 1),
            ("outflow", 2),
            ("wall", 3),
            ("symmetry", 4),
        ],
        interior,
    )
}

/// Nested 4-to-1 refinement: every edge gains its midpoint and every cell
/// splits into four similar children. Coarse points keep their ids, so fields
/// can be injected directly; boundary midpoints are not reprojected onto
/// curved geometry (the refined mesh nests exactly inside the coarse one).
pub fn refine(t: &Triangulation) -> Result<Triangulation> {
    let mut points = t.points.clone();
    let mut mid_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, points: &mut Vec<Vec2>| -> usize {
        let key = (a.min(b), a.max(b));
        *mid_of.entry(key).or_insert_with(|| {
            points.push((points[a] + points[b]) * 0.5);
            points.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * t.triangles.len());
    for tri in &t.triangles {
        let [a, b, c] = *tri;
        let ab = midpoint(a, b, &mut points);
        let bc = midpoint(b, c, &mut points);
        let ca = midpoint(c, a, &mut points);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let patches = t
        .patches
        .iter()
        .map(|p| {
            let mut edges = Vec::with_capacity(2 * p.edges.len());
            for e in &p.edges {
                let m = midpoint(e[0], e[1], &mut points);
                edges.push([e[0], m]);
                edges.push([m, e[1]]);
            }
            Patch {
                name: p.name.clone(),
                marker: p.marker,
                edges,
            }
        })
        .collect();
    Triangulation::new(points, triangles, patches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Connectivity, Mesh};

    #[test]
    fn structured_annulus_counts_and_geometry() {
        let t = generate_annulus(1.0, 2.0, 16, 4, false).unwrap();
        assert_eq!(t.points.len(), 16 * 5);
        assert_eq!(t.triangles.len(), 2 * 16 * 4);
        let mesh = Mesh::build(t).unwrap();
        assert!(mesh.max_dual_closure_defect() < 1e-13);
        // Radius ratio honored exactly on the generated rings.
        let inflow = mesh.patch_id("inflow").unwrap();
        for be in &mesh.conn.boundary_edges {
            let r = mesh.tri.points[be.dir[0]].norm();
            if be.patch == inflow {
                assert!((r - 1.0).abs() < 1e-14);
            } else {
                assert!((r - 2.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn tiny_annulus_is_conforming() {
        let t = generate_annulus(1.0, 2.0, 4, 2, false).unwrap();
        let conn = Connectivity::build(&t).unwrap();
        assert!(conn.euler_consistent(t.triangles.len()));
    }

    #[test]
    fn unstructured_annulus_hits_exact_counts() {
        let t = unstructured_annulus(1.0, 2.0, 48, 96, 520, 7).unwrap();
        assert_eq!(t.points.len(), 48 + 96 + 520);
        // An annulus triangulation satisfies T = 2V - B.
        assert_eq!(t.triangles.len(), 2 * t.points.len() - 144);
        let mesh = Mesh::build(t).unwrap();
        assert!(mesh.max_dual_closure_defect() < 1e-13);
    }

    #[test]
    fn channel_with_ramp_is_valid() {
        let t = generate_channel(3.0, 1.0, 1.0, 14.0, 12, 24, 10, 36, 12, 320, 3).unwrap();
        let mesh = Mesh::build(t).unwrap();
        assert!(mesh.max_dual_closure_defect() < 1e-13);
        assert_eq!(mesh.tri.patches.len(), 4);
        // Ramp wall nodes lie on the 14-degree line.
        let tanr = (14.0_f64).to_radians().tan();
        let wb = mesh.patch_id("wall_bottom").unwrap();
        for be in &mesh.conn.boundary_edges {
            if be.patch == wb {
                for &n in &be.dir {
                    let p = mesh.tri.points[n];
                    let y_wall = if p.x <= 1.0 { 0.0 } else { (p.x - 1.0) * tanr };
                    assert!((p.y - y_wall).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn forebody_is_valid() {
        let t = generate_cylinder_forebody(1.0, 2.2, 10, 14, 10, 30, 260, 5).unwrap();
        let mesh = Mesh::build(t).unwrap();
        assert!(mesh.max_dual_closure_defect() < 1e-13);
        let wall = mesh.patch_id("wall").unwrap();
        for be in &mesh.conn.boundary_edges {
            if be.patch == wall {
                assert!((mesh.tri.points[be.dir[0]].norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn refinement_is_nested_four_to_one() {
        let t0 = generate_annulus(1.0, 2.0, 12, 3, false).unwrap();
        let conn0 = Connectivity::build(&t0).unwrap();
        let t1 = refine(&t0).unwrap();
        assert_eq!(t1.points.len(), t0.points.len() + conn0.edges.len());
        assert_eq!(t1.triangles.len(), 4 * t0.triangles.len());
        let conn1 = Connectivity::build(&t1).unwrap();
        assert_eq!(
            conn1.boundary_edges.len(),
            2 * conn0.boundary_edges.len()
        );
        // Coarse points keep ids and positions.
        for (i, p) in t0.points.iter().enumerate() {
            assert_eq!(t1.points[i], *p);
        }
        Mesh::build(t1).unwrap();
    }
}
