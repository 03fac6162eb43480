//! Nodal least-squares gradients of the primitive variables and
//! monotonicity limiters for linear reconstruction.

use crate::gas::PrimitiveState;
use crate::geom::Vec2;
use crate::mesh::Mesh;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Limiter {
    None,
    #[default]
    BarthJespersen,
    Venkatakrishnan,
    /// Symmetric slope average; meaningful for the one-dimensional solver,
    /// treated as BarthJespersen in two dimensions.
    VanAlbada,
}

#[inline]
fn prim_array(w: &PrimitiveState) -> [f64; 4] {
    [w.rho, w.u, w.v, w.p]
}

/// Inverse-distance-weighted least-squares gradient of each primitive
/// variable at every live node, using edge neighbors whose connecting edge
/// is active. Nodes with fewer than two independent directions get zero
/// gradient (first-order fallback).
pub fn lsq_gradients(
    mesh: &Mesh,
    w: &[PrimitiveState],
    alive: &[bool],
    edge_active: &[bool],
) -> Vec<[Vec2; 4]> {
    par::map_indexed(mesh.tri.points.len(), |i| {
        if !alive[i] {
            return [Vec2::ZERO; 4];
        }
        let wi = prim_array(&w[i]);
        let xi = mesh.tri.points[i];
        // Normal equations: sum w d d^T  g = sum w d (f_j - f_i).
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        let mut rhs = [Vec2::ZERO; 4];
        for &e in mesh.conn.node_edges.row(i) {
            if !edge_active[e] {
                continue;
            }
            let en = mesh.conn.edges[e].nodes;
            let j = if en[0] == i { en[1] } else { en[0] };
            if !alive[j] {
                continue;
            }
            let d = mesh.tri.points[j] - xi;
            let wgt = 1.0 / d.norm2();
            sxx += wgt * d.x * d.x;
            sxy += wgt * d.x * d.y;
            syy += wgt * d.y * d.y;
            let wj = prim_array(&w[j]);
            for k in 0..4 {
                rhs[k] += d * (wgt * (wj[k] - wi[k]));
            }
        }
        let det = sxx * syy - sxy * sxy;
        if det <= 1e-14 * (sxx * syy).max(1e-300) {
            return [Vec2::ZERO; 4];
        }
        let mut g = [Vec2::ZERO; 4];
        for k in 0..4 {
            g[k] = Vec2::new(
                (syy * rhs[k].x - sxy * rhs[k].y) / det,
                (sxx * rhs[k].y - sxy * rhs[k].x) / det,
            );
        }
        g
    })
}

/// Per-node, per-variable limiter factors in [0, 1] for reconstruction to
/// the midpoints of active incident edges.
pub fn limiter_factors(
    mesh: &Mesh,
    w: &[PrimitiveState],
    grads: &[[Vec2; 4]],
    alive: &[bool],
    edge_active: &[bool],
    limiter: Limiter,
) -> Vec<[f64; 4]> {
    if matches!(limiter, Limiter::None) {
        return vec![[1.0; 4]; mesh.tri.points.len()];
    }
    par::map_indexed(mesh.tri.points.len(), |i| {
        if !alive[i] {
            return [0.0; 4];
        }
        let wi = prim_array(&w[i]);
        let xi = mesh.tri.points[i];
        let mut wmin = wi;
        let mut wmax = wi;
        for &e in mesh.conn.node_edges.row(i) {
            if !edge_active[e] {
                continue;
            }
            let en = mesh.conn.edges[e].nodes;
            let j = if en[0] == i { en[1] } else { en[0] };
            if !alive[j] {
                continue;
            }
            let wj = prim_array(&w[j]);
            for k in 0..4 {
                wmin[k] = wmin[k].min(wj[k]);
                wmax[k] = wmax[k].max(wj[k]);
            }
        }
        // Venkatakrishnan smoothing scale per node, cubed cell size.
        let eps2 = {
            let h = mesh.geo.dual_area[i].sqrt();
            let k = 5.0 * h;
            k * k * k
        };
        let mut phi = [1.0_f64; 4];
        for &e in mesh.conn.node_edges.row(i) {
            if !edge_active[e] {
                continue;
            }
            let en = mesh.conn.edges[e].nodes;
            let j = if en[0] == i { en[1] } else { en[0] };
            if !alive[j] {
                continue;
            }
            let xm = (xi + mesh.tri.points[j]) * 0.5;
            for k in 0..4 {
                let d = grads[i][k].dot(xm - xi);
                if d.abs() < 1e-14 * wi[k].abs().max(1e-14) {
                    continue;
                }
                let dm = if d > 0.0 { wmax[k] - wi[k] } else { wmin[k] - wi[k] };
                let p = match limiter {
                    Limiter::Venkatakrishnan => {
                        (dm * dm + eps2 + 2.0 * dm * d)
                            / (dm * dm + 2.0 * d * d + dm * d + eps2)
                    }
                    _ => (dm / d).min(1.0),
                };
                phi[k] = phi[k].min(p.clamp(0.0, 1.0));
            }
        }
        phi
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::generate_channel;

    fn channel_mesh() -> Mesh {
        Mesh::build(generate_channel(2.0, 1.0, 1.2, 0.5, 10, 5, 6, 14, 6, 60, 42).unwrap())
            .unwrap()
    }

    fn all_true(n: usize) -> Vec<bool> {
        vec![true; n]
    }

    #[test]
    fn gradients_exact_for_linear_fields() {
        let mesh = channel_mesh();
        let n = mesh.tri.points.len();
        let w: Vec<PrimitiveState> = mesh
            .tri
            .points
            .iter()
            .map(|p| {
                PrimitiveState::new(
                    2.0 + 0.3 * p.x - 0.7 * p.y,
                    1.0 + 0.5 * p.y,
                    -2.0 * p.x,
                    5.0 + p.x + p.y,
                )
            })
            .collect();
        let g = lsq_gradients(
            &mesh,
            &w,
            &all_true(n),
            &all_true(mesh.conn.edges.len()),
        );
        let exact = [
            Vec2::new(0.3, -0.7),
            Vec2::new(0.0, 0.5),
            Vec2::new(-2.0, 0.0),
            Vec2::new(1.0, 1.0),
        ];
        for gi in &g {
            for k in 0..4 {
                assert!(
                    (gi[k] - exact[k]).norm() < 1e-10,
                    "got {:?} want {:?}",
                    gi[k],
                    exact[k]
                );
            }
        }
    }

    #[test]
    fn limiter_unity_on_linear_fields_and_bounded_on_rough_ones() {
        let mesh = channel_mesh();
        let n = mesh.tri.points.len();
        let alive = all_true(n);
        let eact = all_true(mesh.conn.edges.len());
        let linear: Vec<PrimitiveState> = mesh
            .tri
            .points
            .iter()
            .map(|p| PrimitiveState::new(2.0 + p.x, 1.0, 0.5, 3.0 - p.y))
            .collect();
        let g = lsq_gradients(&mesh, &linear, &alive, &eact);
        let phi = limiter_factors(&mesh, &linear, &g, &alive, &eact, Limiter::BarthJespersen);
        for (i, f) in phi.iter().enumerate() {
            // Midpoint reconstruction of a linear field never overshoots
            // the neighbor values, so the limiter must stay inactive.
            assert!(f[0] > 1.0 - 1e-9, "node {i}: {f:?}");
            assert!(f[3] > 1.0 - 1e-9, "node {i}: {f:?}");
        }
        let rough: Vec<PrimitiveState> = mesh
            .tri
            .points
            .iter()
            .map(|p| {
                PrimitiveState::new(
                    2.0 + (13.0 * p.x).sin() + (17.0 * p.y).cos(),
                    (9.0 * p.x * p.y).sin(),
                    0.0,
                    3.0 + (21.0 * p.x).cos(),
                )
            })
            .collect();
        let g = lsq_gradients(&mesh, &rough, &alive, &eact);
        for lim in [Limiter::BarthJespersen, Limiter::Venkatakrishnan] {
            let phi = limiter_factors(&mesh, &rough, &g, &alive, &eact, lim);
            for f in &phi {
                for k in 0..4 {
                    assert!((0.0..=1.0).contains(&f[k]));
                }
            }
        }
        // Barth-Jespersen keeps every limited midpoint value within the
        // stencil bounds.
        let phi = limiter_factors(&mesh, &rough, &g, &alive, &eact, Limiter::BarthJespersen);
        for i in 0..n {
            let wi = rough[i].rho;
            let mut lo = wi;
            let mut hi = wi;
            for &e in mesh.conn.node_edges.row(i) {
                let en = mesh.conn.edges[e].nodes;
                let j = if en[0] == i { en[1] } else { en[0] };
                lo = lo.min(rough[j].rho);
                hi = hi.max(rough[j].rho);
            }
            for &e in mesh.conn.node_edges.row(i) {
                let en = mesh.conn.edges[e].nodes;
                let j = if en[0] == i { en[1] } else { en[0] };
                let xm = (mesh.tri.points[i] + mesh.tri.points[j]) * 0.5;
                let v = wi + phi[i][0] * g[i][0].dot(xm - mesh.tri.points[i]);
                assert!(v >= lo - 1e-10 && v <= hi + 1e-10);
            }
        }
    }

    #[test]
    fn masked_neighbors_are_ignored() {
        let mesh = channel_mesh();
        let n = mesh.tri.points.len();
        let mut w: Vec<PrimitiveState> = mesh
            .tri
            .points
            .iter()
            .map(|p| PrimitiveState::new(1.0 + p.x, 0.0, 0.0, 1.0))
            .collect();
        // Poison one node; deactivating all its edges must keep every other
        // gradient exact.
        let victim = n / 2;
        w[victim] = PrimitiveState::new(1e6, 0.0, 0.0, 1.0);
        let mut eact = all_true(mesh.conn.edges.len());
        for &e in mesh.conn.node_edges.row(victim) {
            eact[e] = false;
        }
        let mut alive = all_true(n);
        alive[victim] = false;
        let g = lsq_gradients(&mesh, &w, &alive, &eact);
        for (i, gi) in g.iter().enumerate() {
            if i == victim {
                assert_eq!(gi[0], Vec2::ZERO);
                continue;
            }
            assert!((gi[0] - Vec2::new(1.0, 0.0)).norm() < 1e-9, "node {i}: {:?}", gi[0]);
        }
    }
}
