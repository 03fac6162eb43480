//! Plane geometry kernel: vectors, orientation tests, segment intersection,
//! barycentric coordinates, and a uniform-grid broad phase.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product `self x o`.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    #[inline]
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Rotation by +90 degrees (counterclockwise).
    #[inline]
    pub fn rot90_ccw(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Rotation by -90 degrees (clockwise).
    #[inline]
    pub fn rot90_cw(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

/// Twice the signed area of triangle (a, b, c); positive for counterclockwise.
#[inline]
pub fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Signed area of triangle (a, b, c).
#[inline]
pub fn tri_signed_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * orient(a, b, c)
}

/// Barycentric coordinates of `p` with respect to triangle (a, b, c).
/// Returns `None` for a degenerate (zero-area) triangle.
pub fn barycentric(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> Option<[f64; 3]> {
    let total = orient(a, b, c);
    let scale = (b - a).norm2() + (c - a).norm2();
    if total.abs() <= 1e-14 * scale {
        return None;
    }
    let la = orient(p, b, c) / total;
    let lb = orient(a, p, c) / total;
    let lc = orient(a, b, p) / total;
    Some([la, lb, lc])
}

/// Closed point-in-triangle test: boundary points count as inside.
/// `tol` is a relative slack on the barycentric coordinates.
pub fn point_in_tri_closed(p: Vec2, a: Vec2, b: Vec2, c: Vec2, tol: f64) -> bool {
    match barycentric(p, a, b, c) {
        Some(l) => l.iter().all(|&li| li >= -tol),
        None => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegSeg {
    None,
    /// Transversal crossing strictly inside both segments.
    Proper { point: Vec2, t: f64, u: f64 },
    /// Contact at an endpoint of at least one segment.
    Touch { point: Vec2, t: f64, u: f64 },
    /// Collinear segments sharing more than a point; parameters are the
    /// overlap interval on the first segment.
    CollinearOverlap { t0: f64, t1: f64 },
}

/// Intersection of segments p1-p2 and p3-p4 with contact classification.
/// `t` parametrizes the first segment, `u` the second.
pub fn seg_seg_intersection(p1: Vec2, p2: Vec2, p3: Vec2, p4: Vec2) -> SegSeg {
    let r = p2 - p1;
    let s = p4 - p3;
    // Orientation magnitudes scale as area; zero-tests use an area tolerance.
    let tol = 1e-12 * (r.norm2().max(s.norm2()) + (p3 - p1).norm2());
    let rxs = r.cross(s);
    let qp = p3 - p1;
    if rxs.abs() <= tol {
        if qp.cross(r).abs() > tol {
            return SegSeg::None; // parallel, not collinear
        }
        // Collinear: project the second segment onto the first.
        let rr = r.norm2();
        if rr == 0.0 {
            return SegSeg::None;
        }
        let t0 = qp.dot(r) / rr;
        let t1 = (p4 - p1).dot(r) / rr;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        let span_tol = 1e-12;
        if hi < lo - span_tol {
            return SegSeg::None;
        }
        if hi - lo <= span_tol {
            let t = 0.5 * (lo + hi);
            return SegSeg::Touch {
                point: p1 + r * t,
                t,
                u: 0.0,
            };
        }
        return SegSeg::CollinearOverlap { t0: lo, t1: hi };
    }
    let t = qp.cross(s) / rxs;
    let u = qp.cross(r) / rxs;
    let pt = 1e-12;
    if t < -pt || t > 1.0 + pt || u < -pt || u > 1.0 + pt {
        return SegSeg::None;
    }
    let point = p1 + r * t;
    let endpointish = t < pt || t > 1.0 - pt || u < pt || u > 1.0 - pt;
    if endpointish {
        SegSeg::Touch { point, t, u }
    } else {
        SegSeg::Proper { point, t, u }
    }
}

/// Whether segment a-b meets the closed triangle (p, q, r), including
/// single-vertex contact and full containment.
pub fn seg_intersects_tri(a: Vec2, b: Vec2, p: Vec2, q: Vec2, r: Vec2, tol: f64) -> bool {
    if point_in_tri_closed(a, p, q, r, tol) || point_in_tri_closed(b, p, q, r, tol) {
        return true;
    }
    for (e0, e1) in [(p, q), (q, r), (r, p)] {
        if !matches!(seg_seg_intersection(a, b, e0, e1), SegSeg::None) {
            return true;
        }
    }
    false
}

/// Distance from `p` to segment a-b together with the closest point's
/// parameter in [0, 1].
pub fn closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> (f64, Vec2) {
    let ab = b - a;
    let den = ab.norm2();
    let t = if den > 0.0 {
        ((p - a).dot(ab) / den).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (t, a + ab * t)
}

/// First intersection of the ray `origin + t * dir` (t >= 0) with segment a-b.
/// Returns (t, u) with u the parameter on the segment.
pub fn ray_segment_intersection(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
    let s = b - a;
    let rxs = dir.cross(s);
    let tol = 1e-14 * (dir.norm2().max(s.norm2()) + 1.0);
    if rxs.abs() <= tol {
        return None;
    }
    let qp = a - origin;
    let t = qp.cross(s) / rxs;
    let u = qp.cross(dir) / rxs;
    let slack = 1e-10;
    if t >= -slack && (-slack..=1.0 + slack).contains(&u) {
        Some((t.max(0.0), u.clamp(0.0, 1.0)))
    } else {
        None
    }
}

/// Strict interior test for a simple quadrilateral given in boundary order.
/// Points on the boundary are outside.
pub fn point_strictly_in_quad(p: Vec2, q: &[Vec2; 4], tol: f64) -> bool {
    // Reject boundary contact first, then use crossing parity.
    let scale = (q[2] - q[0]).norm().max((q[3] - q[1]).norm());
    for i in 0..4 {
        let (a, b) = (q[i], q[(i + 1) % 4]);
        let (_, cp) = closest_point_on_segment(p, a, b);
        if p.dist(cp) <= tol * scale.max(1e-300) {
            return false;
        }
    }
    let mut inside = false;
    for i in 0..4 {
        let (a, b) = (q[i], q[(i + 1) % 4]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_hit = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x_hit > p.x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Strict interior test for a simple polygon; boundary points are outside.
pub fn point_strictly_in_polygon(p: Vec2, poly: &[Vec2], tol: f64) -> bool {
    let mut scale: f64 = 0.0;
    for w in poly.windows(2) {
        scale = scale.max((w[1] - w[0]).norm());
    }
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (_, cp) = closest_point_on_segment(p, a, b);
        if p.dist(cp) <= tol * scale.max(1e-300) {
            return false;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_hit = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x_hit > p.x {
                inside = !inside;
            }
        }
    }
    inside
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec2::new(f64::INFINITY, f64::INFINITY),
            max: Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn of_points(pts: impl IntoIterator<Item = Vec2>) -> Self {
        let mut b = Aabb::empty();
        for p in pts {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: Vec2) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn inflate(&self, d: f64) -> Aabb {
        Aabb {
            min: self.min - Vec2::new(d, d),
            max: self.max + Vec2::new(d, d),
        }
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }
}

/// Uniform-grid broad phase over items with bounding boxes. Queries return
/// candidate item ids; callers run the exact predicate on candidates.
#[derive(Debug, Clone)]
pub struct UniformBins {
    domain: Aabb,
    nx: usize,
    ny: usize,
    inv_dx: f64,
    inv_dy: f64,
    cells: Vec<Vec<u32>>,
}

impl UniformBins {
    /// Builds bins sized so an average cell holds a handful of items.
    pub fn build(domain: Aabb, items: &[Aabb]) -> Self {
        let w = (domain.max.x - domain.min.x).max(1e-300);
        let h = (domain.max.y - domain.min.y).max(1e-300);
        let n_items = items.len().max(1);
        let target = ((n_items as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let aspect = (w / h).sqrt();
        let nx = ((target as f64 * aspect).round() as usize).clamp(1, 4096);
        let ny = ((target as f64 / aspect).round() as usize).clamp(1, 4096);
        let mut bins = UniformBins {
            domain,
            nx,
            ny,
            inv_dx: nx as f64 / w,
            inv_dy: ny as f64 / h,
            cells: vec![Vec::new(); nx * ny],
        };
        for (id, bb) in items.iter().enumerate() {
            let (i0, j0, i1, j1) = bins.cell_range(bb);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    bins.cells[j * bins.nx + i].push(id as u32);
                }
            }
        }
        bins
    }

    fn cell_range(&self, bb: &Aabb) -> (usize, usize, usize, usize) {
        let clampi = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        let i0 = clampi((bb.min.x - self.domain.min.x) * self.inv_dx, self.nx);
        let i1 = clampi((bb.max.x - self.domain.min.x) * self.inv_dx, self.nx);
        let j0 = clampi((bb.min.y - self.domain.min.y) * self.inv_dy, self.ny);
        let j1 = clampi((bb.max.y - self.domain.min.y) * self.inv_dy, self.ny);
        (i0, j0, i1, j1)
    }

    /// Candidate item ids whose boxes may overlap `bb`, deduplicated.
    pub fn query(&self, bb: &Aabb) -> Vec<u32> {
        let (i0, j0, i1, j1) = self.cell_range(bb);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(&self.cells[j * self.nx + i]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
