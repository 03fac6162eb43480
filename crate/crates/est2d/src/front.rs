//! The tracked shock polyline: storage, differential geometry with
//! flow-aware upwinding, arclength redistribution, and boundary attachment.

use crate::error::{Error, Result};
use crate::gas::{GasModel, ParameterState};
use crate::geom::{self, Vec2};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointKind {
    Free,
    /// Endpoint slides along the given boundary patch.
    Attached { patch: usize },
}

/// One-sided tangent reconstruction at points whose forward neighbor is
/// outside the domain of dependence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OneSidedTangent {
    /// Linear extrapolation of the two upwind chord directions; second
    /// order on smooth fronts.
    #[default]
    Extrapolated,
    /// Positive blend of the two upwind chords weighted by squared lengths.
    /// Kept for comparison: its angle error is first order (biased toward
    /// the upwind side), which the order tests document.
    Blended,
}

#[derive(Debug, Clone, Copy)]
pub struct ShockPoint {
    pub x: Vec2,
    /// Upstream-side state in parameter variables.
    pub z_up: ParameterState,
    /// Downstream-side state in parameter variables.
    pub z_down: ParameterState,
    /// Normal displacement speed along `n`.
    pub w: f64,
    /// Unit normal pointing from the downstream region toward upstream.
    pub n: Vec2,
    /// Unit tangent along increasing point index.
    pub tau: Vec2,
}

impl ShockPoint {
    pub fn new(x: Vec2) -> Self {
        ShockPoint {
            x,
            z_up: ParameterState::default(),
            z_down: ParameterState::default(),
            w: 0.0,
            n: Vec2::ZERO,
            tau: Vec2::ZERO,
        }
    }
}

/// Which tangent stencil was used at a point, for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentCase {
    Central,
    UpwindMinus,
    UpwindPlus,
    EndpointOneSided,
    Chord,
}

#[derive(Debug, Clone)]
pub struct ShockFront {
    pub points: Vec<ShockPoint>,
    /// Closed polylines wrap around; open ones have endpoint kinds.
    pub closed: bool,
    /// True if the upstream region lies on the left of the direction of
    /// increasing index; fixes the sign of `n` = left/right normal of `tau`.
    pub upstream_left: bool,
    pub endpoints: [EndpointKind; 2],
    /// Target shock-edge length for redistribution.
    pub l_sh: f64,
    pub one_sided: OneSidedTangent,
    /// Stencil used at each point by the last tangent computation.
    pub last_cases: Vec<TangentCase>,
}

impl ShockFront {
    pub fn new(positions: Vec<Vec2>, closed: bool, upstream_left: bool, l_sh: f64) -> Result<Self> {
        if positions.len() < 2 || (closed && positions.len() < 3) {
            return Err(Error::Front("front needs at least 2 points (3 if closed)".into()));
        }
        let front = ShockFront {
            points: positions.into_iter().map(ShockPoint::new).collect(),
            closed,
            upstream_left,
            endpoints: [EndpointKind::Free; 2],
            l_sh,
            one_sided: OneSidedTangent::default(),
            last_cases: Vec::new(),
        };
        front.validate_geometry()?;
        Ok(front)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of polyline segments.
    pub fn n_segments(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    /// Endpoints of segment k in index order.
    pub fn segment(&self, k: usize) -> (Vec2, Vec2) {
        let n = self.points.len();
        (self.points[k].x, self.points[(k + 1) % n].x)
    }

    /// Geometric unit normal of segment k, pointing into the upstream
    /// region. Purely positional; does not require computed tangents.
    pub fn segment_normal(&self, k: usize) -> Vec2 {
        let (a, b) = self.segment(k);
        let tau = (b - a).normalized();
        if self.upstream_left {
            tau.rot90_ccw()
        } else {
            tau.rot90_cw()
        }
    }

    fn neighbor(&self, i: usize, step: isize) -> Option<usize> {
        let n = self.points.len() as isize;
        let j = i as isize + step;
        if self.closed {
            Some(j.rem_euclid(n) as usize)
        } else if (0..n).contains(&j) {
            Some(j as usize)
        } else {
            None
        }
    }

    /// Distinct consecutive points and a simple (non-self-intersecting)
    /// polyline.
    pub fn validate_geometry(&self) -> Result<()> {
        let ns = self.n_segments();
        let mut min_l = f64::INFINITY;
        for k in 0..ns {
            let (a, b) = self.segment(k);
            let l = a.dist(b);
            if l == 0.0 {
                return Err(Error::Front(format!("zero-length shock edge {k}")));
            }
            min_l = min_l.min(l);
        }
        for k in 0..ns {
            let (a, b) = self.segment(k);
            for m in k + 1..ns {
                // Adjacent segments legitimately share an endpoint.
                let adjacent = m == k + 1 || (self.closed && k == 0 && m == ns - 1);
                if adjacent {
                    continue;
                }
                let (c, d) = self.segment(m);
                if !matches!(geom::seg_seg_intersection(a, b, c, d), geom::SegSeg::None) {
                    return Err(Error::Front(format!(
                        "shock polyline self-intersects (segments {k} and {m})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Cumulative arclength at each point; for closed fronts the final entry
    /// (total length) includes the wrap segment.
    pub fn arclengths(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.points.len() + 1);
        s.push(0.0);
        for k in 0..self.n_segments() {
            let (a, b) = self.segment(k);
            s.push(s[k] + a.dist(b));
        }
        s
    }

    pub fn total_arclength(&self) -> f64 {
        *self.arclengths().last().unwrap()
    }

    /// True if neighbor `j` (= i-1 or i+1) lies in the domain of dependence
    /// of point `i`: the downstream flow at `j`, projected on the chord from
    /// `i` toward `j`, is subsonic, so signals from `j` reach `i`.
    pub fn domain_of_dependence_test(&self, gas: &GasModel, i: usize, j: usize) -> Result<bool> {
        let chord = (self.points[j].x - self.points[i].x).normalized();
        let wj = gas.parameter_to_primitive(&self.points[j].z_down)?;
        Ok(wj.velocity().dot(chord) - gas.sound_speed(&wj) < 0.0)
    }

    /// Unit chord from point a to point b and its length.
    fn chord(&self, a: usize, b: usize) -> (Vec2, f64) {
        let d = self.points[b].x - self.points[a].x;
        let l = d.norm();
        (d / l, l)
    }

    /// One-sided tangent using the two chords on the `minus` side of i
    /// (points i-2, i-1, i) or, mirrored, the `plus` side (i, i+1, i+2).
    /// Degrades to the single adjacent chord when only one is available.
    fn one_sided_tangent(&self, i: usize, minus: bool) -> Option<Vec2> {
        let (j1, j2) = if minus { (-1isize, -2) } else { (1, 2) };
        let p1 = self.neighbor(i, j1)?;
        // Both chords oriented along increasing index.
        let (t_near, l_near) = if minus { self.chord(p1, i) } else { self.chord(i, p1) };
        let Some(p2) = self.neighbor(i, j2) else {
            return Some(t_near);
        };
        let (t_far, l_far) = if minus { self.chord(p2, p1) } else { self.chord(p1, p2) };
        let v = match self.one_sided {
            OneSidedTangent::Extrapolated => {
                t_near + (t_near - t_far) * (l_near / (l_near + l_far))
            }
            OneSidedTangent::Blended => {
                t_near * (l_near + l_far).powi(2) + (t_near + t_far) * (l_near * l_near)
            }
        };
        Some(v.normalized())
    }

    fn central_tangent(&self, i: usize) -> Option<Vec2> {
        let im = self.neighbor(i, -1)?;
        let ip = self.neighbor(i, 1)?;
        let (t_m, l_m) = self.chord(im, i);
        let (t_p, l_p) = self.chord(i, ip);
        Some((t_p * (l_m * l_m) + t_m * (l_p * l_p)).normalized())
    }

    /// Sets `tau` and `n` from geometry alone (central stencils inside,
    /// one-sided chords at open ends), for use before any states exist at
    /// the points; the flow-aware pass refines the stencil choice later.
    pub fn compute_geometric_normals(&mut self) {
        let n_pts = self.points.len();
        let mut taus = Vec::with_capacity(n_pts);
        for i in 0..n_pts {
            let tau = self
                .central_tangent(i)
                .or_else(|| self.one_sided_tangent(i, self.neighbor(i, -1).is_some()))
                .expect("front has at least one segment");
            taus.push(tau);
        }
        for (p, tau) in self.points.iter_mut().zip(taus) {
            p.tau = tau;
            p.n = if self.upstream_left { tau.rot90_ccw() } else { tau.rot90_cw() };
        }
    }

    /// Sets `tau` and `n` at every point. Interior stencils are chosen by
    /// the domain-of-dependence test on the downstream states; `n` is the
    /// left or right normal of `tau` per `upstream_left`, and is checked for
    /// compressivity against the stored states when they carry a clear jump.
    pub fn compute_tangents_normals(&mut self, gas: &GasModel) -> Result<()> {
        let n_pts = self.points.len();
        self.last_cases.clear();
        self.last_cases.reserve(n_pts);
        let mut taus = Vec::with_capacity(n_pts);
        for i in 0..n_pts {
            let has_minus = self.neighbor(i, -1).is_some();
            let has_plus = self.neighbor(i, 1).is_some();
            let (tau, case) = if has_minus && has_plus {
                let in_minus = self.domain_of_dependence_test(gas, i, self.neighbor(i, -1).unwrap())?;
                let in_plus = self.domain_of_dependence_test(gas, i, self.neighbor(i, 1).unwrap())?;
                if in_plus && !in_minus {
                    match self.one_sided_tangent(i, false) {
                        Some(t) => (t, TangentCase::UpwindPlus),
                        None => (self.central_tangent(i).unwrap(), TangentCase::Central),
                    }
                } else if in_minus && !in_plus {
                    match self.one_sided_tangent(i, true) {
                        Some(t) => (t, TangentCase::UpwindMinus),
                        None => (self.central_tangent(i).unwrap(), TangentCase::Central),
                    }
                } else {
                    // Both in the domain of dependence (the common case); if
                    // neither is, the front is kinked beyond repair and the
                    // central stencil is still the best-conditioned choice.
                    (self.central_tangent(i).unwrap(), TangentCase::Central)
                }
            } else if has_minus {
                match self.one_sided_tangent(i, true) {
                    Some(t) => (t, TangentCase::EndpointOneSided),
                    None => (self.chord(self.neighbor(i, -1).unwrap(), i).0, TangentCase::Chord),
                }
            } else {
                match self.one_sided_tangent(i, false) {
                    Some(t) => (t, TangentCase::EndpointOneSided),
                    None => (self.chord(i, self.neighbor(i, 1).unwrap()).0, TangentCase::Chord),
                }
            };
            taus.push(tau);
            self.last_cases.push(case);
        }
        for (i, tau) in taus.into_iter().enumerate() {
            let n = if self.upstream_left {
                tau.rot90_ccw()
            } else {
                tau.rot90_cw()
            };
            self.points[i].tau = tau;
            self.points[i].n = n;
        }
        self.check_orientation(gas)
    }

    /// The jump must be compressive with respect to `n`: the upstream normal
    /// velocity relative to the front exceeds the downstream one, so
    /// (u_up - u_down) . n < 0 for n pointing toward upstream. States with
    /// no discernible jump are skipped.
    fn check_orientation(&self, gas: &GasModel) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            if p.z_up.z1 <= 0.0 || p.z_down.z1 <= 0.0 {
                continue; // states not seeded yet
            }
            let wu = gas.parameter_to_primitive(&p.z_up)?;
            let wd = gas.parameter_to_primitive(&p.z_down)?;
            let du = (wu.velocity() - wd.velocity()).dot(p.n);
            let a_up = gas.sound_speed(&wu);
            if du > 1e-8 * a_up {
                return Err(Error::Front(format!(
                    "orientation check failed at shock point {i}: the stored states place \
                     upstream on the other side; reorder the polyline or flip upstream_left"
                )));
            }
        }
        Ok(())
    }

    /// Replaces the points by a uniform-arclength resampling with edge
    /// length as close as possible to `l_sh`; endpoint positions are kept
    /// exactly on open fronts. States and speed are interpolated linearly in
    /// arclength; tangents and normals must be recomputed afterwards.
    pub fn redistribute(&mut self, l_sh: f64) -> Result<()> {
        if !(l_sh > 0.0) {
            return Err(Error::Front(format!("target edge length must be positive, got {l_sh}")));
        }
        let s = self.arclengths();
        let total = *s.last().unwrap();
        let n_seg = (total / l_sh).round() as usize;
        if n_seg < 1 || (self.closed && n_seg < 3) {
            return Err(Error::Front(format!(
                "target edge length {l_sh} exceeds the front arclength {total}; \
                 the front would collapse"
            )));
        }
        let n_new = if self.closed { n_seg } else { n_seg + 1 };
        let step = total / n_seg as f64;
        let mut new_points = Vec::with_capacity(n_new);
        let mut seg = 0usize;
        let n_old = self.points.len();
        for k in 0..n_new {
            let target = if !self.closed && k == n_new - 1 {
                total // land on the last point exactly despite rounding
            } else {
                step * k as f64
            };
            while seg + 1 < s.len() - 1 && s[seg + 1] < target {
                seg += 1;
            }
            let (ia, ib) = (seg, (seg + 1) % n_old);
            let ds = s[seg + 1] - s[seg];
            let t = if ds > 0.0 { (target - s[seg]) / ds } else { 0.0 };
            let (pa, pb) = (&self.points[ia], &self.points[ib]);
            let mut np = ShockPoint::new(pa.x.lerp(pb.x, t));
            if !self.closed && k == n_new - 1 {
                np.x = self.points[n_old - 1].x;
            }
            if !self.closed && k == 0 {
                np.x = self.points[0].x;
            }
            np.z_up = pa.z_up + (pb.z_up - pa.z_up) * t;
            np.z_down = pa.z_down + (pb.z_down - pa.z_down) * t;
            np.w = pa.w + (pb.w - pa.w) * t;
            new_points.push(np);
        }
        self.points = new_points;
        self.l_sh = l_sh;
        self.last_cases.clear();
        Ok(())
    }

    /// Snaps attached endpoints onto their boundary patch polylines; free
    /// endpoints and closed fronts are untouched.
    pub fn attach_endpoints_to_boundary(&mut self, mesh: &Mesh) -> Result<()> {
        if self.closed {
            return Ok(());
        }
        let last = self.points.len() - 1;
        for (slot, idx) in [(0usize, 0usize), (1, last)] {
            if let EndpointKind::Attached { patch } = self.endpoints[slot] {
                let p = self.points[idx].x;
                self.points[idx].x = project_to_patch(mesh, patch, p)?;
            }
        }
        Ok(())
    }

    /// Writes the front as CSV with columns: arclength, position, normal,
    /// speed, and the primitive states on both sides.
    pub fn write_polyline_csv(&self, gas: &GasModel, path: &std::path::Path) -> Result<()> {
        let s = self.arclengths();
        let rows: Result<Vec<Vec<f64>>> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let wu = gas.parameter_to_primitive(&p.z_up)?;
                let wd = gas.parameter_to_primitive(&p.z_down)?;
                Ok(vec![
                    s[i], p.x.x, p.x.y, p.n.x, p.n.y, p.w, wu.rho, wu.u, wu.v, wu.p, wd.rho,
                    wd.u, wd.v, wd.p,
                ])
            })
            .collect();
        crate::mesh::io::write_csv(
            path,
            &[
                "s", "x", "y", "nx", "ny", "w", "rho_up", "u_up", "v_up", "p_up", "rho_down",
                "u_down", "v_down", "p_down",
            ],
            rows?,
        )
    }
}

/// Closest point to `p` on the polyline of boundary patch `patch`.
pub fn project_to_patch(mesh: &Mesh, patch: usize, p: Vec2) -> Result<Vec2> {
    if patch >= mesh.tri.patches.len() {
        return Err(Error::Front(format!("boundary patch {patch} does not exist")));
    }
    let mut best = (f64::INFINITY, p);
    for e in &mesh.tri.patches[patch].edges {
        let (a, b) = (mesh.tri.points[e[0]], mesh.tri.points[e[1]]);
        let (_, cp) = geom::closest_point_on_segment(p, a, b);
        let d = p.dist(cp);
        if d < best.0 {
            best = (d, cp);
        }
    }
    Ok(best.1)
}
