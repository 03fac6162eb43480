//! Approximate Riemann flux across dual faces.

use crate::gas::{GasModel, PrimitiveState};
use crate::geom::Vec2;

/// Entropy-fix threshold as a fraction of the face sound speed.
const HARTEN_DELTA: f64 = 0.1;

#[inline]
fn harten(lambda: f64, eps: f64) -> f64 {
    let a = lambda.abs();
    if a >= eps {
        a
    } else {
        0.5 * (lambda * lambda / eps + eps)
    }
}

/// Roe flux through a face with scaled normal `nu` (length = face area),
/// oriented from the left to the right state. Returns the face-integrated
/// flux of [rho, rho u, rho v, rho E].
pub fn roe_flux(gas: &GasModel, wl: &PrimitiveState, wr: &PrimitiveState, nu: Vec2) -> [f64; 4] {
    let s = nu.norm();
    if s == 0.0 {
        return [0.0; 4];
    }
    let nh = nu / s;
    let th = nh.rot90_ccw();
    let g = gas.gamma;

    let fl = gas.flux_normal(wl, nu);
    let fr = gas.flux_normal(wr, nu);

    // Roe averages.
    let sl = wl.rho.sqrt();
    let sr = wr.rho.sqrt();
    let inv = 1.0 / (sl + sr);
    let rho_t = sl * sr;
    let u_t = (sl * wl.u + sr * wr.u) * inv;
    let v_t = (sl * wl.v + sr * wr.v) * inv;
    let hl = gas.total_enthalpy(wl);
    let hr = gas.total_enthalpy(wr);
    let h_t = (sl * hl + sr * hr) * inv;
    let q2 = u_t * u_t + v_t * v_t;
    let a2 = (g - 1.0) * (h_t - 0.5 * q2);
    let a_t = a2.max(1e-300).sqrt();
    let un = u_t * nh.x + v_t * nh.y;
    let ut = u_t * th.x + v_t * th.y;

    // Jumps and wave strengths.
    let d_rho = wr.rho - wl.rho;
    let d_p = wr.p - wl.p;
    let d_un = (wr.u - wl.u) * nh.x + (wr.v - wl.v) * nh.y;
    let d_ut = (wr.u - wl.u) * th.x + (wr.v - wl.v) * th.y;
    let alpha = [
        (d_p - rho_t * a_t * d_un) / (2.0 * a2),
        d_rho - d_p / a2,
        rho_t * d_ut,
        (d_p + rho_t * a_t * d_un) / (2.0 * a2),
    ];
    let eps = HARTEN_DELTA * a_t;
    let lambda = [
        harten(un - a_t, eps),
        harten(un, eps),
        harten(un, eps),
        harten(un + a_t, eps),
    ];
    let r = [
        [1.0, u_t - a_t * nh.x, v_t - a_t * nh.y, h_t - a_t * un],
        [1.0, u_t, v_t, 0.5 * q2],
        [0.0, th.x, th.y, ut],
        [1.0, u_t + a_t * nh.x, v_t + a_t * nh.y, h_t + a_t * un],
    ];

    let mut f = [0.0; 4];
    for k in 0..4 {
        let mut diss = 0.0;
        for w in 0..4 {
            diss += lambda[w] * alpha[w] * r[w][k];
        }
        f[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * s * diss;
    }
    f
}

/// Slip-wall / symmetry flux: pure pressure force through the face.
#[inline]
pub fn wall_flux(p: f64, nu: Vec2) -> [f64; 4] {
    [0.0, p * nu.x, p * nu.y, 0.0]
}
