//! Jump conditions across a moving shock segment: a 5x5 Newton solve for
//! the downstream state and the normal displacement speed, closed by the
//! acoustic Riemann variable carried to the shock from the downstream side.

use crate::cases::exact::normal_shock;
use crate::error::{Error, Result};
use crate::gas::{GasModel, PrimitiveState};
use crate::geom::Vec2;

pub const MAX_ITERS: usize = 30;
pub const TOL: f64 = 1e-10;

/// Acoustic Riemann variable of the wave reaching the shock from the
/// downstream side, for a front normal `n` pointing toward upstream.
pub fn riemann_closure(gas: &GasModel, w: &PrimitiveState, n: Vec2) -> f64 {
    gas.sound_speed(w) + 0.5 * (gas.gamma - 1.0) * w.velocity().dot(n)
}

/// One shock-point jump problem. `n` is the unit normal pointing from the
/// downstream region toward upstream, `tau` the unit tangent, `r_d` the
/// downstream closure value.
#[derive(Debug, Clone, Copy)]
pub struct ShockJumpProblem {
    pub gas: GasModel,
    pub upstream: PrimitiveState,
    pub n: Vec2,
    pub tau: Vec2,
    pub r_d: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ShockJumpSolution {
    pub downstream: PrimitiveState,
    /// Normal displacement speed along `n`.
    pub w: f64,
    pub iters: usize,
    /// Final residual infinity norm (nondimensional).
    pub residual: f64,
}

impl ShockJumpSolution {
    pub fn as_unknowns(&self) -> [f64; 5] {
        let d = &self.downstream;
        [d.rho, d.u, d.v, d.p, self.w]
    }
}

fn inf_norm(f: &[f64; 5]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Dense 5x5 linear solve with partial pivoting; None if singular to
/// working precision.
pub fn lu_solve_5(mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..5 {
        let mut piv = col;
        for r in col + 1..5 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..5 {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..5 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 5];
    for r in (0..5).rev() {
        let mut s = b[r];
        for c in r + 1..5 {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

impl ShockJumpProblem {
    /// Nondimensional residual of the jump system at unknowns
    /// x = [rho_d, u_d, v_d, p_d, w] (physical units). Rows: mass, normal
    /// momentum, tangential velocity, total enthalpy, acoustic closure,
    /// scaled by upstream density and sound speed.
    pub fn residual(&self, x: &[f64; 5]) -> [f64; 5] {
        let g = self.gas.gamma;
        let up = &self.upstream;
        let a_u = self.gas.sound_speed(up);
        let (rho_d, p_d, w) = (x[0], x[3], x[4]);
        let u_d = Vec2::new(x[1], x[2]);
        let mu = up.velocity().dot(self.n) - w;
        let md = u_d.dot(self.n) - w;
        let a_d = (g * p_d / rho_d).sqrt();
        [
            (up.rho * mu - rho_d * md) / (up.rho * a_u),
            (up.rho * mu * mu + up.p - rho_d * md * md - p_d) / (up.rho * a_u * a_u),
            (up.velocity() - u_d).dot(self.tau) / a_u,
            (g / (g - 1.0) * (up.p / up.rho - p_d / rho_d) + 0.5 * (mu * mu - md * md))
                / (a_u * a_u),
            (a_d + 0.5 * (g - 1.0) * u_d.dot(self.n) - self.r_d) / a_u,
        ]
    }

    /// Analytic Jacobian of `residual` with respect to the unknowns.
    pub fn jacobian(&self, x: &[f64; 5]) -> [[f64; 5]; 5] {
        let g = self.gas.gamma;
        let up = &self.upstream;
        let a_u = self.gas.sound_speed(up);
        let (rho_d, p_d, w) = (x[0], x[3], x[4]);
        let u_d = Vec2::new(x[1], x[2]);
        let mu = up.velocity().dot(self.n) - w;
        let md = u_d.dot(self.n) - w;
        let a_d = (g * p_d / rho_d).sqrt();
        let (nx, ny) = (self.n.x, self.n.y);
        let s1 = up.rho * a_u;
        let s2 = up.rho * a_u * a_u;
        let s4 = a_u * a_u;
        [
            [
                -md / s1,
                -rho_d * nx / s1,
                -rho_d * ny / s1,
                0.0,
                (rho_d - up.rho) / s1,
            ],
            [
                -md * md / s2,
                -2.0 * rho_d * md * nx / s2,
                -2.0 * rho_d * md * ny / s2,
                -1.0 / s2,
                2.0 * (rho_d * md - up.rho * mu) / s2,
            ],
            [0.0, -self.tau.x / a_u, -self.tau.y / a_u, 0.0, 0.0],
            [
                g / (g - 1.0) * p_d / (rho_d * rho_d) / s4,
                -md * nx / s4,
                -md * ny / s4,
                -g / ((g - 1.0) * rho_d) / s4,
                (md - mu) / s4,
            ],
            [
                -a_d / (2.0 * rho_d) / a_u,
                0.5 * (g - 1.0) * nx / a_u,
                0.5 * (g - 1.0) * ny / a_u,
                a_d / (2.0 * p_d) / a_u,
                0.0,
            ],
        ]
    }

    /// Initial guess from the steady normal-shock relations at the relative
    /// normal Mach number implied by a resting front (floored to a genuine
    /// compression).
    fn cold_start(&self) -> [f64; 5] {
        let up = &self.upstream;
        let a_u = self.gas.sound_speed(up);
        let mu = up.velocity().dot(self.n);
        let mn = (mu.abs() / a_u).clamp(1.3, 25.0);
        let mu_eff = mu.signum() * mn * a_u;
        match normal_shock(mn, self.gas.gamma) {
            Ok(js) => {
                let u_d = up.velocity() + self.n * (mu_eff * (js.u_ratio - 1.0));
                [
                    up.rho * js.rho_ratio,
                    u_d.x,
                    u_d.y,
                    up.p * js.p_ratio,
                    0.0,
                ]
            }
            Err(_) => [2.0 * up.rho, up.u, up.v, 2.5 * up.p, 0.0],
        }
    }

    /// Damped Newton iteration. `point` only labels errors. Returns the
    /// downstream state and front speed; rejects entropy-violating roots.
    pub fn solve(&self, point: usize, guess: Option<[f64; 5]>) -> Result<ShockJumpSolution> {
        match self.solve_from(point, guess.unwrap_or_else(|| self.cold_start())) {
            Err(Error::ExpansionRoot { .. }) if guess.is_some() => {
                // A stale warm start can sit in the expansion basin; retry
                // once from the compressive cold start before giving up.
                self.solve_from(point, self.cold_start())
            }
            other => other,
        }
    }

    fn solve_from(&self, point: usize, mut x: [f64; 5]) -> Result<ShockJumpSolution> {
        let mut f = self.residual(&x);
        let mut norm = inf_norm(&f);
        for iter in 0..MAX_ITERS {
            if norm <= TOL {
                if x[3] < self.upstream.p * (1.0 - 1e-10) {
                    return Err(Error::ExpansionRoot {
                        point,
                        p_down: x[3],
                        p_up: self.upstream.p,
                    });
                }
                return Ok(ShockJumpSolution {
                    downstream: PrimitiveState::new(x[0], x[1], x[2], x[3]),
                    w: x[4],
                    iters: iter,
                    residual: norm,
                });
            }
            let jac = self.jacobian(&x);
            let rhs = [-f[0], -f[1], -f[2], -f[3], -f[4]];
            let dx = lu_solve_5(jac, rhs).ok_or(Error::ShockSolveDiverged {
                point,
                residual: norm,
                iters: iter as u32,
            })?;
            // Backtracking: halve until the state stays admissible and the
            // residual decreases; after 5 halvings take the smallest
            // admissible step to keep moving.
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..=5 {
                let xt = [
                    x[0] + alpha * dx[0],
                    x[1] + alpha * dx[1],
                    x[2] + alpha * dx[2],
                    x[3] + alpha * dx[3],
                    x[4] + alpha * dx[4],
                ];
                if xt[0] > 0.0 && xt[3] > 0.0 {
                    let ft = self.residual(&xt);
                    let nt = inf_norm(&ft);
                    accepted = Some((xt, ft, nt));
                    if nt < norm {
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((xt, ft, nt)) => {
                    x = xt;
                    f = ft;
                    norm = nt;
                }
                None => {
                    return Err(Error::ShockSolveDiverged {
                        point,
                        residual: norm,
                        iters: iter as u32,
                    })
                }
            }
        }
        if norm <= TOL {
            if x[3] < self.upstream.p * (1.0 - 1e-10) {
                return Err(Error::ExpansionRoot {
                    point,
                    p_down: x[3],
                    p_up: self.upstream.p,
                });
            }
            return Ok(ShockJumpSolution {
                downstream: PrimitiveState::new(x[0], x[1], x[2], x[3]),
                w: x[4],
                iters: MAX_ITERS,
                residual: norm,
            });
        }
        Err(Error::ShockSolveDiverged {
            point,
            residual: norm,
            iters: MAX_ITERS as u32,
        })
    }
}

/// Downstream state and closure value for a front moving at speed `w` whose
/// upstream sees relative normal Mach `mn` (> 1). `n` points toward
/// upstream; the upstream velocity must be consistent with `mn`, i.e.
/// (u_u . n - w) = -mn * a_u. Used to manufacture exact jump data.
pub fn manufactured_downstream_at(
    gas: &GasModel,
    upstream: &PrimitiveState,
    n: Vec2,
    w: f64,
    mn: f64,
) -> Result<(PrimitiveState, f64)> {
    let a_u = gas.sound_speed(upstream);
    let mu = upstream.velocity().dot(n) - w;
    if (mu + mn * a_u).abs() > 1e-9 * a_u.max(1.0) {
        return Err(Error::InvalidState {
            context: format!(
                "upstream normal velocity {} inconsistent with relative normal Mach {mn}",
                mu / a_u
            ),
            rho: upstream.rho,
            p: upstream.p,
        });
    }
    let js = normal_shock(mn, gas.gamma)?;
    let u_d = upstream.velocity() + n * (mu * (js.u_ratio - 1.0));
    let down = PrimitiveState::new(
        upstream.rho * js.rho_ratio,
        u_d.x,
        u_d.y,
        upstream.p * js.p_ratio,
    );
    let r_d = riemann_closure(gas, &down, n);
    Ok((down, r_d))
}

/// As `manufactured_downstream_at` but derives `mn` from the given front
/// speed and upstream state.
pub fn manufactured_downstream(
    gas: &GasModel,
    upstream: &PrimitiveState,
    n: Vec2,
    w: f64,
) -> Result<(PrimitiveState, f64)> {
    let a_u = gas.sound_speed(upstream);
    let mn = (w - upstream.velocity().dot(n)) / a_u;
    if mn <= 1.0 {
        return Err(Error::InvalidState {
            context: format!("relative normal Mach {mn} is not supersonic; no jump exists"),
            rho: upstream.rho,
            p: upstream.p,
        });
    }
    manufactured_downstream_at(gas, upstream, n, w, mn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const GAS: GasModel = GasModel::AIR;

    /// Upstream flow at incidence `theta` to the shock normal, with
    /// relative normal Mach `mn` for a resting front: n points against the
    /// incoming normal component.
    fn incident_problem(mn: f64, theta_deg: f64) -> (ShockJumpProblem, PrimitiveState) {
        let th = theta_deg.to_radians();
        let n = Vec2::new(-1.0, 0.0);
        let tau = Vec2::new(0.0, 1.0);
        let a_u = 1.0;
        let rho_u = 1.0;
        let p_u = rho_u * a_u * a_u / GAS.gamma;
        let vel = Vec2::new(mn * a_u, mn * a_u * th.tan());
        let upstream = PrimitiveState::new(rho_u, vel.x, vel.y, p_u);
        let (down, r_d) = manufactured_downstream(&GAS, &upstream, n, 0.0).unwrap();
        (
            ShockJumpProblem {
                gas: GAS,
                upstream,
                n,
                tau,
                r_d,
            },
            down,
        )
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let upstream = PrimitiveState::new(
                rng.gen_range(0.5..3.0),
                rng.gen_range(1.0..5.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.5..3.0),
            );
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let n = Vec2::new(ang.cos(), ang.sin());
            let prob = ShockJumpProblem {
                gas: GAS,
                upstream,
                n,
                tau: n.rot90_ccw(),
                r_d: rng.gen_range(1.0..4.0),
            };
            let x = [
                rng.gen_range(1.0..5.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(1.0..5.0),
                rng.gen_range(-1.0..1.0),
            ];
            let jac = prob.jacobian(&x);
            for col in 0..5 {
                let h = 1e-6 * x[col].abs().max(1.0);
                let mut xp = x;
                let mut xm = x;
                xp[col] += h;
                xm[col] -= h;
                let (fp, fm) = (prob.residual(&xp), prob.residual(&xm));
                for row in 0..5 {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    assert!(
                        (jac[row][col] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                        "J[{row}][{col}] analytic {} vs fd {fd}",
                        jac[row][col]
                    );
                }
            }
        }
    }

    #[test]
    fn recovers_manufactured_jumps_across_mach_and_incidence() {
        for &mn in &[1.1, 1.5, 2.0, 5.0, 10.0, 20.0] {
            for &th in &[0.0, 15.0, 30.0] {
                let (prob, exact) = incident_problem(mn, th);
                let sol = prob.solve(0, None).unwrap();
                let got = sol.downstream;
                let err = [
                    (got.rho - exact.rho).abs() / exact.rho,
                    (got.u - exact.u).abs() / exact.u.abs().max(1.0),
                    (got.v - exact.v).abs() / exact.v.abs().max(1.0),
                    (got.p - exact.p).abs() / exact.p,
                    sol.w.abs(),
                ];
                for (k, e) in err.iter().enumerate() {
                    assert!(
                        *e <= 1e-8,
                        "mn={mn} th={th}: component {k} error {e:.3e}"
                    );
                }
                assert!(sol.iters <= MAX_ITERS);
                assert!(sol.residual <= TOL);
            }
        }
    }

    #[test]
    fn moving_front_jump_recovered() {
        // Same physics in a frame where the front drifts at w = 0.4.
        let w = 0.4;
        let n = Vec2::new(-1.0, 0.0);
        let upstream = PrimitiveState::new(1.0, 2.5 - w, 0.3, 1.0 / GAS.gamma);
        // Relative normal Mach: (w - u.n)/a = (0.4 + 2.5 - 0.4) = 2.5.
        let (down, r_d) = manufactured_downstream(&GAS, &upstream, n, w).unwrap();
        let prob = ShockJumpProblem {
            gas: GAS,
            upstream,
            n,
            tau: n.rot90_ccw(),
            r_d,
        };
        let sol = prob.solve(3, None).unwrap();
        assert!((sol.w - w).abs() < 1e-8);
        assert!((sol.downstream.p - down.p).abs() / down.p < 1e-8);
        assert!((sol.downstream.rho - down.rho).abs() / down.rho < 1e-8);
    }

    #[test]
    fn initial_guess_insensitivity() {
        let (prob, exact) = incident_problem(3.0, 20.0);
        let reference = prob.solve(0, None).unwrap();
        assert!((reference.downstream.p - exact.p).abs() / exact.p < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let guess = [
                exact.rho * rng.gen_range(0.5..1.5),
                exact.u.max(0.3) * rng.gen_range(0.5..1.5),
                exact.v + rng.gen_range(-0.5..0.5),
                exact.p * rng.gen_range(0.5..1.5),
                rng.gen_range(-0.5..0.5),
            ];
            let sol = prob.solve(0, Some(guess)).unwrap();
            assert!((sol.downstream.p - reference.downstream.p).abs() < 1e-8);
            assert!((sol.downstream.rho - reference.downstream.rho).abs() < 1e-8);
            assert!((sol.w - reference.w).abs() < 1e-8);
        }
    }

    #[test]
    fn expansion_root_is_rejected() {
        // Reverse a Mach-2 jump: feed the post-shock state as upstream and
        // close with the pre-shock side, which is the entropy-violating
        // branch of the same algebraic system.
        let (prob, down) = incident_problem(2.0, 0.0);
        let reversed = ShockJumpProblem {
            gas: GAS,
            upstream: down,
            n: prob.n,
            tau: prob.tau,
            r_d: riemann_closure(&GAS, &prob.upstream, prob.n),
        };
        let up = prob.upstream;
        let guess = [up.rho, up.u, up.v, up.p, 0.0];
        match reversed.solve(5, Some(guess)) {
            Err(Error::ExpansionRoot { point, p_down, p_up }) => {
                assert_eq!(point, 5);
                assert!(p_down < p_up);
            }
            Err(Error::ShockSolveDiverged { .. }) => {} // compressive retry ran off
            other => panic!("expected expansion rejection, got {other:?}"),
        }
    }

    #[test]
    fn closure_value_definition() {
        let w = PrimitiveState::new(2.0, 1.0, -0.5, 3.0);
        let n = Vec2::new(0.6, 0.8);
        let expect = (1.4_f64 * 3.0 / 2.0).sqrt() + 0.2 * (1.0 * 0.6 - 0.5 * 0.8);
        assert!((riemann_closure(&GAS, &w, n) - expect).abs() < 1e-14);
    }

    #[test]
    fn linear_solver_pivots_and_detects_singularity() {
        let a = [
            [0.0, 2.0, 0.0, 0.0, 1.0],
            [3.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 4.0, 0.0],
            [0.0, 1.0, 5.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0, 2.0],
        ];
        let x_true = [1.0, -2.0, 0.5, 3.0, -1.0];
        let mut b = [0.0; 5];
        for r in 0..5 {
            for c in 0..5 {
                b[r] += a[r][c] * x_true[c];
            }
        }
        let x = lu_solve_5(a, b).unwrap();
        for k in 0..5 {
            assert!((x[k] - x_true[k]).abs() < 1e-12);
        }
        let mut sing = a;
        sing[4] = sing[1]; // duplicate row
        assert!(lu_solve_5(sing, b).is_none());
    }
}
