//! Perfect-gas state algebra: primitive, conserved, and parameter-vector
//! representations with conversions, plus sound speed, entropy, and the
//! physical flux projected on a direction.

use crate::error::{Error, Result};
use crate::geom::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    /// Ratio of specific heats; must exceed 1.
    pub gamma: f64,
}

impl GasModel {
    pub const AIR: GasModel = GasModel { gamma: 1.4 };

    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Case(format!("gamma must be finite and > 1, got {gamma}")));
        }
        Ok(GasModel { gamma })
    }
}

impl Default for GasModel {
    fn default() -> Self {
        GasModel::AIR
    }
}

/// Density, velocity components, static pressure.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

/// Density, momentum components, total energy per unit volume.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[allow(non_snake_case)]
pub struct ConservedState {
    pub rho: f64,
    pub mom_x: f64,
    pub mom_y: f64,
    pub rho_E: f64,
}

/// Parameter vector sqrt(rho) * (1, H, u, v); linear interpolation of these
/// components preserves jump relations better than primitives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParameterState {
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub z4: f64,
}

impl PrimitiveState {
    pub fn new(rho: f64, u: f64, v: f64, p: f64) -> Self {
        PrimitiveState { rho, u, v, p }
    }

    #[inline]
    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.u, self.v)
    }

    #[inline]
    pub fn is_valid(&self) -> bool {
        self.rho > 0.0 && self.p > 0.0 && self.rho.is_finite() && self.p.is_finite()
            && self.u.is_finite() && self.v.is_finite()
    }

    fn check(&self, context: &str) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidState {
                context: context.to_string(),
                rho: self.rho,
                p: self.p,
            })
        }
    }
}

impl ConservedState {
    pub const ZERO: ConservedState = ConservedState {
        rho: 0.0,
        mom_x: 0.0,
        mom_y: 0.0,
        rho_E: 0.0,
    };

    #[inline]
    pub fn as_array(&self) -> [f64; 4] {
        [self.rho, self.mom_x, self.mom_y, self.rho_E]
    }

    #[inline]
    pub fn from_array(a: [f64; 4]) -> Self {
        ConservedState {
            rho: a[0],
            mom_x: a[1],
            mom_y: a[2],
            rho_E: a[3],
        }
    }
}

impl std::ops::Add for ConservedState {
    type Output = ConservedState;
    #[inline]
    fn add(self, o: ConservedState) -> ConservedState {
        ConservedState {
            rho: self.rho + o.rho,
            mom_x: self.mom_x + o.mom_x,
            mom_y: self.mom_y + o.mom_y,
            rho_E: self.rho_E + o.rho_E,
        }
    }
}

impl std::ops::Sub for ConservedState {
    type Output = ConservedState;
    #[inline]
    fn sub(self, o: ConservedState) -> ConservedState {
        ConservedState {
            rho: self.rho - o.rho,
            mom_x: self.mom_x - o.mom_x,
            mom_y: self.mom_y - o.mom_y,
            rho_E: self.rho_E - o.rho_E,
        }
    }
}

impl std::ops::Mul<f64> for ConservedState {
    type Output = ConservedState;
    #[inline]
    fn mul(self, s: f64) -> ConservedState {
        ConservedState {
            rho: self.rho * s,
            mom_x: self.mom_x * s,
            mom_y: self.mom_y * s,
            rho_E: self.rho_E * s,
        }
    }
}

impl std::ops::AddAssign for ConservedState {
    #[inline]
    fn add_assign(&mut self, o: ConservedState) {
        self.rho += o.rho;
        self.mom_x += o.mom_x;
        self.mom_y += o.mom_y;
        self.rho_E += o.rho_E;
    }
}

impl ParameterState {
    #[inline]
    pub fn as_array(&self) -> [f64; 4] {
        [self.z1, self.z2, self.z3, self.z4]
    }

    #[inline]
    pub fn from_array(a: [f64; 4]) -> Self {
        ParameterState {
            z1: a[0],
            z2: a[1],
            z3: a[2],
            z4: a[3],
        }
    }
}

impl std::ops::Add for ParameterState {
    type Output = ParameterState;
    #[inline]
    fn add(self, o: ParameterState) -> ParameterState {
        ParameterState {
            z1: self.z1 + o.z1,
            z2: self.z2 + o.z2,
            z3: self.z3 + o.z3,
            z4: self.z4 + o.z4,
        }
    }
}

impl std::ops::Sub for ParameterState {
    type Output = ParameterState;
    #[inline]
    fn sub(self, o: ParameterState) -> ParameterState {
        ParameterState {
            z1: self.z1 - o.z1,
            z2: self.z2 - o.z2,
            z3: self.z3 - o.z3,
            z4: self.z4 - o.z4,
        }
    }
}

impl std::ops::Mul<f64> for ParameterState {
    type Output = ParameterState;
    #[inline]
    fn mul(self, s: f64) -> ParameterState {
        ParameterState {
            z1: self.z1 * s,
            z2: self.z2 * s,
            z3: self.z3 * s,
            z4: self.z4 * s,
        }
    }
}

impl GasModel {
    /// rho, u, v, p -> rho, rho u, rho v, rho E with rho E = p/(gamma-1) + rho |u|^2 / 2.
    pub fn primitive_to_conserved(&self, w: &PrimitiveState) -> Result<ConservedState> {
        w.check("primitive_to_conserved")?;
        Ok(ConservedState {
            rho: w.rho,
            mom_x: w.rho * w.u,
            mom_y: w.rho * w.v,
            rho_E: w.p / (self.gamma - 1.0) + 0.5 * w.rho * (w.u * w.u + w.v * w.v),
        })
    }

    pub fn conserved_to_primitive(&self, q: &ConservedState) -> Result<PrimitiveState> {
        let rho = q.rho;
        let u = q.mom_x / rho;
        let v = q.mom_y / rho;
        let p = (self.gamma - 1.0) * (q.rho_E - 0.5 * rho * (u * u + v * v));
        let w = PrimitiveState { rho, u, v, p };
        w.check("conserved_to_primitive")?;
        Ok(w)
    }

    /// Parameter vector Z = sqrt(rho) * (1, H, u, v) where
    /// H = gamma p / ((gamma - 1) rho) + |u|^2 / 2 is the total enthalpy.
    pub fn primitive_to_parameter(&self, w: &PrimitiveState) -> Result<ParameterState> {
        w.check("primitive_to_parameter")?;
        let s = w.rho.sqrt();
        Ok(ParameterState {
            z1: s,
            z2: s * self.total_enthalpy(w),
            z3: s * w.u,
            z4: s * w.v,
        })
    }

    pub fn parameter_to_primitive(&self, z: &ParameterState) -> Result<PrimitiveState> {
        if !(z.z1 > 0.0) || !z.z1.is_finite() {
            return Err(Error::InvalidState {
                context: "parameter_to_primitive".to_string(),
                rho: z.z1 * z.z1,
                p: f64::NAN,
            });
        }
        let rho = z.z1 * z.z1;
        let u = z.z3 / z.z1;
        let v = z.z4 / z.z1;
        let h_total = z.z2 / z.z1;
        let p = (self.gamma - 1.0) / self.gamma * rho * (h_total - 0.5 * (u * u + v * v));
        let w = PrimitiveState { rho, u, v, p };
        w.check("parameter_to_primitive")?;
        Ok(w)
    }

    #[inline]
    pub fn sound_speed(&self, w: &PrimitiveState) -> f64 {
        (self.gamma * w.p / w.rho).sqrt()
    }

    /// Entropy measure p / rho^gamma, constant along smooth streamlines and
    /// increasing across shocks.
    #[inline]
    pub fn entropy(&self, w: &PrimitiveState) -> f64 {
        w.p / w.rho.powf(self.gamma)
    }

    #[inline]
    pub fn total_enthalpy(&self, w: &PrimitiveState) -> f64 {
        self.gamma * w.p / ((self.gamma - 1.0) * w.rho) + 0.5 * (w.u * w.u + w.v * w.v)
    }

    #[inline]
    pub fn mach(&self, w: &PrimitiveState) -> f64 {
        (w.u * w.u + w.v * w.v).sqrt() / self.sound_speed(w)
    }

    /// Isentropic stagnation pressure of the state.
    pub fn total_pressure(&self, w: &PrimitiveState) -> f64 {
        let g = self.gamma;
        let m2 = (w.u * w.u + w.v * w.v) / (g * w.p / w.rho);
        w.p * (1.0 + 0.5 * (g - 1.0) * m2).powf(g / (g - 1.0))
    }

    /// Physical flux of mass, momentum, and energy through a face with scaled
    /// normal `n` (magnitude carries the face length).
    #[inline]
    pub fn flux_normal(&self, w: &PrimitiveState, n: Vec2) -> [f64; 4] {
        let un = w.u * n.x + w.v * n.y;
        let rho_e = w.p / (self.gamma - 1.0) + 0.5 * w.rho * (w.u * w.u + w.v * w.v);
        [
            w.rho * un,
            w.rho * w.u * un + w.p * n.x,
            w.rho * w.v * un + w.p * n.y,
            (rho_e + w.p) * un,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const GAS: GasModel = GasModel::AIR;

    #[test]
    fn rest_state_conversions() {
        let w = PrimitiveState::new(1.0, 0.0, 0.0, 1.0);
        let q = GAS.primitive_to_conserved(&w).unwrap();
        assert_eq!(q.rho, 1.0);
        assert_eq!(q.mom_x, 0.0);
        assert_eq!(q.mom_y, 0.0);
        assert!((q.rho_E - 2.5).abs() < 1e-14);
        let z = GAS.primitive_to_parameter(&w).unwrap();
        assert!((z.z1 - 1.0).abs() < 1e-15);
        assert!((z.z2 - 3.5).abs() < 1e-15);
        assert_eq!(z.z3, 0.0);
        assert_eq!(z.z4, 0.0);
        assert!((GAS.sound_speed(&w) - 1.4_f64.sqrt()).abs() < 1e-15);
        assert!((GAS.sound_speed(&w) - 1.1832159566199232).abs() < 1e-13);
        assert!((GAS.entropy(&w) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn total_energy_of_compressed_state() {
        let w = PrimitiveState::new(8.0 / 3.0, 3.0 / 8.0, 0.0, 9.0 / 28.0);
        let q = GAS.primitive_to_conserved(&w).unwrap();
        assert!((q.rho_E - 0.9911).abs() < 5e-5, "rho_E = {}", q.rho_E);
    }

    #[test]
    fn parameter_vector_carries_total_enthalpy() {
        let w = PrimitiveState::new(4.0, 1.0, 0.0, 1.4);
        // H = 1.4 * 1.4 / (0.4 * 4) + 0.5 = 1.725
        assert!((GAS.total_enthalpy(&w) - 1.725).abs() < 1e-15);
        let z = GAS.primitive_to_parameter(&w).unwrap();
        assert!((z.z1 - 2.0).abs() < 1e-15);
        assert!((z.z2 - 3.45).abs() < 1e-14);
        assert!((z.z3 - 2.0).abs() < 1e-15);
        assert_eq!(z.z4, 0.0);
    }

    #[test]
    fn roundtrips_are_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..500 {
            let w = PrimitiveState::new(
                rng.gen_range(0.05..12.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(0.05..12.0),
            );
            let q = GAS.primitive_to_conserved(&w).unwrap();
            let w2 = GAS.conserved_to_primitive(&q).unwrap();
            let z = GAS.primitive_to_parameter(&w).unwrap();
            let w3 = GAS.parameter_to_primitive(&z).unwrap();
            for (a, b) in [
                (w.rho, w2.rho),
                (w.u, w2.u),
                (w.v, w2.v),
                (w.p, w2.p),
                (w.rho, w3.rho),
                (w.u, w3.u),
                (w.v, w3.v),
                (w.p, w3.p),
            ] {
                let scale = a.abs().max(1.0);
                assert!((a - b).abs() < 1e-13 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn invalid_states_are_rejected() {
        let bad_rho = PrimitiveState::new(-1.0, 0.0, 0.0, 1.0);
        assert!(GAS.primitive_to_conserved(&bad_rho).is_err());
        // Kinetic energy exceeding total energy implies negative pressure.
        let q = ConservedState {
            rho: 1.0,
            mom_x: 10.0,
            mom_y: 0.0,
            rho_E: 1.0,
        };
        match GAS.conserved_to_primitive(&q) {
            Err(Error::InvalidState { p, .. }) => assert!(p < 0.0),
            other => panic!("expected invalid-state error, got {other:?}"),
        }
    }

    #[test]
    fn flux_matches_componentwise_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let w = PrimitiveState::new(
                rng.gen_range(0.1..5.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.1..5.0),
            );
            let n = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let f = GAS.flux_normal(&w, n);
            // Independent assembly: F = Fx * nx + Fy * ny from conserved state.
            let q = GAS.primitive_to_conserved(&w).unwrap();
            let fx = [
                q.mom_x,
                q.mom_x * w.u + w.p,
                q.mom_y * w.u,
                (q.rho_E + w.p) * w.u,
            ];
            let fy = [
                q.mom_y,
                q.mom_x * w.v,
                q.mom_y * w.v + w.p,
                (q.rho_E + w.p) * w.v,
            ];
            for k in 0..4 {
                let expect = fx[k] * n.x + fy[k] * n.y;
                assert!((f[k] - expect).abs() < 1e-12 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn total_pressure_of_supersonic_stream() {
        // M = 2 at unit static pressure: p0/p = (1 + 0.2 * 4)^3.5
        let a = GAS.sound_speed(&PrimitiveState::new(1.0, 0.0, 0.0, 1.0));
        let w = PrimitiveState::new(1.0, 2.0 * a, 0.0, 1.0);
        let expect = (1.0_f64 + 0.2 * 4.0).powf(3.5);
        assert!((GAS.total_pressure(&w) - expect).abs() < 1e-12 * expect);
    }
}
