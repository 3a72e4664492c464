//! Open-pore coupling between the acoustic fluid and the Biot medium.
//!
//! Bone side: the face tractions are prescribed from the adjacent fluid
//! pressure, `σ·n = −(1−φ)P n` on the solid and `s n = −φP n` on the pore
//! fluid. Fluid side: Euler's relation closes the pressure flux with the
//! normal acceleration of the solid/fluid mixture,
//! `∂P/∂n = −ρ_f ((1−φ)Ü^s + φÜ^f)·n`.

use crate::domain::{Grid, InterfaceFace, RegionMap};

use super::FieldState;

/// How the fluid sees the bone at the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterfaceCoupling {
    /// Tractions drive the bone; the bone's mixture acceleration drives the fluid.
    #[default]
    TwoWay,
    /// Tractions drive the bone; the fluid sees a rigid wall.
    OneWay,
    /// The bone is held at rest and the fluid sees a rigid wall.
    Rigid,
}

impl InterfaceCoupling {
    pub fn bone_moves(self) -> bool {
        !matches!(self, InterfaceCoupling::Rigid)
    }

    pub fn fluid_feels_bone(self) -> bool {
        matches!(self, InterfaceCoupling::TwoWay)
    }
}

/// Face tractions (solid, pore fluid) on a bone cell whose outward face
/// normal is `normal`, given the pressure `p` in the fluid cell across it.
#[inline]
pub fn bone_side_traction(p: f64, phi: f64, normal: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let solid = -(1.0 - phi) * p;
    let fluid = -phi * p;
    (
        [solid * normal[0], solid * normal[1]],
        [fluid * normal[0], fluid * normal[1]],
    )
}

/// Normal pressure derivative on the fluid side of an interface face, with
/// `into_bone` the unit normal pointing from the fluid cell into the bone.
#[inline]
pub fn fluid_side_gradient(
    rho_f: f64,
    phi: f64,
    accel_solid: [f64; 2],
    accel_fluid: [f64; 2],
    into_bone: [f64; 2],
) -> f64 {
    let ax = (1.0 - phi) * accel_solid[0] + phi * accel_fluid[0];
    let ay = (1.0 - phi) * accel_solid[1] + phi * accel_fluid[1];
    -rho_f * (ax * into_bone[0] + ay * into_bone[1])
}

/// Interface quantities on one fluid/bone face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceFlux {
    pub face: InterfaceFace,
    /// Solid traction on the bone face, Pa.
    pub solid_traction: [f64; 2],
    /// Pore-fluid traction on the bone face, Pa.
    pub fluid_traction: [f64; 2],
    /// `∂P/∂n` on the fluid side, normal pointing into the bone, Pa/m.
    pub pressure_gradient: f64,
}

/// Evaluates both sides of the coupling on every interface face.
///
/// `next` holds the bone displacements at level n+1 (solid x, solid y,
/// fluid x, fluid y); accelerations are centered second differences.
pub fn couple_interface(
    grid: &Grid,
    regions: &RegionMap,
    state: &FieldState,
    next: [&[f64]; 4],
    rho_f: f64,
    phi: f64,
    dt: f64,
    coupling: InterfaceCoupling,
) -> Vec<InterfaceFlux> {
    let inv_dt2 = 1.0 / (dt * dt);
    regions
        .interface_faces(grid)
        .into_iter()
        .map(|face| {
            let fi = grid.index(face.fluid.0, face.fluid.1);
            let bi = grid.index(face.bone.0, face.bone.1);
            let n = [f64::from(face.normal[0]), f64::from(face.normal[1])];
            let (solid_traction, fluid_traction) = if coupling.bone_moves() {
                bone_side_traction(state.p[fi], phi, n)
            } else {
                ([0.0; 2], [0.0; 2])
            };
            let pressure_gradient = if coupling.fluid_feels_bone() {
                let acc = |next: &[f64], cur: &[f64], prev: &[f64]| {
                    (next[bi] - 2.0 * cur[bi] + prev[bi]) * inv_dt2
                };
                let a_s = [
                    acc(next[0], &state.us[0], &state.us_prev[0]),
                    acc(next[1], &state.us[1], &state.us_prev[1]),
                ];
                let a_f = [
                    acc(next[2], &state.uf[0], &state.uf_prev[0]),
                    acc(next[3], &state.uf[1], &state.uf_prev[1]),
                ];
                fluid_side_gradient(rho_f, phi, a_s, a_f, [-n[0], -n[1]])
            } else {
                0.0
            };
            InterfaceFlux {
                face,
                solid_traction,
                fluid_traction,
                pressure_gradient,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_pressure_gives_zero_traction() {
        let (s, f) = bone_side_traction(0.0, 0.4, [1.0, 0.0]);
        assert_eq!(s, [0.0, 0.0]);
        assert_eq!(f, [0.0, 0.0]);
    }

    #[test]
    fn full_porosity_loads_only_the_pore_fluid() {
        let (s, f) = bone_side_traction(3.0, 1.0, [0.0, -1.0]);
        assert_eq!(s[1], 0.0);
        assert_eq!(f, [0.0, 3.0]);
    }

    #[test]
    fn static_bone_is_a_rigid_wall() {
        let g = fluid_side_gradient(1000.0, 0.5, [0.0; 2], [0.0; 2], [1.0, 0.0]);
        assert_eq!(g, 0.0);
    }

    #[test]
    fn gradient_opposes_mixture_acceleration() {
        // bone accelerating into the fluid (along -into_bone) raises pressure at the face
        let g = fluid_side_gradient(1000.0, 0.5, [-2.0, 0.0], [-2.0, 0.0], [1.0, 0.0]);
        assert_eq!(g, 2000.0);
    }
}
