use super::interface::fluid_side_gradient;
use super::{FieldState, StepContext};

/// Advances the pressure on every interior fluid cell from level n to n+1.
///
/// Leapfrog in time; the face fluxes are two-point differences between
/// fluid cells and the Euler closure on faces shared with bone. Outer-ring
/// cells are never written, so they keep `P = 0`. `sources` lists
/// `(cell, weight)` pairs of the discretized point source, whose weights sum
/// to one; `forcing` is `F(t_n)`. `bone_next` holds the bone displacements at
/// level n+1 (solid x, solid y, fluid x, fluid y).
///
/// Returns `false` if any updated value is non-finite.
pub fn step_fluid(
    ctx: &StepContext<'_>,
    state: &FieldState,
    bone_next: [&[f64]; 4],
    sources: &[(usize, f64)],
    forcing: f64,
    p_next: &mut [f64],
) -> bool {
    let grid = ctx.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx, grid.dy);
    let (idx2, idy2) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    let c = ctx.fluid.speed();
    let courant2 = c * c * ctx.dt * ctx.dt;
    let rho_f = ctx.fluid.density;
    let phi = ctx.phi;
    let feels_bone = ctx.coupling.fluid_feels_bone();
    let inv_dt2 = 1.0 / (ctx.dt * ctx.dt);
    let p = &state.p;
    let p_prev = &state.p_prev;

    let accel = |b: usize| -> ([f64; 2], [f64; 2]) {
        let a = |k: usize, cur: &[f64], prev: &[f64]| {
            (bone_next[k][b] - 2.0 * cur[b] + prev[b]) * inv_dt2
        };
        (
            [a(0, &state.us[0], &state.us_prev[0]), a(1, &state.us[1], &state.us_prev[1])],
            [a(2, &state.uf[0], &state.uf_prev[0]), a(3, &state.uf[1], &state.uf_prev[1])],
        )
    };

    let mut finite = true;
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            if ctx.regions.is_bone(k) {
                continue;
            }
            let pc = p[k];
            let mut lap = 0.0;
            let neighbours = [
                (k - 1, [-1.0, 0.0], dx, idx2),
                (k + 1, [1.0, 0.0], dx, idx2),
                (k - nx, [0.0, -1.0], dy, idy2),
                (k + nx, [0.0, 1.0], dy, idy2),
            ];
            for (nb, dir, h, ih2) in neighbours {
                if !ctx.regions.is_bone(nb) {
                    lap += (p[nb] - pc) * ih2;
                } else if feels_bone {
                    let (a_s, a_f) = accel(nb);
                    lap += fluid_side_gradient(rho_f, phi, a_s, a_f, dir) / h;
                }
            }
            let v = 2.0 * pc - p_prev[k] + courant2 * lap;
            finite &= v.is_finite();
            p_next[k] = v;
        }
    }

    if forcing != 0.0 {
        let density = rho_f * forcing / grid.cell_area();
        for &(k, w) in sources {
            p_next[k] += courant2 * density * w;
        }
    }
    finite
}
