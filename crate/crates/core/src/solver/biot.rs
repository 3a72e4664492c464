use crate::material::ElasticConstants;

use super::interface::bone_side_traction;
use super::{FieldState, StepContext};

/// Scratch buffers for [`step_biot`], sized to the full grid.
#[derive(Debug, Clone)]
pub struct BiotScratch {
    /// Cell-centered x-derivatives of (solid x, solid y, fluid x, fluid y).
    ddx: [Vec<f64>; 4],
    /// Cell-centered y-derivatives, same ordering.
    ddy: [Vec<f64>; 4],
    /// Net face force per cell: solid x, solid y, fluid x, fluid y.
    force: [Vec<f64>; 4],
}

impl BiotScratch {
    pub fn new(n_cells: usize) -> Self {
        let z = || [0; 4].map(|_| vec![0.0; n_cells]);
        Self {
            ddx: z(),
            ddy: z(),
            force: z(),
        }
    }
}

/// One-sided near the bone edge, centered inside, zero for a one-cell-thick bone.
#[inline]
fn tangential(f: &[f64], k: usize, lo: Option<usize>, hi: Option<usize>, h: f64) -> f64 {
    match (lo, hi) {
        (Some(l), Some(u)) => (f[u] - f[l]) / (2.0 * h),
        (None, Some(u)) => (f[u] - f[k]) / h,
        (Some(l), None) => (f[k] - f[l]) / h,
        (None, None) => 0.0,
    }
}

/// Advances solid and pore-fluid displacements on every bone cell from level
/// n to n+1, writing (solid x, solid y, fluid x, fluid y) into `next`.
///
/// Face fluxes of `σ·n` and `s n` are assembled per face: interior faces use
/// two-point normal derivatives and averaged tangential derivatives, faces on
/// the interface take the open-pore tractions from the adjacent fluid
/// pressure. The density matrix and the centered damping term couple the two
/// displacement fields within each cell, so a 2×2 system is solved per cell
/// and per component.
///
/// Returns `false` if any updated value is non-finite.
pub fn step_biot(
    ctx: &StepContext<'_>,
    ec: &ElasticConstants,
    state: &FieldState,
    scratch: &mut BiotScratch,
    next: &mut [Vec<f64>; 4],
) -> bool {
    let Some(r) = ctx.regions.bone_cells() else {
        return true;
    };
    let grid = ctx.grid;
    let nx = grid.nx;
    let (dx, dy) = (grid.dx, grid.dy);
    let fields: [&[f64]; 4] = [&state.us[0], &state.us[1], &state.uf[0], &state.uf[1]];
    let prev: [&[f64]; 4] = [
        &state.us_prev[0],
        &state.us_prev[1],
        &state.uf_prev[0],
        &state.uf_prev[1],
    ];
    let bone = |k: usize| ctx.regions.is_bone(k);

    for j in r.j0..=r.j1 {
        for i in r.i0..=r.i1 {
            let k = grid.index(i, j);
            let west = bone(k - 1).then_some(k - 1);
            let east = bone(k + 1).then_some(k + 1);
            let south = bone(k - nx).then_some(k - nx);
            let north = bone(k + nx).then_some(k + nx);
            for (c, f) in fields.iter().enumerate() {
                scratch.ddx[c][k] = tangential(f, k, west, east, dx);
                scratch.ddy[c][k] = tangential(f, k, south, north, dy);
            }
            for force in scratch.force.iter_mut() {
                force[k] = 0.0;
            }
        }
    }

    let lambda = ec.lame_lambda();
    let (mu, q, rr) = (ec.shear, ec.q, ec.r);
    let phi = ctx.phi;
    let p = &state.p;
    let force = &mut scratch.force;
    let (ddx, ddy) = (&scratch.ddx, &scratch.ddy);

    // faces normal to x, between (i, j) and (i + 1, j)
    for j in r.j0..=r.j1 {
        for i in r.i0 - 1..=r.i1 {
            let a = grid.index(i, j);
            let b = a + 1;
            match (bone(a), bone(b)) {
                (true, true) => {
                    let dsx_dx = (fields[0][b] - fields[0][a]) / dx;
                    let dsy_dx = (fields[1][b] - fields[1][a]) / dx;
                    let dfx_dx = (fields[2][b] - fields[2][a]) / dx;
                    let dsx_dy = 0.5 * (ddy[0][a] + ddy[0][b]);
                    let dsy_dy = 0.5 * (ddy[1][a] + ddy[1][b]);
                    let dfy_dy = 0.5 * (ddy[3][a] + ddy[3][b]);
                    let e = dsx_dx + dsy_dy;
                    let eps = dfx_dx + dfy_dy;
                    let sxx = lambda * e + q * eps + 2.0 * mu * dsx_dx;
                    let sxy = mu * (dsx_dy + dsy_dx);
                    let s = q * e + rr * eps;
                    force[0][a] += sxx * dy;
                    force[1][a] += sxy * dy;
                    force[2][a] += s * dy;
                    force[0][b] -= sxx * dy;
                    force[1][b] -= sxy * dy;
                    force[2][b] -= s * dy;
                }
                (true, false) => add_traction(force, a, p[b], phi, [1.0, 0.0], dy),
                (false, true) => add_traction(force, b, p[a], phi, [-1.0, 0.0], dy),
                (false, false) => {}
            }
        }
    }

    // faces normal to y, between (i, j) and (i, j + 1)
    for j in r.j0 - 1..=r.j1 {
        for i in r.i0..=r.i1 {
            let a = grid.index(i, j);
            let b = a + nx;
            match (bone(a), bone(b)) {
                (true, true) => {
                    let dsx_dy = (fields[0][b] - fields[0][a]) / dy;
                    let dsy_dy = (fields[1][b] - fields[1][a]) / dy;
                    let dfy_dy = (fields[3][b] - fields[3][a]) / dy;
                    let dsx_dx = 0.5 * (ddx[0][a] + ddx[0][b]);
                    let dsy_dx = 0.5 * (ddx[1][a] + ddx[1][b]);
                    let dfx_dx = 0.5 * (ddx[2][a] + ddx[2][b]);
                    let e = dsx_dx + dsy_dy;
                    let eps = dfx_dx + dfy_dy;
                    let syy = lambda * e + q * eps + 2.0 * mu * dsy_dy;
                    let sxy = mu * (dsx_dy + dsy_dx);
                    let s = q * e + rr * eps;
                    force[0][a] += sxy * dx;
                    force[1][a] += syy * dx;
                    force[3][a] += s * dx;
                    force[0][b] -= sxy * dx;
                    force[1][b] -= syy * dx;
                    force[3][b] -= s * dx;
                }
                (true, false) => add_traction(force, a, p[b], phi, [0.0, 1.0], dx),
                (false, true) => add_traction(force, b, p[a], phi, [0.0, -1.0], dx),
                (false, false) => {}
            }
        }
    }

    // per-cell 2×2 solve, everything multiplied through by dt²
    let dt = ctx.dt;
    let dt2_area = dt * dt / grid.cell_area();
    let beta = 0.5 * ec.damping * dt;
    let a11 = ec.rho11 + beta;
    let a12 = ec.rho12 - beta;
    let a22 = ec.rho22 + beta;
    let det = a11 * a22 - a12 * a12;
    let (i11, i12, i22) = (a22 / det, -a12 / det, a11 / det);

    let mut finite = true;
    for j in r.j0..=r.j1 {
        for i in r.i0..=r.i1 {
            let k = grid.index(i, j);
            for axis in 0..2 {
                let (s, f) = (axis, axis + 2);
                let us = fields[s][k];
                let uf = fields[f][k];
                let us_old = prev[s][k];
                let uf_old = prev[f][k];
                let ms = 2.0 * us - us_old;
                let mf = 2.0 * uf - uf_old;
                let slip = beta * (us_old - uf_old);
                let rhs_s = dt2_area * force[s][k] + ec.rho11 * ms + ec.rho12 * mf + slip;
                let rhs_f = dt2_area * force[f][k] + ec.rho12 * ms + ec.rho22 * mf - slip;
                let xs = i11 * rhs_s + i12 * rhs_f;
                let xf = i12 * rhs_s + i22 * rhs_f;
                finite &= xs.is_finite() && xf.is_finite();
                next[s][k] = xs;
                next[f][k] = xf;
            }
        }
    }
    finite
}

#[inline]
fn add_traction(force: &mut [Vec<f64>; 4], k: usize, p: f64, phi: f64, n: [f64; 2], len: f64) {
    let (ts, tf) = bone_side_traction(p, phi, n);
    force[0][k] += ts[0] * len;
    force[1][k] += ts[1] * len;
    force[2][k] += tf[0] * len;
    force[3][k] += tf[1] * len;
}
