//! Explicit finite-volume time stepping of the coupled fluid/Biot system.
//!
//! Pressure lives on fluid cells, solid and pore-fluid displacements on bone
//! cells, all collocated at cell centers. Each step first advances the bone
//! with tractions from the current pressure, then advances the pressure with
//! the bone's mixture acceleration closing the interface fluxes.

mod biot;
mod fluid;
mod interface;

pub use biot::{step_biot, BiotScratch};
pub use fluid::step_fluid;
pub use interface::{
    bone_side_traction, couple_interface, fluid_side_gradient, InterfaceCoupling, InterfaceFlux,
};

use serde::{Deserialize, Serialize};

use crate::domain::{source_amplitude, Domain, Grid, Provenance, RegionMap, SignalTrace};
use crate::error::{Error, Result};
use crate::material::{elastic_constants, max_wave_speed, BiotParams, ElasticConstants, FluidProps};

/// Two time levels of every field. Vectors span the whole grid; pressure is
/// zero on bone cells and displacements are zero on fluid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub p_prev: Vec<f64>,
    pub p: Vec<f64>,
    /// Solid displacement components (x, y).
    pub us_prev: [Vec<f64>; 2],
    pub us: [Vec<f64>; 2],
    /// Pore-fluid displacement components (x, y).
    pub uf_prev: [Vec<f64>; 2],
    pub uf: [Vec<f64>; 2],
    pub time: f64,
}

impl FieldState {
    /// The system at rest.
    pub fn zeros(n_cells: usize) -> Self {
        let z = || vec![0.0; n_cells];
        Self {
            p_prev: z(),
            p: z(),
            us_prev: [z(), z()],
            us: [z(), z()],
            uf_prev: [z(), z()],
            uf: [z(), z()],
            time: 0.0,
        }
    }
}

/// Geometry and physics shared by the per-step kernels.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub grid: &'a Grid,
    pub regions: &'a RegionMap,
    pub fluid: FluidProps,
    /// Porosity of the bone; unused without bone.
    pub phi: f64,
    pub dt: f64,
    pub coupling: InterfaceCoupling,
}

/// How the point source and the receiver are mapped onto cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStencil {
    /// Whole weight on the cell containing the point.
    #[default]
    NearestCell,
    /// Bilinear weights over the four surrounding cell centers.
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Courant number in (0, 1].
    pub cfl: f64,
    pub coupling: InterfaceCoupling,
    pub stencil: PointStencil,
    /// Viscous coupling coefficient `b`, kg/(m³·s).
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            coupling: InterfaceCoupling::TwoWay,
            stencil: PointStencil::NearestCell,
            damping: 0.0,
        }
    }
}

/// Time step and step count of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub dt: f64,
    pub n_steps: usize,
    pub cfl: f64,
}

impl StepControl {
    /// Largest stable step that divides the sample spacing of `times` exactly
    /// when they are equally spaced from zero; otherwise the plain CFL step.
    pub fn for_times(times: &[f64], cfl: f64, min_spacing: f64, v_max: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::config("cfl", format!("must lie in (0, 1], got {cfl}")));
        }
        let last = *times
            .last()
            .ok_or_else(|| Error::Geometry("no sample times".into()))?;
        let dt_max = cfl * min_spacing / v_max;
        let interval = times[0];
        let uniform = times
            .iter()
            .enumerate()
            .all(|(i, &t)| ((i + 1) as f64 * interval - t).abs() <= 1e-9 * t);
        if uniform {
            let per_sample = (interval / dt_max).ceil().max(1.0) as usize;
            let dt = interval / per_sample as f64;
            Ok(Self {
                dt,
                n_steps: per_sample * times.len(),
                cfl,
            })
        } else {
            Ok(Self {
                dt: dt_max,
                n_steps: (last / dt_max).ceil() as usize,
                cfl,
            })
        }
    }

    fn check(&self, grid: &Grid, v_max: f64, horizon: f64) -> Result<()> {
        let bound = self.cfl * grid.min_spacing() / v_max;
        if !(self.dt > 0.0) || self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::Usage(format!(
                "time step {:e} exceeds the stability bound {:e}",
                self.dt, bound
            )));
        }
        if (self.n_steps as f64) * self.dt < horizon * (1.0 - 1e-12) {
            return Err(Error::Usage(format!(
                "{} steps of {:e} s do not reach the last sample at {:e} s",
                self.n_steps, self.dt, horizon
            )));
        }
        Ok(())
    }
}

/// Fastest wave speed anywhere in the domain.
pub fn domain_max_speed(fluid: &FluidProps, bone: Option<&ElasticConstants>) -> Result<f64> {
    let c = fluid.speed();
    Ok(match bone {
        Some(ec) => c.max(max_wave_speed(ec)?),
        None => c,
    })
}

/// Cells and weights representing a point under `stencil`.
pub fn point_weights(
    grid: &Grid,
    regions: &RegionMap,
    point: [f64; 2],
    stencil: PointStencil,
) -> Result<Vec<(usize, f64)>> {
    let usable = |i: usize, j: usize| !grid.on_boundary(i, j) && !regions.is_bone(grid.index(i, j));
    match stencil {
        PointStencil::NearestCell => {
            let (i, j) = grid
                .cell_containing(point)
                .ok_or_else(|| Error::Geometry("point outside the domain".into()))?;
            if !usable(i, j) {
                return Err(Error::Geometry(
                    "point must lie in an interior fluid cell".into(),
                ));
            }
            Ok(vec![(grid.index(i, j), 1.0)])
        }
        PointStencil::Bilinear => {
            let fx = (point[0] - grid.origin[0]) / grid.dx - 0.5;
            let fy = (point[1] - grid.origin[1]) / grid.dy - 0.5;
            if !(fx >= 0.0 && fy >= 0.0) {
                return Err(Error::Geometry("point too close to the boundary".into()));
            }
            let (i0, j0) = (fx.floor() as usize, fy.floor() as usize);
            let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
            let mut out = Vec::with_capacity(4);
            for (di, dj, w) in [
                (0, 0, (1.0 - tx) * (1.0 - ty)),
                (1, 0, tx * (1.0 - ty)),
                (0, 1, (1.0 - tx) * ty),
                (1, 1, tx * ty),
            ] {
                if w == 0.0 {
                    continue;
                }
                let (i, j) = (i0 + di, j0 + dj);
                if i >= grid.nx || j >= grid.ny || !usable(i, j) {
                    return Err(Error::Geometry(
                        "bilinear stencil must cover interior fluid cells only".into(),
                    ));
                }
                out.push((grid.index(i, j), w));
            }
            Ok(out)
        }
    }
}

/// A single forward run. Owns its fields; not shareable mid-run.
pub struct Solver<'a> {
    domain: &'a Domain,
    fluid: FluidProps,
    bone: Option<(ElasticConstants, f64)>,
    options: SolverOptions,
    dt: f64,
    state: FieldState,
    p_next: Vec<f64>,
    bone_next: [Vec<f64>; 4],
    scratch: BiotScratch,
    sources: Vec<(usize, f64)>,
    receiver: Vec<(usize, f64)>,
    step: usize,
}

impl<'a> Solver<'a> {
    /// `params` may be `None` only when the domain has no bone.
    pub fn new(
        domain: &'a Domain,
        fluid: FluidProps,
        params: Option<&BiotParams>,
        dt: f64,
        options: SolverOptions,
    ) -> Result<Self> {
        fluid.validate()?;
        let bone = match (domain.regions.bone_cells(), params) {
            (Some(_), Some(bp)) => {
                let ec = elastic_constants(bp, &fluid, options.damping)?;
                Some((ec, bp.phi))
            }
            (Some(_), None) => {
                return Err(Error::Usage(
                    "domain contains bone but no Biot parameters were given".into(),
                ))
            }
            (None, _) => None,
        };
        let grid = &domain.grid;
        let sources = point_weights(grid, &domain.regions, domain.source.position, options.stencil)?;
        let receiver =
            point_weights(grid, &domain.regions, domain.receiver.position, options.stencil)?;
        let n = grid.len();
        Ok(Self {
            domain,
            fluid,
            bone,
            options,
            dt,
            state: FieldState::zeros(n),
            p_next: vec![0.0; n],
            bone_next: [0; 4].map(|_| vec![0.0; n]),
            scratch: BiotScratch::new(n),
            sources,
            receiver,
            step: 0,
        })
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn grid(&self) -> &Grid {
        &self.domain.grid
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn elastic_constants(&self) -> Option<&ElasticConstants> {
        self.bone.as_ref().map(|(ec, _)| ec)
    }

    pub fn receiver_pressure(&self) -> f64 {
        self.receiver.iter().map(|&(k, w)| w * self.state.p[k]).sum()
    }

    /// Advances every field by one time step.
    pub fn step(&mut self) -> Result<()> {
        let domain = self.domain;
        let ctx = StepContext {
            grid: &domain.grid,
            regions: &domain.regions,
            fluid: self.fluid,
            phi: self.bone.map_or(0.0, |(_, phi)| phi),
            dt: self.dt,
            coupling: self.options.coupling,
        };
        let mut finite = true;
        if let Some((ec, _)) = &self.bone {
            if ctx.coupling.bone_moves() {
                finite &= step_biot(&ctx, ec, &self.state, &mut self.scratch, &mut self.bone_next);
            }
        }
        let forcing = source_amplitude(self.state.time, &domain.source);
        let [a, b, c, d] = &self.bone_next;
        finite &= step_fluid(
            &ctx,
            &self.state,
            [a, b, c, d],
            &self.sources,
            forcing,
            &mut self.p_next,
        );

        let st = &mut self.state;
        std::mem::swap(&mut st.p_prev, &mut st.p);
        std::mem::swap(&mut st.p, &mut self.p_next);
        if self.bone.is_some() && ctx.coupling.bone_moves() {
            let [usp0, usp1] = &mut st.us_prev;
            let [us0, us1] = &mut st.us;
            let [ufp0, ufp1] = &mut st.uf_prev;
            let [uf0, uf1] = &mut st.uf;
            let [nsx, nsy, nfx, nfy] = &mut self.bone_next;
            for (prev, cur, next) in [
                (usp0, us0, nsx),
                (usp1, us1, nsy),
                (ufp0, uf0, nfx),
                (ufp1, uf1, nfy),
            ] {
                std::mem::swap(prev, cur);
                std::mem::swap(cur, next);
            }
        }
        self.step += 1;
        st.time = self.step as f64 * self.dt;
        if !finite {
            return Err(Error::Instability {
                step: self.step,
                time: st.time,
            });
        }
        Ok(())
    }
}

/// Runs the coupled solver for `ctrl.n_steps` and returns the receiver trace
/// at the requested sample times, each taken from the nearest time step.
pub fn forward_map(
    u: &BiotParams,
    fluid: &FluidProps,
    domain: &Domain,
    ctrl: &StepControl,
    options: &SolverOptions,
) -> Result<SignalTrace> {
    forward_map_observed(u, fluid, domain, ctrl, options, |_| Ok(()))
}

/// Like [`forward_map`], calling `observe` after every step.
pub fn forward_map_observed<F>(
    u: &BiotParams,
    fluid: &FluidProps,
    domain: &Domain,
    ctrl: &StepControl,
    options: &SolverOptions,
    mut observe: F,
) -> Result<SignalTrace>
where
    F: FnMut(&Solver<'_>) -> Result<()>,
{
    let params = domain.regions.bone_cells().map(|_| u);
    let mut solver = Solver::new(domain, *fluid, params, ctrl.dt, *options)?;
    let v_max = domain_max_speed(fluid, solver.elastic_constants())?;
    let times = &domain.receiver.times;
    ctrl.check(&domain.grid, v_max, *times.last().unwrap_or(&0.0))?;

    let mut record = Vec::with_capacity(ctrl.n_steps + 1);
    record.push(solver.receiver_pressure());
    for _ in 0..ctrl.n_steps {
        solver.step()?;
        record.push(solver.receiver_pressure());
        observe(&solver)?;
    }
    let pressures = times
        .iter()
        .map(|&t| record[((t / ctrl.dt).round() as usize).min(ctrl.n_steps)])
        .collect();
    SignalTrace::new(times.clone(), pressures, Provenance::Simulated)
}

/// Parameters → simulated receiver pressures on a fixed set of sample times.
pub trait ForwardModel: Sync {
    fn sample_times(&self) -> &[f64];
    fn simulate(&self, u: &BiotParams) -> Result<Vec<f64>>;
}

/// The coupled finite-volume forward map on a fixed domain.
#[derive(Debug, Clone)]
pub struct BiotForward {
    pub domain: Domain,
    pub fluid: FluidProps,
    pub options: SolverOptions,
}

impl BiotForward {
    pub fn new(domain: Domain, fluid: FluidProps, options: SolverOptions) -> Self {
        Self {
            domain,
            fluid,
            options,
        }
    }

    /// Step control used for `u`: the CFL bound follows the fastest wave.
    pub fn step_control(&self, u: &BiotParams) -> Result<StepControl> {
        let ec = match self.domain.regions.bone_cells() {
            Some(_) => Some(elastic_constants(u, &self.fluid, self.options.damping)?),
            None => None,
        };
        let v_max = domain_max_speed(&self.fluid, ec.as_ref())?;
        StepControl::for_times(
            &self.domain.receiver.times,
            self.options.cfl,
            self.domain.grid.min_spacing(),
            v_max,
        )
    }

    pub fn trace(&self, u: &BiotParams) -> Result<SignalTrace> {
        let ctrl = self.step_control(u)?;
        forward_map(u, &self.fluid, &self.domain, &ctrl, &self.options)
    }
}

impl ForwardModel for BiotForward {
    fn sample_times(&self) -> &[f64] {
        &self.domain.receiver.times
    }

    fn simulate(&self, u: &BiotParams) -> Result<Vec<f64>> {
        Ok(self.trace(u)?.pressures)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, uniform_sample_times, GeometryConfig, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_domain(amplitude: f64) -> Domain {
        let geom = GeometryConfig::through_transmission(1.0, 4e-4);
        build_domain(&geom, 1e6, amplitude, uniform_sample_times(1.2e-5, 64)).unwrap()
    }

    fn run(dom: &Domain, opts: SolverOptions) -> SignalTrace {
        BiotForward::new(dom.clone(), FluidProps::water(), opts)
            .trace(&BiotParams::reference())
            .unwrap()
    }

    #[test]
    fn zero_source_gives_zero_trace() {
        let tr = run(&small_domain(0.0), SolverOptions::default());
        assert!(tr.pressures.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn runs_are_bitwise_reproducible() {
        let dom = small_domain(1.0);
        let a = run(&dom, SolverOptions::default());
        let b = run(&dom, SolverOptions::default());
        assert_eq!(
            a.pressures.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
            b.pressures.iter().map(|p| p.to_bits()).collect::<Vec<_>>()
        );
        assert!(a.peak() > 0.0);
    }

    #[test]
    fn trace_is_linear_in_amplitude() {
        let a = run(&small_domain(1.0), SolverOptions::default());
        let b = run(&small_domain(2.0), SolverOptions::default());
        for (x, y) in a.pressures.iter().zip(&b.pressures) {
            assert!((y - 2.0 * x).abs() <= 1e-10 * a.peak());
        }
    }

    #[test]
    fn boundary_ring_stays_at_zero() {
        let dom = small_domain(1.0);
        let fwd = BiotForward::new(dom.clone(), FluidProps::water(), SolverOptions::default());
        let u = BiotParams::reference();
        let ctrl = fwd.step_control(&u).unwrap();
        forward_map_observed(&u, &fwd.fluid, &dom, &ctrl, &fwd.options, |s| {
            let g = s.grid();
            for j in 0..g.ny {
                for i in 0..g.nx {
                    if g.on_boundary(i, j) {
                        assert_eq!(s.state().p[g.index(i, j)], 0.0);
                    }
                }
            }
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn displacements_vanish_outside_bone_and_pressure_inside() {
        let dom = small_domain(1.0);
        let fwd = BiotForward::new(dom.clone(), FluidProps::water(), SolverOptions::default());
        let u = BiotParams::reference();
        let ctrl = fwd.step_control(&u).unwrap();
        let mut moved = false;
        forward_map_observed(&u, &fwd.fluid, &dom, &ctrl, &fwd.options, |s| {
            let st = s.state();
            for k in 0..s.grid().len() {
                if dom.regions.is_bone(k) {
                    assert_eq!(st.p[k], 0.0);
                    moved |= st.us[1][k] != 0.0;
                } else {
                    assert_eq!(st.us[0][k], 0.0);
                    assert_eq!(st.uf[1][k], 0.0);
                }
            }
            Ok(())
        })
        .unwrap();
        assert!(moved);
    }

    #[test]
    fn zero_fields_stay_zero() {
        let dom = small_domain(1.0);
        let ec = elastic_constants(&BiotParams::reference(), &FluidProps::water(), 0.0).unwrap();
        let ctx = StepContext {
            grid: &dom.grid,
            regions: &dom.regions,
            fluid: FluidProps::water(),
            phi: 0.5,
            dt: 1e-8,
            coupling: InterfaceCoupling::TwoWay,
        };
        let n = dom.grid.len();
        let state = FieldState::zeros(n);
        let mut scratch = BiotScratch::new(n);
        let mut next = [0; 4].map(|_| vec![1.0; n]);
        assert!(step_biot(&ctx, &ec, &state, &mut scratch, &mut next));
        for k in 0..n {
            if dom.regions.is_bone(k) {
                assert!(next.iter().all(|f| f[k] == 0.0));
            }
        }
    }

    #[test]
    fn rigid_translation_does_not_accelerate() {
        let dom = small_domain(1.0);
        let mut ec = elastic_constants(&BiotParams::reference(), &FluidProps::water(), 0.0).unwrap();
        ec.damping = 3e4;
        let ctx = StepContext {
            grid: &dom.grid,
            regions: &dom.regions,
            fluid: FluidProps::water(),
            phi: 0.5,
            dt: 1e-8,
            coupling: InterfaceCoupling::TwoWay,
        };
        let n = dom.grid.len();
        let mut state = FieldState::zeros(n);
        for k in (0..n).filter(|&k| dom.regions.is_bone(k)) {
            for (c, v) in [(0, 2e-9), (1, -5e-9)] {
                state.us[c][k] = v;
                state.us_prev[c][k] = v;
                state.uf[c][k] = v;
                state.uf_prev[c][k] = v;
            }
        }
        let r = dom.regions.bone_cells().unwrap();
        let mut scratch = BiotScratch::new(n);
        let mut next = [0; 4].map(|_| vec![0.0; n]);
        step_biot(&ctx, &ec, &state, &mut scratch, &mut next);
        // interior cells only: edge cells still feel the (zero) interface traction
        for j in r.j0 + 1..r.j1 {
            for i in r.i0 + 1..r.i1 {
                let k = dom.grid.index(i, j);
                assert!((next[0][k] - 2e-9).abs() < 1e-22);
                assert!((next[3][k] + 5e-9).abs() < 1e-22);
            }
        }
    }

    /// Per-cell linear elasticity with moduli (λ, μ) and density ρ, assembled
    /// face by face from each cell's own point of view.
    fn elastic_step(
        grid: &Grid,
        regions: &RegionMap,
        u: &[Vec<f64>; 2],
        u_prev: &[Vec<f64>; 2],
        p: &[f64],
        (lambda, mu, rho, phi, dt): (f64, f64, f64, f64, f64),
    ) -> [Vec<f64>; 2] {
        let n = grid.len();
        let bone = |i: usize, j: usize| regions.is_bone(grid.index(i, j));
        let h = [grid.dx, grid.dy];
        // cell-centered derivative of component c along axis a
        let grad = |c: usize, a: usize, i: usize, j: usize| {
            let (lo, hi) = if a == 0 {
                ((i - 1, j), (i + 1, j))
            } else {
                ((i, j - 1), (i, j + 1))
            };
            let v = |(x, y): (usize, usize)| u[c][grid.index(x, y)];
            match (bone(lo.0, lo.1), bone(hi.0, hi.1)) {
                (true, true) => (v(hi) - v(lo)) / (2.0 * h[a]),
                (false, true) => (v(hi) - v((i, j))) / h[a],
                (true, false) => (v((i, j)) - v(lo)) / h[a],
                (false, false) => 0.0,
            }
        };
        let mut out = [vec![0.0; n], vec![0.0; n]];
        let r = regions.bone_cells().unwrap();
        for j in r.j0..=r.j1 {
            for i in r.i0..=r.i1 {
                let mut f = [0.0; 2];
                for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (ni, nj) = ((i as i64 + di) as usize, (j as i64 + dj) as usize);
                    let a = if di != 0 { 0 } else { 1 };
                    let t = 1 - a;
                    let sign = (di + dj) as f64;
                    let len = h[t];
                    if bone(ni, nj) {
                        // derivatives at the face
                        let mut d = [[0.0; 2]; 2];
                        for c in 0..2 {
                            d[c][a] = sign * (u[c][grid.index(ni, nj)] - u[c][grid.index(i, j)]) / h[a];
                            d[c][t] = 0.5 * (grad(c, t, i, j) + grad(c, t, ni, nj));
                        }
                        let div = d[0][0] + d[1][1];
                        let normal_stress = lambda * div + 2.0 * mu * d[a][a];
                        let shear = mu * (d[0][1] + d[1][0]);
                        f[a] += sign * normal_stress * len;
                        f[t] += sign * shear * len;
                    } else {
                        f[a] -= sign * (1.0 - phi) * p[grid.index(ni, nj)] * len;
                    }
                }
                let k = grid.index(i, j);
                for c in 0..2 {
                    out[c][k] = 2.0 * u[c][k] - u_prev[c][k] + dt * dt * f[c] / (rho * grid.cell_area());
                }
            }
        }
        out
    }

    #[test]
    fn decoupled_solid_matches_linear_elasticity() {
        let grid = Grid::new(12, 10, 1e-3, 0.8e-3, [0.0, 0.0]).unwrap();
        let rect = Rect {
            x_min: 2e-3,
            x_max: 9.6e-3,
            y_min: 1.5e-3,
            y_max: 7.0e-3,
        };
        let regions = RegionMap::rasterize(&grid, Some(rect)).unwrap();
        let mut ec = elastic_constants(&BiotParams::reference(), &FluidProps::water(), 0.0).unwrap();
        ec.q = 0.0;
        ec.rho12 = 0.0;
        let phi = 0.7;
        let dt = 1e-7;
        let n = grid.len();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut state = FieldState::zeros(n);
        for k in 0..n {
            if regions.is_bone(k) {
                for c in 0..2 {
                    state.us[c][k] = rng.random_range(-1e-9..1e-9);
                    state.us_prev[c][k] = rng.random_range(-1e-9..1e-9);
                    state.uf[c][k] = rng.random_range(-1e-9..1e-9);
                    state.uf_prev[c][k] = rng.random_range(-1e-9..1e-9);
                }
            } else if !grid.on_boundary(k % grid.nx, k / grid.nx) {
                state.p[k] = rng.random_range(-10.0..10.0);
            }
        }
        let ctx = StepContext {
            grid: &grid,
            regions: &regions,
            fluid: FluidProps::water(),
            phi,
            dt,
            coupling: InterfaceCoupling::TwoWay,
        };
        let mut scratch = BiotScratch::new(n);
        let mut next = [0; 4].map(|_| vec![0.0; n]);
        step_biot(&ctx, &ec, &state, &mut scratch, &mut next);
        let expect = elastic_step(
            &grid,
            &regions,
            &state.us,
            &state.us_prev,
            &state.p,
            (ec.lame_lambda(), ec.shear, ec.rho11, phi, dt),
        );
        let scale = expect[0].iter().chain(&expect[1]).fold(0.0f64, |m, v| m.max(v.abs()));
        for c in 0..2 {
            for k in 0..n {
                assert!((next[c][k] - expect[c][k]).abs() <= 1e-12 * scale, "cell {k} comp {c}");
            }
        }
    }

    #[test]
    fn interface_fluxes_follow_pressure_and_motion() {
        let dom = small_domain(1.0);
        let n = dom.grid.len();
        let mut state = FieldState::zeros(n);
        let zero = vec![0.0; n];
        let faces = couple_interface(
            &dom.grid,
            &dom.regions,
            &state,
            [&zero, &zero, &zero, &zero],
            1000.0,
            0.4,
            1e-8,
            InterfaceCoupling::TwoWay,
        );
        assert_eq!(faces.len(), dom.regions.interface_faces(&dom.grid).len());
        assert!(faces.iter().all(|f| f.solid_traction == [0.0; 2] && f.pressure_gradient == 0.0));

        for k in 0..n {
            if !dom.regions.is_bone(k) {
                state.p[k] = 5.0;
            }
        }
        let mut up = vec![0.0; n];
        for k in (0..n).filter(|&k| dom.regions.is_bone(k)) {
            up[k] = 1e-16;
        }
        let faces = couple_interface(
            &dom.grid,
            &dom.regions,
            &state,
            [&zero, &up, &zero, &up],
            1000.0,
            0.4,
            1e-8,
            InterfaceCoupling::TwoWay,
        );
        for f in faces {
            let n = [f64::from(f.face.normal[0]), f64::from(f.face.normal[1])];
            assert!((f.solid_traction[0] + 3.0 * n[0]).abs() < 1e-12);
            assert!((f.fluid_traction[1] + 2.0 * n[1]).abs() < 1e-12);
            // upward acceleration of 1 m/s²
            assert!((f.pressure_gradient - 1000.0 * n[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn onset_matches_acoustic_travel_time() {
        let geom = GeometryConfig::through_transmission(1.0, 1e-4).without_bone();
        let dom = build_domain(&geom, 1e6, 1.0, uniform_sample_times(8e-6, 100)).unwrap();
        let fluid = FluidProps::water();
        let opts = SolverOptions::default();
        let u = BiotParams::reference();
        let ctrl = BiotForward::new(dom.clone(), fluid, opts).step_control(&u).unwrap();
        let mut rec = Vec::new();
        forward_map_observed(&u, &fluid, &dom, &ctrl, &opts, |s| {
            rec.push((s.time(), s.receiver_pressure()));
            Ok(())
        })
        .unwrap();
        let (s, r) = (dom.source_cell(), dom.receiver_cell());
        let (s, r) = (dom.grid.center(s.0, s.1), dom.grid.center(r.0, r.1));
        let d = ((s[0] - r[0]).powi(2) + (s[1] - r[1]).powi(2)).sqrt();
        let c = fluid.speed();
        let peak = rec.iter().fold(0.0f64, |m, x| m.max(x.1.abs()));
        let onset = rec.iter().find(|x| x.1.abs() >= 0.01 * peak).unwrap().0;
        assert!((onset - d / c).abs() <= dom.grid.dx / c);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let dom = small_domain(1.0);
        let u = BiotParams::reference();
        let fwd = BiotForward::new(dom.clone(), FluidProps::water(), SolverOptions::default());
        let mut ctrl = fwd.step_control(&u).unwrap();
        ctrl.dt *= 1.5;
        assert!(forward_map(&u, &fwd.fluid, &dom, &ctrl, &fwd.options).is_err());
    }

    #[test]
    fn supercritical_courant_number_blows_up() {
        let opts = SolverOptions {
            cfl: 1.0,
            ..Default::default()
        };
        let geom = GeometryConfig::through_transmission(1.0, 4e-4);
        let long = build_domain(&geom, 1e6, 1.0, uniform_sample_times(2e-4, 64)).unwrap();
        let err = BiotForward::new(long, FluidProps::water(), opts)
            .trace(&BiotParams::reference())
            .unwrap_err();
        assert!(matches!(err, Error::Instability { .. }));
    }

    #[test]
    fn pressure_stays_bounded_after_the_pulse() {
        let geom = GeometryConfig::through_transmission(1.0, 2e-4);
        let dom = build_domain(&geom, 1e6, 1.0, uniform_sample_times(7e-5, 128)).unwrap();
        let fwd = BiotForward::new(dom.clone(), FluidProps::water(), SolverOptions::default());
        let u = BiotParams::reference();
        let ctrl = fwd.step_control(&u).unwrap();
        let pulse_end = 2.0 / dom.source.center_frequency;
        let (mut early, mut late) = (0.0f64, 0.0f64);
        forward_map_observed(&u, &fwd.fluid, &dom, &ctrl, &fwd.options, |s| {
            let m = s.state().p.iter().fold(0.0f64, |m, p| m.max(p.abs()));
            if s.time() <= pulse_end {
                early = early.max(m);
            } else {
                late = late.max(m);
            }
            Ok(())
        })
        .unwrap();
        assert!(late.is_finite() && late <= 10.0 * early, "{late} vs {early}");
    }

    #[test]
    fn uniform_times_divide_into_whole_steps() {
        let times = uniform_sample_times(7e-5, 512);
        let ctrl = StepControl::for_times(&times, 0.5, 1e-4, 2660.0).unwrap();
        assert!(ctrl.dt <= 0.5 * 1e-4 / 2660.0);
        assert_eq!(ctrl.n_steps % 512, 0);
        assert!((ctrl.n_steps as f64 * ctrl.dt - 7e-5).abs() < 1e-15);
    }

    #[test]
    fn bilinear_weights_sum_to_one() {
        let grid = Grid::new(10, 10, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let regions = RegionMap::rasterize(&grid, None).unwrap();
        let w = point_weights(&grid, &regions, [4.2, 5.0], PointStencil::Bilinear).unwrap();
        assert!((w.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w.len(), 4);
        let on_center = point_weights(&grid, &regions, [4.5, 5.5], PointStencil::Bilinear).unwrap();
        assert_eq!(on_center, vec![(grid.index(4, 5), 1.0)]);
    }
}
