//! Watching the wavefield during a forward run.
//!
//! The observer sees the solver after every step. Here it tracks where the
//! fluid pressure peaks and how far the bone frame has moved.

use biotinv::config::RunConfig;
use biotinv::domain::{resolution_cell_size, GeometryConfig};
use biotinv::solver::forward_map_observed;
use biotinv::BiotParams;

fn main() -> biotinv::Result<()> {
    let mut cfg = RunConfig::default();
    let h = resolution_cell_size(cfg.physics.fluid.speed(), 1e5, 10.0);
    cfg.geometry = GeometryConfig::through_transmission(5.0, h);
    cfg.physics.center_frequency = 1e5;
    cfg.physics.n_samples = 256;

    let fwd = cfg.forward_model()?;
    let u = BiotParams::reference();
    let ctrl = fwd.step_control(&u)?;
    let every = ctrl.n_steps / 12;
    println!("{:>6}  {:>10}  {:>11}  {:>16}  {:>11}", "step", "t [s]", "max |P|", "at (x, y) [m]", "max |u_s|");
    forward_map_observed(&u, &fwd.fluid, &fwd.domain, &ctrl, &fwd.options, |s| {
        if s.steps_taken() % every != 0 {
            return Ok(());
        }
        let grid = s.grid();
        let p = &s.state().p;
        let (k, max) = p
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bk, bm), (k, v)| if v.abs() > bm { (k, v.abs()) } else { (bk, bm) });
        let c = grid.center(k % grid.nx, k / grid.nx);
        let [ux, uy] = &s.state().us;
        let frame = ux.iter().zip(uy).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
        println!(
            "{:>6}  {:>10.3e}  {:>11.4e}  ({:.4}, {:.4})  {:>11.4e}",
            s.steps_taken(),
            s.time(),
            max,
            c[0],
            c[1],
            frame
        );
        Ok(())
    })?;
    Ok(())
}
