//! Receiver trace through a bone sample at 100 kHz on a coarse grid.
//!
//! Prints the arrival time and peak of the transmitted pulse, then the
//! trace with a crude text plot.

use biotinv::config::RunConfig;
use biotinv::domain::{resolution_cell_size, GeometryConfig};
use biotinv::BiotParams;

fn main() -> biotinv::Result<()> {
    let mut cfg = RunConfig::default();
    let h = resolution_cell_size(cfg.physics.fluid.speed(), 1e5, 10.0);
    cfg.geometry = GeometryConfig::through_transmission(5.0, h);
    cfg.physics.center_frequency = 1e5;
    cfg.physics.n_samples = 256;
    cfg.validate()?;

    let fwd = cfg.forward_model()?;
    let u = BiotParams::reference();
    let ctrl = fwd.step_control(&u)?;
    let grid = &fwd.domain.grid;
    println!("grid {} x {} cells of {:.3e} m", grid.nx, grid.ny, grid.dx);
    println!("dt {:.3e} s, {} steps", ctrl.dt, ctrl.n_steps);

    let trace = fwd.trace(&u)?;
    let peak = trace.peak();
    let onset = trace
        .times
        .iter()
        .zip(&trace.pressures)
        .find(|(_, p)| p.abs() > 0.01 * peak)
        .map_or("never".to_owned(), |(t, _)| format!("{t:.3e} s"));
    println!("peak |P| = {peak:.4e}, onset (1% of peak) at {onset}\n");

    for (t, p) in trace.times.iter().zip(&trace.pressures).step_by(8) {
        let col = (30.0 + 28.0 * p / peak).round() as usize;
        println!("{:9.3e}  {:+.3e}  {}*", t, p, " ".repeat(col));
    }
    Ok(())
}
