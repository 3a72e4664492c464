//! A noisy synthetic measurement at 5% relative noise.

use biotinv::config::RunConfig;
use biotinv::domain::{misfit_norm, resolution_cell_size, GeometryConfig};
use biotinv::inference::{synthesize_data, NoiseModel};
use biotinv::{BiotParams, ForwardModel};

fn main() -> biotinv::Result<()> {
    let mut cfg = RunConfig::default();
    let h = resolution_cell_size(cfg.physics.fluid.speed(), 1e5, 10.0);
    cfg.geometry = GeometryConfig::through_transmission(5.0, h);
    cfg.physics.center_frequency = 1e5;
    cfg.physics.n_samples = 256;

    let fwd = cfg.forward_model()?;
    let u = BiotParams::reference();
    let clean = fwd.simulate(&u)?;
    let gamma = NoiseModel::relative(0.05, &clean)?.gamma();
    let noisy = synthesize_data(&u, &fwd, gamma, cfg.seed)?;

    let m = clean.len() as f64;
    let eta = misfit_norm(&noisy.pressures, &clean);
    println!("{} samples, peak |G(u)| {:.4e}", clean.len(), noisy.peak());
    println!("gamma = {gamma:.4e}");
    println!("|eta| = {eta:.4e}, expected about gamma * sqrt(m) = {:.4e}", gamma * m.sqrt());

    // same seed, same noise
    let again = synthesize_data(&u, &fwd, gamma, cfg.seed)?;
    println!("reproducible: {}", again.pressures == noisy.pressures);
    Ok(())
}
