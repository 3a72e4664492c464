//! Biot coefficients and wave speeds of the reference bone specimen in water.

use biotinv::material::{compressional_speeds, shear_wave_speed};
use biotinv::{elastic_constants, BiotParams, FluidProps, Param};

fn main() -> biotinv::Result<()> {
    let u = BiotParams::reference();
    let water = FluidProps::water();
    for p in Param::ALL {
        println!("{:>6} = {:e}", p.label(), u.get(p));
    }
    let ec = elastic_constants(&u, &water, 0.0)?;
    println!("\nDelta = {:.6}", ec.delta);
    println!("P = {:.4e} Pa, Q = {:.4e} Pa, R = {:.4e} Pa", ec.p, ec.q, ec.r);
    println!("rho11 = {}, rho12 = {}, rho22 = {} kg/m^3", ec.rho11, ec.rho12, ec.rho22);
    let (fast, slow) = compressional_speeds(&ec)?;
    println!("\nfast P wave {fast:.1} m/s, slow P wave {slow:.1} m/s, shear {:.1} m/s", shear_wave_speed(&ec));
    println!("water {:.1} m/s", water.speed());
    Ok(())
}
