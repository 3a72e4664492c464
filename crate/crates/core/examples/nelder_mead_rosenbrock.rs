//! Nelder–Mead on the Rosenbrock valley, with the per-iteration log.

use biotinv::optim::{nelder_mead, NMConfig, Simplex};

fn rosenbrock(x: &[f64]) -> biotinv::Result<f64> {
    Ok(100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2))
}

fn main() -> biotinv::Result<()> {
    let init = Simplex::axis(&[-1.2, 1.0], &[0.1, 0.1], &rosenbrock)?;
    let r = nelder_mead(&rosenbrock, init, &NMConfig::default())?;

    println!("{:>5}  {:>8}  {:>12}  {:>12}  {:>10}", "iter", "move", "f_best", "f_worst", "diameter");
    for e in r.log.iter().filter(|e| e.iter % 10 == 0) {
        println!(
            "{:>5}  {:>8}  {:>12.4e}  {:>12.4e}  {:>10.3e}",
            e.iter,
            e.operation.as_str(),
            e.f_best,
            e.f_worst,
            e.diameter
        );
    }
    println!(
        "\nminimum near ({:.6}, {:.6}), f = {:.3e}, {} iterations, stopped on {:?}",
        r.x_best[0], r.x_best[1], r.f_best, r.iterations, r.termination
    );
    Ok(())
}
