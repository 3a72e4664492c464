//! With a linear forward map and a Gaussian prior, the MAP estimate is the
//! Tikhonov solution `(AᵀA + λI)⁻¹(Aᵀy + λu₀)` with `λ = (γ/σ)²`.
//!
//! Runs Nelder–Mead through the same code path as the bone inversion and
//! compares with the closed form for several noise levels.

use biotinv::domain::Provenance;
use biotinv::inference::{ParamSubset, Prior};
use biotinv::optim::{default_sigma_reg, estimate_map, NMConfig};
use biotinv::{BiotParams, ForwardModel, Param, SignalTrace};
use nalgebra::{DMatrix, DVector};

/// `G(u) = A (α, N, ρ_s)`.
struct Linear {
    times: Vec<f64>,
    a: DMatrix<f64>,
}

impl ForwardModel for Linear {
    fn sample_times(&self) -> &[f64] {
        &self.times
    }

    fn simulate(&self, u: &BiotParams) -> biotinv::Result<Vec<f64>> {
        let x = DVector::from_vec(vec![u.alpha, u.n, u.rho_s]);
        Ok((&self.a * x).iter().copied().collect())
    }
}

fn main() -> biotinv::Result<()> {
    let m = 12;
    let a = DMatrix::from_fn(m, 3, |i, j| ((i + 1) as f64 * (j + 1) as f64 * 0.37).cos());
    let fwd = Linear { times: (1..=m).map(|i| i as f64).collect(), a: a.clone() };
    let x_true = DVector::from_vec(vec![1.5, 2.0, 3.5]);
    let u0 = DVector::from_vec(vec![2.0, 2.5, 3.0]);
    let sigma = 1.0;
    let prior = Prior::Gaussian {
        mean: BiotParams { alpha: u0[0], n: u0[1], rho_s: u0[2], ..BiotParams::reference() },
        std: BiotParams::from_array([sigma; 6]),
    };
    let subset = ParamSubset::new(&[Param::Alpha, Param::N, Param::RhoS], BiotParams::reference())?;
    let nm = NMConfig { f_tol: 0.0, ..NMConfig::default() };

    println!("{:>6}  {:>8}  {:>30}  {:>30}  {:>9}", "gamma", "lambda", "Nelder-Mead", "closed form", "max diff");
    for gamma in [0.05, 0.2, 0.5, 1.0] {
        let clean = &a * &x_true;
        let y: Vec<f64> = clean.iter().enumerate().map(|(i, v)| v + gamma * (1.7 * i as f64).sin()).collect();
        let data = SignalTrace::new(fwd.times.clone(), y.clone(), Provenance::External)?;
        let est = estimate_map(&data, &prior, &subset, default_sigma_reg(gamma), &nm, &fwd)?;
        let x = subset.project(&est.u);

        let lambda = (gamma / sigma).powi(2);
        let lhs = a.transpose() * &a + DMatrix::identity(3, 3) * lambda;
        let rhs = a.transpose() * DVector::from_vec(y) + &u0 * lambda;
        let closed = lhs.lu().solve(&rhs).expect("regularized normal equations are nonsingular");
        let diff = (0..3).map(|i| (x[i] - closed[i]).abs()).fold(0.0, f64::max);
        let show = |v: &[f64]| format!("({:.5}, {:.5}, {:.5})", v[0], v[1], v[2]);
        println!(
            "{gamma:>6}  {lambda:>8.4}  {:>30}  {:>30}  {diff:>9.2e}",
            show(&x),
            show(closed.as_slice())
        );
    }
    Ok(())
}
