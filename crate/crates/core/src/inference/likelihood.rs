use std::sync::atomic::{AtomicUsize, Ordering};

use crate::domain::SignalTrace;
use crate::error::{Error, Result};
use crate::material::BiotParams;
use crate::solver::ForwardModel;

use super::prior::{ParamSubset, Prior};

/// Additive i.i.d. Gaussian noise on every receiver sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    gamma: f64,
}

impl NoiseModel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::config(
                "noise.gamma",
                format!("must be positive, got {gamma}"),
            ));
        }
        Ok(Self { gamma })
    }

    /// Standard deviation as a fraction of the peak absolute signal.
    pub fn relative(level: f64, clean: &[f64]) -> Result<Self> {
        let peak = clean.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        Self::new(level * peak)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Sum of squared residuals `‖y − g‖²`.
pub fn squared_misfit(y: &[f64], g: &[f64]) -> Result<f64> {
    if y.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: g.len(),
        });
    }
    Ok(y.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Checks that `y` is sampled where the forward model samples.
pub fn check_sampling(y: &SignalTrace, fwd: &dyn ForwardModel) -> Result<()> {
    let times = fwd.sample_times();
    if y.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            actual: y.len(),
        });
    }
    let off = y
        .times
        .iter()
        .zip(times)
        .any(|(a, b)| (a - b).abs() > 1e-9 * b.abs().max(f64::MIN_POSITIVE));
    if off {
        return Err(Error::Usage(
            "data and forward model use different sample times".into(),
        ));
    }
    Ok(())
}

/// Runs the forward model, mapping admissibility and stability failures to
/// `None` so callers can assign them zero posterior mass.
pub fn simulate_or_reject(fwd: &dyn ForwardModel, u: &BiotParams) -> Result<Option<Vec<f64>>> {
    match fwd.simulate(u) {
        Ok(g) => Ok(Some(g)),
        Err(Error::Admissibility(_) | Error::Instability { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `−‖y − G(u)‖² / (2γ²)`, or `−∞` when `G(u)` cannot be computed.
pub fn log_likelihood(
    u: &BiotParams,
    y: &SignalTrace,
    noise: &NoiseModel,
    fwd: &dyn ForwardModel,
) -> Result<f64> {
    check_sampling(y, fwd)?;
    match simulate_or_reject(fwd, u)? {
        Some(g) => Ok(-squared_misfit(&y.pressures, &g)? / (2.0 * noise.gamma * noise.gamma)),
        None => Ok(f64::NEG_INFINITY),
    }
}

/// Unnormalized log-posterior over all six parameters. The forward model is
/// not run when the prior vanishes.
pub fn log_posterior(
    u: &BiotParams,
    y: &SignalTrace,
    prior: &Prior,
    noise: &NoiseModel,
    fwd: &dyn ForwardModel,
) -> Result<f64> {
    let lp = prior.log_density(u);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + log_likelihood(u, y, noise, fwd)?)
}

/// A log-density on `ℝ^dim`, safe to evaluate from several threads.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64]) -> Result<f64>;
}

/// Posterior over the free coordinates of a [`ParamSubset`]. Counts how many
/// times the forward model ran.
pub struct Posterior<'a> {
    data: &'a SignalTrace,
    prior: &'a Prior,
    noise: NoiseModel,
    subset: &'a ParamSubset,
    fwd: &'a dyn ForwardModel,
    calls: AtomicUsize,
}

impl<'a> Posterior<'a> {
    pub fn new(
        data: &'a SignalTrace,
        prior: &'a Prior,
        noise: NoiseModel,
        subset: &'a ParamSubset,
        fwd: &'a dyn ForwardModel,
    ) -> Result<Self> {
        prior.validate()?;
        check_sampling(data, fwd)?;
        Ok(Self {
            data,
            prior,
            noise,
            subset,
            fwd,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn forward_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn subset(&self) -> &ParamSubset {
        self.subset
    }

    pub fn prior(&self) -> &Prior {
        self.prior
    }

    /// Prior factors of the free parameters only; fixed ones are constants.
    pub fn log_prior(&self, x: &[f64]) -> f64 {
        self.prior
            .log_density_over(&self.subset.embed(x), self.subset.free())
    }
}

impl LogDensity for Posterior<'_> {
    fn dim(&self) -> usize {
        self.subset.dim()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        let lp = self.log_prior(x);
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let u = self.subset.embed(x);
        match simulate_or_reject(self.fwd, &u)? {
            Some(g) => {
                let g2 = 2.0 * self.noise.gamma * self.noise.gamma;
                Ok(lp - squared_misfit(&self.data.pressures, &g)? / g2)
            }
            None => Ok(f64::NEG_INFINITY),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Provenance;
    use crate::material::Param;

    /// `G(u) = φ · w` on fixed sample times.
    struct Scaled {
        times: Vec<f64>,
        w: Vec<f64>,
    }

    impl ForwardModel for Scaled {
        fn sample_times(&self) -> &[f64] {
            &self.times
        }
        fn simulate(&self, u: &BiotParams) -> Result<Vec<f64>> {
            u.validate()?;
            Ok(self.w.iter().map(|w| u.phi * w).collect())
        }
    }

    fn model(m: usize) -> Scaled {
        Scaled {
            times: (1..=m).map(|i| i as f64).collect(),
            w: (0..m).map(|i| (i as f64).sin()).collect(),
        }
    }

    fn data(fwd: &Scaled, u: &BiotParams, shift: f64) -> SignalTrace {
        let g = fwd.simulate(u).unwrap();
        let p = g.iter().map(|x| x + shift).collect();
        SignalTrace::new(fwd.times.clone(), p, Provenance::External).unwrap()
    }

    #[test]
    fn exact_data_has_zero_log_likelihood() {
        let fwd = model(10);
        let u = BiotParams::reference();
        let y = data(&fwd, &u, 0.0);
        let nm = NoiseModel::new(0.3).unwrap();
        assert_eq!(log_likelihood(&u, &y, &nm, &fwd).unwrap(), 0.0);
    }

    #[test]
    fn residual_of_one_gamma_per_sample() {
        let u = BiotParams::reference();
        let nm = NoiseModel::new(0.25).unwrap();
        let one = model(1);
        let y = data(&one, &u, 0.25);
        assert!((log_likelihood(&u, &y, &nm, &one).unwrap() + 0.5).abs() < 1e-12);
        let many = model(37);
        let y = data(&many, &u, -0.25);
        assert!((log_likelihood(&u, &y, &nm, &many).unwrap() + 18.5).abs() < 1e-12);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let u = BiotParams::reference();
        let y = data(&model(5), &u, 0.0);
        let nm = NoiseModel::new(1.0).unwrap();
        assert!(matches!(
            log_likelihood(&u, &y, &nm, &model(6)),
            Err(Error::DimensionMismatch { expected: 6, actual: 5 })
        ));
    }

    #[test]
    fn inadmissible_parameters_get_no_mass() {
        let fwd = model(4);
        let y = data(&fwd, &BiotParams::reference(), 0.0);
        let mut u = BiotParams::reference();
        u.phi = 1.2;
        let nm = NoiseModel::new(1.0).unwrap();
        assert_eq!(log_likelihood(&u, &y, &nm, &fwd).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn out_of_support_skips_the_forward_model() {
        let fwd = model(4);
        let y = data(&fwd, &BiotParams::reference(), 0.0);
        let prior = Prior::uniform_table(3.0);
        let subset = ParamSubset::new(&[Param::Phi, Param::Alpha], BiotParams::reference()).unwrap();
        let post = Posterior::new(&y, &prior, NoiseModel::new(1.0).unwrap(), &subset, &fwd).unwrap();
        assert_eq!(post.log_density(&[0.2, 1.4]).unwrap(), f64::NEG_INFINITY);
        assert_eq!(post.log_density(&[0.5, 3.5]).unwrap(), f64::NEG_INFINITY);
        assert_eq!(post.forward_calls(), 0);
        assert_eq!(post.log_density(&[0.5, 1.4]).unwrap(), 0.0);
        assert_eq!(post.forward_calls(), 1);
    }

    #[test]
    fn flat_prior_adds_nothing() {
        let fwd = model(8);
        let y = data(&fwd, &BiotParams::reference(), 0.1);
        let prior = Prior::uniform_table(3.0);
        let nm = NoiseModel::new(0.5).unwrap();
        let mut u = BiotParams::reference();
        u.phi = 0.6;
        let post = log_posterior(&u, &y, &prior, &nm, &fwd).unwrap();
        let like = log_likelihood(&u, &y, &nm, &fwd).unwrap();
        assert_eq!(post - like, 0.0);
    }

    #[test]
    fn gaussian_mode_with_exact_data_is_zero() {
        let fwd = model(8);
        let prior = Prior::gaussian_table();
        let u0 = prior.center_params();
        let y = data(&fwd, &u0, 0.0);
        let nm = NoiseModel::new(0.5).unwrap();
        assert_eq!(log_posterior(&u0, &y, &prior, &nm, &fwd).unwrap(), 0.0);
    }

    #[test]
    fn noise_level_must_be_positive() {
        assert!(NoiseModel::new(0.0).is_err());
        assert!(NoiseModel::new(f64::NAN).is_err());
        let nm = NoiseModel::relative(0.05, &[1.0, -4.0, 2.0]).unwrap();
        assert!((nm.gamma() - 0.2).abs() < 1e-15);
    }
}
