use std::sync::atomic::{AtomicUsize, Ordering};

use crate::domain::SignalTrace;
use crate::error::{Error, Result};
use crate::inference::{check_sampling, simulate_or_reject, squared_misfit, ParamSubset, Prior};
use crate::material::{BiotParams, Param};
use crate::solver::ForwardModel;

use super::simplex::{nelder_mead, NMConfig, NMResult, Simplex};

/// Default weight of the prior term: `2γ²` makes the objective proportional
/// to the negative log-posterior.
pub fn default_sigma_reg(gamma: f64) -> f64 {
    2.0 * gamma * gamma
}

/// `‖y − G(u)‖² − σ_reg log π₀(u)` over all six parameters; `+∞` outside the
/// prior support or when the solver rejects `u`.
pub fn map_objective(
    u: &BiotParams,
    y: &SignalTrace,
    prior: &Prior,
    sigma_reg: f64,
    fwd: &dyn ForwardModel,
) -> Result<f64> {
    objective_over(u, y, prior, &Param::ALL, sigma_reg, fwd)
}

fn objective_over(
    u: &BiotParams,
    y: &SignalTrace,
    prior: &Prior,
    params: &[Param],
    sigma_reg: f64,
    fwd: &dyn ForwardModel,
) -> Result<f64> {
    let lp = prior.log_density_over(u, params);
    if lp == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    match simulate_or_reject(fwd, u)? {
        Some(g) => Ok(squared_misfit(&y.pressures, &g)? - sigma_reg * lp),
        None => Ok(f64::INFINITY),
    }
}

/// The MAP objective restricted to the free coordinates of a subset; only
/// their prior factors enter the penalty.
pub struct MapProblem<'a> {
    data: &'a SignalTrace,
    prior: &'a Prior,
    subset: &'a ParamSubset,
    sigma_reg: f64,
    fwd: &'a dyn ForwardModel,
    calls: AtomicUsize,
}

impl<'a> MapProblem<'a> {
    pub fn new(
        data: &'a SignalTrace,
        prior: &'a Prior,
        subset: &'a ParamSubset,
        sigma_reg: f64,
        fwd: &'a dyn ForwardModel,
    ) -> Result<Self> {
        prior.validate()?;
        check_sampling(data, fwd)?;
        if !(sigma_reg.is_finite() && sigma_reg >= 0.0) {
            return Err(Error::config(
                "nm.sigma_reg",
                format!("must be non-negative, got {sigma_reg}"),
            ));
        }
        Ok(Self {
            data,
            prior,
            subset,
            sigma_reg,
            fwd,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let u = self.subset.embed(x);
        if self.prior.log_density_over(&u, self.subset.free()) == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        objective_over(
            &u,
            self.data,
            self.prior,
            self.subset.free(),
            self.sigma_reg,
            self.fwd,
        )
    }

    pub fn forward_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    /// Prior centre plus one spread along each free axis. A step that leaves
    /// the support is taken in the opposite direction instead.
    pub fn initial_simplex(&self) -> Result<Simplex> {
        let center = self.prior.center_params();
        let x0 = self.subset.project(&center);
        let mut vertices = vec![x0.clone()];
        for (i, &p) in self.subset.free().iter().enumerate() {
            let h = self.prior.spread(p);
            let mut v = x0.clone();
            v[i] += h;
            let inside = self
                .prior
                .log_density_over(&self.subset.embed(&v), self.subset.free())
                > f64::NEG_INFINITY;
            if !inside {
                v[i] = x0[i] - h;
            }
            vertices.push(v);
        }
        Simplex::new(vertices, &|x: &[f64]| self.value(x))
    }
}

/// Result of a MAP search.
#[derive(Debug, Clone, PartialEq)]
pub struct MapEstimate {
    pub u: BiotParams,
    pub objective: f64,
    pub forward_calls: usize,
    pub search: NMResult,
}

/// Minimizes the MAP objective over the free coordinates of `subset`.
pub fn estimate_map(
    data: &SignalTrace,
    prior: &Prior,
    subset: &ParamSubset,
    sigma_reg: f64,
    cfg: &NMConfig,
    fwd: &dyn ForwardModel,
) -> Result<MapEstimate> {
    cfg.validate()?;
    let problem = MapProblem::new(data, prior, subset, sigma_reg, fwd)?;
    let f = |x: &[f64]| problem.value(x);
    let init = problem.initial_simplex()?;
    let search = nelder_mead(&f, init, cfg)?;
    Ok(MapEstimate {
        u: subset.embed(&search.x_best),
        objective: search.f_best,
        forward_calls: problem.forward_calls(),
        search,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Provenance;

    /// `G(u) = a·φ + b·α` sampled at fixed times.
    struct TwoParam {
        times: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    }

    impl ForwardModel for TwoParam {
        fn sample_times(&self) -> &[f64] {
            &self.times
        }
        fn simulate(&self, u: &BiotParams) -> Result<Vec<f64>> {
            u.validate()?;
            Ok(self
                .a
                .iter()
                .zip(&self.b)
                .map(|(a, b)| a * u.phi + b * u.alpha)
                .collect())
        }
    }

    fn toy() -> TwoParam {
        let m = 12;
        TwoParam {
            times: (1..=m).map(|i| i as f64).collect(),
            a: (0..m).map(|i| (i as f64 * 0.7).cos()).collect(),
            b: (0..m).map(|i| (i as f64 * 0.3).sin()).collect(),
        }
    }

    fn data(fwd: &TwoParam, u: &BiotParams) -> SignalTrace {
        SignalTrace::new(fwd.times.clone(), fwd.simulate(u).unwrap(), Provenance::External).unwrap()
    }

    #[test]
    fn objective_is_infinite_outside_support() {
        let fwd = toy();
        let u = BiotParams::reference();
        let y = data(&fwd, &u);
        let prior = Prior::uniform_table(3.0);
        let mut out = u;
        out.phi = 0.2;
        assert_eq!(map_objective(&out, &y, &prior, 1.0, &fwd).unwrap(), f64::INFINITY);
        let mut bad = u;
        bad.phi = 1.2;
        assert_eq!(map_objective(&bad, &y, &prior, 1.0, &fwd).unwrap(), f64::INFINITY);
        assert_eq!(map_objective(&u, &y, &prior, 1.0, &fwd).unwrap(), 0.0);
    }

    #[test]
    fn noise_free_data_recovers_the_truth() {
        let fwd = toy();
        let mut truth = BiotParams::reference();
        truth.phi = 0.62;
        truth.alpha = 1.9;
        let y = data(&fwd, &truth);
        let prior = Prior::uniform_table(3.0);
        let subset = ParamSubset::new(&[Param::Phi, Param::Alpha], truth).unwrap();
        let cfg = NMConfig { f_tol: 0.0, ..Default::default() };
        let est = estimate_map(&y, &prior, &subset, 0.0, &cfg, &fwd).unwrap();
        assert!((est.u.phi - 0.62).abs() < 1e-6, "{}", est.u.phi);
        assert!((est.u.alpha - 1.9).abs() < 1e-6, "{}", est.u.alpha);
        assert_eq!(est.u.ks, truth.ks);
        assert!(est.forward_calls > est.search.iterations);
    }

    #[test]
    fn three_free_parameters_give_four_vertices() {
        let fwd = toy();
        let u = BiotParams::reference();
        let y = data(&fwd, &u);
        let prior = Prior::gaussian_table();
        let subset = ParamSubset::new(&[Param::Phi, Param::Alpha, Param::Ks], u).unwrap();
        let problem = MapProblem::new(&y, &prior, &subset, 1.0, &fwd).unwrap();
        let s = problem.initial_simplex().unwrap();
        assert_eq!(s.vertices().len(), 4);
        assert!(s.vertices().iter().all(|v| v.len() == 3));
    }

    #[test]
    fn blocked_step_turns_around() {
        let fwd = toy();
        let u = BiotParams::reference();
        let y = data(&fwd, &u);
        // centre 0.9 plus a spread of 0.2 would leave the unit interval
        let prior = Prior::Gaussian {
            mean: BiotParams { phi: 0.9, ..u },
            std: BiotParams { phi: 0.2, ..BiotParams::from_array([1.0; 6]) },
        };
        let subset = ParamSubset::new(&[Param::Phi], u).unwrap();
        let problem = MapProblem::new(&y, &prior, &subset, 1.0, &fwd).unwrap();
        let s = problem.initial_simplex().unwrap();
        let mut phis: Vec<f64> = s.vertices().iter().map(|v| v[0]).collect();
        phis.sort_by(f64::total_cmp);
        assert!((phis[0] - 0.7).abs() < 1e-12 && phis[1] == 0.9);
    }
}
