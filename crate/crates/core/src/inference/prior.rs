use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{BiotParams, Param};

/// Independent per-parameter prior, truncated to the hard physical bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    Gaussian { mean: BiotParams, std: BiotParams },
    Uniform { lower: BiotParams, upper: BiotParams },
}

impl Prior {
    /// Gaussian priors centred away from the reference specimen.
    pub fn gaussian_table() -> Self {
        Prior::Gaussian {
            mean: BiotParams {
                phi: 0.8,
                alpha: 1.6,
                ks: 25e9,
                kb: 3.8e9,
                n: 4.5e9,
                rho_s: 1940.0,
            },
            std: BiotParams {
                phi: 0.1,
                alpha: 1.5,
                ks: 9e9,
                kb: 2.5e9,
                n: 5.5e9,
                rho_s: 250.0,
            },
        }
    }

    /// Physically meaningful intervals; tortuosity is cut at `alpha_max`.
    pub fn uniform_table(alpha_max: f64) -> Self {
        Prior::Uniform {
            lower: BiotParams {
                phi: 0.3,
                alpha: 1.0,
                ks: 1.5e10,
                kb: 2.0e9,
                n: 2.0e9,
                rho_s: 1000.0,
            },
            upper: BiotParams {
                phi: 0.95,
                alpha: alpha_max,
                ks: 3.0e10,
                kb: 4.5e9,
                n: 3.0e9,
                rho_s: 3000.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in Param::ALL {
            match self {
                Prior::Gaussian { mean, std } => {
                    let (m, s) = (mean.get(p), std.get(p));
                    if !m.is_finite() {
                        return Err(Error::config(
                            format!("prior.mean.{}", p.key()),
                            "must be finite",
                        ));
                    }
                    if !(s.is_finite() && s > 0.0) {
                        return Err(Error::config(
                            format!("prior.std.{}", p.key()),
                            format!("must be positive, got {s}"),
                        ));
                    }
                }
                Prior::Uniform { lower, upper } => {
                    let (a, b) = (lower.get(p), upper.get(p));
                    if !(a.is_finite() && b.is_finite() && a < b) {
                        return Err(Error::config(
                            format!("prior.upper.{}", p.key()),
                            format!("need finite lower < upper, got [{a}, {b}]"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Log-density of the factors belonging to `params`, up to a constant.
    /// `−∞` outside the support or the hard physical bounds.
    pub fn log_density_over(&self, u: &BiotParams, params: &[Param]) -> f64 {
        if !u.within_physical_bounds() {
            return f64::NEG_INFINITY;
        }
        let mut acc = 0.0;
        for &p in params {
            let x = u.get(p);
            match self {
                Prior::Gaussian { mean, std } => {
                    let z = (x - mean.get(p)) / std.get(p);
                    acc -= 0.5 * z * z;
                }
                Prior::Uniform { lower, upper } => {
                    if !(x >= lower.get(p) && x <= upper.get(p)) {
                        return f64::NEG_INFINITY;
                    }
                }
            }
        }
        acc
    }

    /// Log-density over all six parameters.
    pub fn log_density(&self, u: &BiotParams) -> f64 {
        self.log_density_over(u, &Param::ALL)
    }

    /// Mean of a Gaussian factor or midpoint of a uniform one.
    pub fn center(&self, p: Param) -> f64 {
        match self {
            Prior::Gaussian { mean, .. } => mean.get(p),
            Prior::Uniform { lower, upper } => 0.5 * (lower.get(p) + upper.get(p)),
        }
    }

    /// One standard deviation, or a tenth of the interval width.
    pub fn spread(&self, p: Param) -> f64 {
        match self {
            Prior::Gaussian { std, .. } => std.get(p),
            Prior::Uniform { lower, upper } => 0.1 * (upper.get(p) - lower.get(p)),
        }
    }

    /// Point at the centre of every factor.
    pub fn center_params(&self) -> BiotParams {
        BiotParams::from_array(Param::ALL.map(|p| self.center(p)))
    }

    /// Independent draw of parameter `p`. Gaussian draws are not truncated
    /// here; callers reject points with `−∞` density.
    pub fn sample<R: Rng + ?Sized>(&self, p: Param, rng: &mut R) -> f64 {
        match self {
            Prior::Gaussian { mean, std } => Normal::new(mean.get(p), std.get(p))
                .expect("validated std")
                .sample(rng),
            Prior::Uniform { lower, upper } => rng.random_range(lower.get(p)..=upper.get(p)),
        }
    }
}

/// Which parameters are inferred; the rest stay at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSubset {
    free: Vec<Param>,
    base: BiotParams,
}

impl ParamSubset {
    /// `free` is kept in canonical parameter order without duplicates.
    pub fn new(free: &[Param], base: BiotParams) -> Result<Self> {
        let mut free = free.to_vec();
        free.sort();
        free.dedup();
        if free.is_empty() {
            return Err(Error::Usage("empty parameter subset".into()));
        }
        Ok(Self { free, base })
    }

    pub fn all(base: BiotParams) -> Self {
        Self {
            free: Param::ALL.to_vec(),
            base,
        }
    }

    pub fn free(&self) -> &[Param] {
        &self.free
    }

    pub fn base(&self) -> &BiotParams {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Full parameter set with the free coordinates replaced by `x`.
    pub fn embed(&self, x: &[f64]) -> BiotParams {
        debug_assert_eq!(x.len(), self.free.len());
        let mut u = self.base;
        for (&p, &v) in self.free.iter().zip(x) {
            u.set(p, v);
        }
        u
    }

    pub fn project(&self, u: &BiotParams) -> Vec<f64> {
        self.free.iter().map(|&p| u.get(p)).collect()
    }

    /// Boolean mask in canonical order, as written to summaries.
    pub fn mask(&self) -> [bool; 6] {
        Param::ALL.map(|p| self.free.contains(&p))
    }
}
