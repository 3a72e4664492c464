use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::likelihood::{LogDensity, Posterior};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_walkers: usize,
    pub n_steps: usize,
    /// Leading steps of every walker discarded from estimates.
    pub burn_in: usize,
    /// Stretch scale `a > 1`.
    pub stretch: f64,
    pub seed: u64,
}

impl SamplerConfig {
    /// Burn-in of 20 % and stretch scale 2.
    pub fn new(n_walkers: usize, n_steps: usize, seed: u64) -> Self {
        Self {
            n_walkers,
            n_steps,
            burn_in: n_steps / 5,
            stretch: 2.0,
            seed,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_walkers < 2 * dim + 2 {
            return Err(Error::config(
                "mcmc.walkers",
                format!(
                    "need at least {} walkers for {dim} parameters, got {}",
                    2 * dim + 2,
                    self.n_walkers
                ),
            ));
        }
        if self.n_steps == 0 || self.burn_in >= self.n_steps {
            return Err(Error::config(
                "mcmc.burn_in",
                format!(
                    "burn-in {} must be below the step count {}",
                    self.burn_in, self.n_steps
                ),
            ));
        }
        if !(self.stretch > 1.0 && self.stretch.is_finite()) {
            return Err(Error::config(
                "mcmc.stretch",
                format!("must exceed 1, got {}", self.stretch),
            ));
        }
        Ok(())
    }
}

/// Chain of an ensemble run, stored walker × step × parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub n_walkers: usize,
    pub n_steps: usize,
    pub dim: usize,
    pub burn_in: usize,
    pub seed: u64,
    chain: Vec<f64>,
    log_post: Vec<f64>,
    accepted: Vec<bool>,
}

impl PosteriorSamples {
    /// Assembles a sample set from raw walker-major arrays.
    pub fn from_parts(
        n_walkers: usize,
        n_steps: usize,
        dim: usize,
        burn_in: usize,
        seed: u64,
        chain: Vec<f64>,
        log_post: Vec<f64>,
        accepted: Vec<bool>,
    ) -> Result<Self> {
        let cells = n_walkers * n_steps;
        for (len, want) in [
            (chain.len(), cells * dim),
            (log_post.len(), cells),
            (accepted.len(), cells),
        ] {
            if len != want {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    actual: len,
                });
            }
        }
        if burn_in >= n_steps {
            return Err(Error::Usage(format!(
                "burn-in {burn_in} must be below the step count {n_steps}"
            )));
        }
        Ok(Self {
            n_walkers,
            n_steps,
            dim,
            burn_in,
            seed,
            chain,
            log_post,
            accepted,
        })
    }

    #[inline]
    fn cell(&self, walker: usize, step: usize) -> usize {
        walker * self.n_steps + step
    }

    pub fn sample(&self, walker: usize, step: usize) -> &[f64] {
        let k = self.cell(walker, step) * self.dim;
        &self.chain[k..k + self.dim]
    }

    pub fn log_post(&self, walker: usize, step: usize) -> f64 {
        self.log_post[self.cell(walker, step)]
    }

    pub fn accepted(&self, walker: usize, step: usize) -> bool {
        self.accepted[self.cell(walker, step)]
    }

    /// Fraction of accepted proposals per walker over the whole run.
    pub fn acceptance_rates(&self) -> Vec<f64> {
        (0..self.n_walkers)
            .map(|w| {
                let row = &self.accepted[self.cell(w, 0)..self.cell(w, 0) + self.n_steps];
                row.iter().filter(|&&a| a).count() as f64 / self.n_steps as f64
            })
            .collect()
    }

    /// Post-burn-in values of coordinate `d`, one series per walker.
    pub fn walker_series(&self, d: usize) -> Vec<Vec<f64>> {
        (0..self.n_walkers)
            .map(|w| {
                (self.burn_in..self.n_steps)
                    .map(|s| self.sample(w, s)[d])
                    .collect()
            })
            .collect()
    }

    /// Post-burn-in values of coordinate `d`, pooled over walkers.
    pub fn pooled(&self, d: usize) -> Vec<f64> {
        self.walker_series(d).concat()
    }

    pub fn kept_per_walker(&self) -> usize {
        self.n_steps - self.burn_in
    }

    pub fn kept(&self) -> usize {
        self.n_walkers * self.kept_per_walker()
    }
}

/// Draws `z` with density proportional to `1/√z` on `[1/a, a]` from a
/// uniform variate `u ∈ [0, 1)`.
#[inline]
pub fn stretch_factor(a: f64, u: f64) -> f64 {
    let s = (a - 1.0) * u + 1.0;
    s * s / a
}

/// `min(1, z^(d−1) exp(lp_new − lp_old))`.
#[inline]
pub fn acceptance_probability(z: f64, dim: usize, lp_new: f64, lp_old: f64) -> f64 {
    if lp_new.is_nan() || lp_new == f64::NEG_INFINITY {
        return 0.0;
    }
    let log_q = (dim as f64 - 1.0) * z.ln() + lp_new - lp_old;
    if log_q >= 0.0 {
        1.0
    } else {
        log_q.exp()
    }
}

fn evaluate<D: LogDensity>(target: &D, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points
        .par_iter()
        .map(|x| {
            target
                .log_density(x)
                .map(|v| if v.is_nan() { f64::NEG_INFINITY } else { v })
        })
        .collect()
}

/// Affine-invariant ensemble sampler with the stretch move.
///
/// The ensemble is split into the first and second half of the walker
/// indices. Each step updates the first half against the frozen second half,
/// then the second half against the updated first half. Before any
/// evaluation in a half-step the random stream is read in walker order, three
/// draws per walker: partner index, stretch variate, acceptance variate.
/// Proposals are then evaluated in parallel, so the chain depends only on
/// the seed.
pub fn ensemble_sample<D: LogDensity>(
    target: &D,
    init: Vec<Vec<f64>>,
    cfg: &SamplerConfig,
) -> Result<PosteriorSamples> {
    let dim = target.dim();
    cfg.validate(dim)?;
    if init.len() != cfg.n_walkers {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_walkers,
            actual: init.len(),
        });
    }
    if let Some(bad) = init.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    for (i, a) in init.iter().enumerate() {
        if init[..i].iter().any(|b| b == a) {
            return Err(Error::Initialization(format!(
                "walker {i} duplicates an earlier walker"
            )));
        }
    }
    let mut lp = evaluate(target, &init)?;
    if let Some(w) = lp.iter().position(|v| !v.is_finite()) {
        return Err(Error::Initialization(format!(
            "walker {w} starts with zero posterior density"
        )));
    }

    let (nw, ns) = (cfg.n_walkers, cfg.n_steps);
    let mut pos = init;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chain = vec![0.0; nw * ns * dim];
    let mut log_post = vec![0.0; nw * ns];
    let mut accepted = vec![false; nw * ns];
    let half = nw / 2;
    let halves = [(0..half), (half..nw)];

    for step in 0..ns {
        let mut moved = vec![false; nw];
        for h in 0..2 {
            let active = halves[h].clone();
            let other = halves[1 - h].clone();
            let draws: Vec<(usize, f64, f64)> = active
                .clone()
                .map(|_| {
                    let j = other.start + rng.random_range(0..other.len());
                    let z = stretch_factor(cfg.stretch, rng.random::<f64>());
                    let r = rng.random::<f64>();
                    (j, z, r)
                })
                .collect();
            let proposals: Vec<Vec<f64>> = active
                .clone()
                .zip(&draws)
                .map(|(k, &(j, z, _))| {
                    pos[j]
                        .iter()
                        .zip(&pos[k])
                        .map(|(xj, xk)| xj + z * (xk - xj))
                        .collect()
                })
                .collect();
            let lp_new = evaluate(target, &proposals)?;
            for ((k, y), (&(_, z, r), lpn)) in active.zip(proposals).zip(draws.iter().zip(lp_new)) {
                if r < acceptance_probability(z, dim, lpn, lp[k]) {
                    pos[k] = y;
                    lp[k] = lpn;
                    moved[k] = true;
                }
            }
        }
        for w in 0..nw {
            let c = w * ns + step;
            chain[c * dim..(c + 1) * dim].copy_from_slice(&pos[w]);
            log_post[c] = lp[w];
            accepted[c] = moved[w];
        }
    }

    PosteriorSamples::from_parts(nw, ns, dim, cfg.burn_in, cfg.seed, chain, log_post, accepted)
}

/// Initial walkers drawn independently from the prior of the free
/// parameters, redrawn until each has finite posterior density.
pub fn init_walkers(post: &Posterior<'_>, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    const MAX_ROUNDS: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free = post.subset().free().to_vec();
    let prior = *post.prior();
    let mut out: Vec<Option<Vec<f64>>> = vec![None; n];
    for _ in 0..MAX_ROUNDS {
        let pending: Vec<usize> = (0..n).filter(|&i| out[i].is_none()).collect();
        if pending.is_empty() {
            break;
        }
        let draws: Vec<Vec<f64>> = pending
            .iter()
            .map(|_| free.iter().map(|&p| prior.sample(p, &mut rng)).collect())
            .collect();
        let lp: Vec<f64> = draws
            .par_iter()
            .map(|x| post.log_density(x))
            .collect::<Result<_>>()?;
        for ((i, x), v) in pending.into_iter().zip(draws).zip(lp) {
            if v.is_finite() {
                out[i] = Some(x);
            }
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, x)| {
            x.ok_or_else(|| {
                Error::Initialization(format!(
                    "no prior draw with finite posterior density for walker {i} after {MAX_ROUNDS} attempts"
                ))
            })
        })
        .collect()
}
