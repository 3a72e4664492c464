use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::{Provenance, SignalTrace};
use crate::error::{Error, Result};
use crate::material::BiotParams;
use crate::solver::ForwardModel;

/// `clean` plus seeded i.i.d. Gaussian noise of standard deviation `gamma`.
/// `gamma = 0` returns the clean pressures unchanged.
pub fn add_noise(clean: &SignalTrace, gamma: f64, seed: u64) -> Result<SignalTrace> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::config(
            "noise.gamma",
            format!("must be non-negative, got {gamma}"),
        ));
    }
    let pressures = if gamma == 0.0 {
        clean.pressures.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        clean
            .pressures
            .iter()
            .map(|p| {
                let e: f64 = StandardNormal.sample(&mut rng);
                p + gamma * e
            })
            .collect()
    };
    SignalTrace::new(clean.times.clone(), pressures, Provenance::SyntheticNoisy)
}

/// Noisy synthetic measurement `G(u_true) + η`.
pub fn synthesize_data(
    u_true: &BiotParams,
    fwd: &dyn ForwardModel,
    gamma: f64,
    seed: u64,
) -> Result<SignalTrace> {
    let clean = SignalTrace::new(
        fwd.sample_times().to_vec(),
        fwd.simulate(u_true)?,
        Provenance::Simulated,
    )?;
    add_noise(&clean, gamma, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::stats::{mean, variance};

    fn clean(m: usize) -> SignalTrace {
        let t: Vec<f64> = (1..=m).map(|i| i as f64 * 1e-7).collect();
        let p = t.iter().map(|t| (t * 3e6).sin()).collect();
        SignalTrace::new(t, p, Provenance::Simulated).unwrap()
    }

    #[test]
    fn zero_noise_is_bitwise_clean() {
        let c = clean(64);
        let y = add_noise(&c, 0.0, 1).unwrap();
        assert_eq!(y.pressures, c.pressures);
        assert_eq!(y.provenance, Provenance::SyntheticNoisy);
    }

    #[test]
    fn seeded_noise_repeats() {
        let c = clean(64);
        assert_eq!(add_noise(&c, 0.1, 9).unwrap(), add_noise(&c, 0.1, 9).unwrap());
        assert_ne!(add_noise(&c, 0.1, 9).unwrap(), add_noise(&c, 0.1, 10).unwrap());
    }

    #[test]
    fn residual_spread_matches_gamma() {
        let c = clean(512);
        let gamma = 0.05 * c.peak();
        let y = add_noise(&c, gamma, 2024).unwrap();
        let r: Vec<f64> = y.pressures.iter().zip(&c.pressures).map(|(a, b)| a - b).collect();
        let sd = variance(&r).sqrt();
        assert!((sd / gamma - 1.0).abs() < 0.1, "{sd} vs {gamma}");
        assert!(mean(&r).abs() < 4.0 * gamma / (512f64).sqrt());
    }
}
