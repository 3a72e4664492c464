use crate::error::{Error, Result};

use super::sampler::PosteriorSamples;

/// Fewest post-burn-in samples accepted by the point and interval estimates.
pub const MIN_KEPT: usize = 100;

/// Running mean; exact on constant data.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter()
        .enumerate()
        .fold(0.0, |m, (k, x)| m + (x - m) / (k + 1) as f64)
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Quantile of sorted data, `q` mapped to the 1-based position `1 + q(n − 1)`
/// with linear interpolation between neighbouring order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Central interval holding `level` of the empirical distribution.
pub fn central_interval(xs: &[f64], level: f64) -> [f64; 2] {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    [quantile_sorted(&v, tail), quantile_sorted(&v, 1.0 - tail)]
}

fn check_kept(s: &PosteriorSamples) -> Result<()> {
    if s.kept() < MIN_KEPT {
        return Err(Error::Usage(format!(
            "{} post-burn-in samples, need at least {MIN_KEPT}",
            s.kept()
        )));
    }
    Ok(())
}

/// Posterior mean of every coordinate over the post-burn-in samples.
pub fn conditional_mean(s: &PosteriorSamples) -> Result<Vec<f64>> {
    check_kept(s)?;
    Ok((0..s.dim).map(|d| mean(&s.pooled(d))).collect())
}

/// Central credible interval of coordinate `d`.
pub fn credible_interval(s: &PosteriorSamples, d: usize, level: f64) -> Result<[f64; 2]> {
    check_kept(s)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Usage(format!("credible level must lie in (0, 1), got {level}")));
    }
    Ok(central_interval(&s.pooled(d), level))
}

/// Integrated autocorrelation time of an ensemble of equally long series.
///
/// The normalized autocorrelation is averaged over walkers and summed up to
/// the smallest lag `M` with `M ≥ window · τ(M)`.
pub fn autocorrelation_time(series: &[Vec<f64>], window: f64) -> f64 {
    let n = series.iter().map(Vec::len).min().unwrap_or(0);
    if n < 2 {
        return 1.0;
    }
    let centred: Vec<(Vec<f64>, f64)> = series
        .iter()
        .map(|x| {
            let m = mean(&x[..n]);
            let c: Vec<f64> = x[..n].iter().map(|v| v - m).collect();
            let c0 = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
            (c, c0)
        })
        .filter(|(_, c0)| *c0 > 0.0)
        .collect();
    if centred.is_empty() {
        return 1.0;
    }
    let mut tau = 1.0;
    for lag in 1..n {
        let rho = centred
            .iter()
            .map(|(c, c0)| {
                c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * c0)
            })
            .sum::<f64>()
            / centred.len() as f64;
        tau += 2.0 * rho;
        if lag as f64 >= window * tau {
            break;
        }
    }
    tau.max(1.0)
}

/// Monte-Carlo standard error of the posterior mean of coordinate `d`.
pub fn mc_standard_error(s: &PosteriorSamples, d: usize) -> f64 {
    let series = s.walker_series(d);
    let tau = autocorrelation_time(&series, 5.0);
    let pooled = series.concat();
    (variance(&pooled) * tau / pooled.len() as f64).sqrt()
}

/// Kolmogorov–Smirnov distance between the sample and a continuous CDF.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Large-sample critical value of the one-sample KS statistic at level `alpha`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(0.5 * alpha).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn samples_from(values: &[f64]) -> PosteriorSamples {
        let n = values.len();
        PosteriorSamples::from_parts(1, n + 1, 1, 1, 0, [&[0.0], values].concat(), vec![0.0; n + 1], vec![true; n + 1])
            .unwrap()
    }

    #[test]
    fn hundred_integers_interval() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        let [lo, hi] = central_interval(&xs, 0.9);
        assert!((lo - 5.95).abs() < 1e-12);
        assert!((hi - 95.05).abs() < 1e-12);
        let s = samples_from(&xs);
        assert_eq!(credible_interval(&s, 0, 0.9).unwrap(), [lo, hi]);
    }

    #[test]
    fn constant_chain() {
        let s = samples_from(&vec![0.42; 150]);
        assert_eq!(conditional_mean(&s).unwrap(), vec![0.42]);
        assert_eq!(credible_interval(&s, 0, 0.9).unwrap(), [0.42, 0.42]);
    }

    #[test]
    fn mean_of_u_and_three_u() {
        let xs: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 1.5 } else { 4.5 }).collect();
        assert_eq!(conditional_mean(&samples_from(&xs)).unwrap(), vec![3.0]);
    }

    #[test]
    fn too_few_samples_are_refused() {
        assert!(conditional_mean(&samples_from(&[1.0; 50])).is_err());
    }

    #[test]
    fn white_noise_has_unit_autocorrelation_time() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let series: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..4000).map(|_| rng.random::<f64>()).collect())
            .collect();
        let tau = autocorrelation_time(&series, 5.0);
        assert!((tau - 1.0).abs() < 0.15, "{tau}");
    }

    #[test]
    fn ar1_autocorrelation_time() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        // x_t = ρ x_{t−1} + e_t has τ = (1 + ρ)/(1 − ρ)
        let rho: f64 = 0.8;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let series: Vec<Vec<f64>> = (0..16)
            .map(|_| {
                let mut x = 0.0;
                (0..20000)
                    .map(|_| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        x = rho * x + e;
                        x
                    })
                    .collect()
            })
            .collect();
        let tau = autocorrelation_time(&series, 5.0);
        assert!((tau - 9.0).abs() < 0.9, "{tau}");
    }

    #[test]
    fn ks_of_a_perfect_grid() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
        assert!((ks_critical_value(10_000, 0.01) - 0.016_276).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn estimates_ignore_sample_order(xs in prop::collection::vec(-1e3f64..1e3, 100..300), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut ys = xs.clone();
            ys.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(central_interval(&xs, 0.9), central_interval(&ys, 0.9));
            let (a, b) = (mean(&xs), mean(&ys));
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn narrower_level_nests(xs in prop::collection::vec(-1e3f64..1e3, 100..300)) {
            let [lo9, hi9] = central_interval(&xs, 0.9);
            let [lo5, hi5] = central_interval(&xs, 0.5);
            prop_assert!(lo9 <= lo5 && hi5 <= hi9);
        }
    }
}
