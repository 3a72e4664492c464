//! Recovering porosity and tortuosity from a noisy trace by MCMC.
//!
//! The other four parameters stay at their true values.

use biotinv::config::{PhysicsConfig, RunConfig};
use biotinv::domain::{misfit_norm, GeometryConfig, Rect};
use biotinv::inference::{
    conditional_mean, credible_interval, ensemble_sample, init_walkers, synthesize_data, NoiseModel,
    ParamSubset, Posterior, Prior, SamplerConfig,
};
use biotinv::{BiotParams, ForwardModel, Param};

/// A 9 cm x 6 cm water box with a 5 cm x 2 cm bone slab, probed at 50 kHz
/// on 3 mm cells. At 100 kHz the misfit over (phi, alpha) develops
/// secondary valleys; at this frequency it has a single curved one.
fn small_setup() -> biotinv::Result<RunConfig> {
    let defaults = RunConfig::default();
    let cfg = RunConfig {
        geometry: GeometryConfig {
            width: 0.09,
            height: 0.06,
            cell_size: 0.003,
            bone: Some(Rect { x_min: 0.02, x_max: 0.07, y_min: 0.02, y_max: 0.04 }),
            source: [0.045, 0.005],
            receiver: [0.045, 0.055],
        },
        physics: PhysicsConfig {
            duration: 7e-5,
            n_samples: 64,
            center_frequency: 5e4,
            ..defaults.physics.clone()
        },
        ..defaults
    };
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> biotinv::Result<()> {
    let fwd = small_setup()?.forward_model()?;

    let truth = BiotParams::reference();
    let clean = fwd.simulate(&truth)?;
    let noise = NoiseModel::relative(0.05, &clean)?;
    let data = synthesize_data(&truth, &fwd, noise.gamma(), 2024)?;

    let prior = Prior::uniform_table(3.0);
    let subset = ParamSubset::new(&[Param::Phi, Param::Alpha], truth)?;
    let post = Posterior::new(&data, &prior, noise, &subset, &fwd)?;
    let walkers = 16;
    let sc = SamplerConfig::new(walkers, 1000, 2024);
    let s = ensemble_sample(&post, init_walkers(&post, walkers, 2024)?, &sc)?;

    let cm = conditional_mean(&s)?;
    for (d, p) in subset.free().iter().enumerate() {
        let [lo, hi] = credible_interval(&s, d, 0.9)?;
        println!(
            "{:>5}: true {:.4}, conditional mean {:.4}, 90% interval [{lo:.4}, {hi:.4}]",
            p.label(),
            truth.get(*p),
            cm[d]
        );
    }
    let fit = fwd.simulate(&subset.embed(&cm))?;
    println!(
        "|y - G(u_CM)| = {:.4e}, |y - G(u_true)| = {:.4e}, {} forward runs",
        misfit_norm(&data.pressures, &fit),
        misfit_norm(&data.pressures, &clean),
        post.forward_calls()
    );
    Ok(())
}
