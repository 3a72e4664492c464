//! The four pipeline stages behind the `biotinv` subcommands.
//!
//! Each stage takes a validated [`RunConfig`] and an output directory and
//! writes its files atomically. Output files carry the config hash and the
//! seed, and rerunning a stage with the same inputs reproduces every byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::domain::{misfit_norm, SignalTrace};
use crate::error::{Error, Result};
use crate::inference::stats::{autocorrelation_time, mean};
use crate::inference::{
    add_noise, conditional_mean, credible_interval, ensemble_sample, init_walkers,
    mc_standard_error, NoiseModel, ParamSubset, Posterior, Prior,
};
use crate::io::{fmt_f64, read_dataset, write_csv, write_json, write_snapshot, write_trace, Dataset};
use crate::material::Param;
use crate::optim::{default_sigma_reg, estimate_map};
use crate::solver::{forward_map_observed, BiotForward, ForwardModel};

pub const TRACE_FILE: &str = "trace.csv";
pub const DATASET_FILE: &str = "dataset.csv";
pub const CHAIN_FILE: &str = "chain.csv";
pub const CM_SUMMARY_FILE: &str = "summary.json";
pub const CM_FIT_FILE: &str = "fit.csv";
pub const MAP_LOG_FILE: &str = "optim_log.csv";
pub const MAP_SUMMARY_FILE: &str = "map_summary.json";
pub const MAP_FIT_FILE: &str = "map_fit.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Credible level of the reported intervals.
pub const LEVEL: f64 = 0.9;

fn meta(cfg: &RunConfig) -> Vec<(&'static str, String)> {
    vec![
        ("config_hash", cfg.hash()),
        ("seed", cfg.seed.to_string()),
        ("n_samples", cfg.physics.n_samples.to_string()),
    ]
}

fn prior_kind(p: &Prior) -> &'static str {
    match p {
        Prior::Gaussian { .. } => "gaussian",
        Prior::Uniform { .. } => "uniform",
    }
}

/// Forward solve at `physics.biot`; writes `trace.csv` and, when `snapshots`
/// is set, the pressure field every that many steps.
pub fn cmd_forward(cfg: &RunConfig, out: &Path, snapshots: Option<usize>) -> Result<SignalTrace> {
    if snapshots == Some(0) {
        return Err(Error::Usage("--snapshots must be at least 1".into()));
    }
    let fwd = cfg.forward_model()?;
    let u = cfg.physics.biot;
    let ctrl = fwd.step_control(&u)?;
    let hash = cfg.hash();
    let snap_dir = out.join(SNAPSHOT_DIR);
    let trace = forward_map_observed(&u, &fwd.fluid, &fwd.domain, &ctrl, &fwd.options, |s| {
        match snapshots {
            Some(k) if s.steps_taken() % k == 0 => write_snapshot(
                &snap_dir.join(format!("p_{:06}.csv", s.steps_taken())),
                s.time(),
                s.grid(),
                &s.state().p,
                &hash,
            ),
            _ => Ok(()),
        }
    })?;
    let mut m = meta(cfg);
    m.push(("dt", fmt_f64(ctrl.dt)));
    m.push(("n_steps", ctrl.n_steps.to_string()));
    write_trace(&out.join(TRACE_FILE), &trace, &m)?;
    Ok(trace)
}

/// Noise level of the synthetic measurement for a given clean signal.
pub fn synthesis_gamma(cfg: &RunConfig, clean: &[f64]) -> f64 {
    match (cfg.noise.gamma, cfg.noise.relative) {
        (Some(g), _) => g,
        (None, Some(r)) => r * clean.iter().fold(0.0f64, |m, p| m.max(p.abs())),
        (None, None) => unreachable!("validated config sets a noise level"),
    }
}

/// Forward solve plus seeded noise; writes `dataset.csv` with the clean
/// column kept for test oracles.
pub fn cmd_synthesize(cfg: &RunConfig, out: &Path) -> Result<Dataset> {
    let fwd = cfg.forward_model()?;
    let clean = fwd.trace(&cfg.physics.biot)?;
    let gamma = synthesis_gamma(cfg, &clean.pressures);
    let noisy = add_noise(&clean, gamma, cfg.seed)?;
    let rows: Vec<Vec<String>> = (0..clean.len())
        .map(|i| {
            vec![
                fmt_f64(clean.times[i]),
                fmt_f64(noisy.pressures[i]),
                fmt_f64(clean.pressures[i]),
            ]
        })
        .collect();
    let mut m = meta(cfg);
    m.push(("gamma", fmt_f64(gamma)));
    m.push(("note", "P_clean is the noise-free signal, for testing only".into()));
    write_csv(&out.join(DATASET_FILE), &m, &["t", "P_noisy", "P_clean"], &rows)?;
    Ok(Dataset {
        trace: noisy,
        clean: Some(clean.pressures),
        gamma: Some(gamma),
        meta: m.into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
    })
}

/// Likelihood noise level: the configured absolute `gamma`, else the level
/// recorded in the dataset, else the relative level times the data peak.
pub fn estimation_gamma(cfg: &RunConfig, data: &Dataset) -> Result<NoiseModel> {
    let gamma = match (cfg.noise.gamma, data.gamma) {
        (Some(g), _) => g,
        (None, Some(g)) => g,
        (None, None) => cfg.noise.relative.unwrap_or(0.0) * data.trace.peak(),
    };
    NoiseModel::new(gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub truth: f64,
    pub estimate: f64,
    pub free: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interval: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mc_standard_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub autocorrelation_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmSummary {
    pub estimator: String,
    pub config_hash: String,
    pub seed: u64,
    pub prior: String,
    pub level: f64,
    pub walkers: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub kept: usize,
    pub parameters: Vec<ParamEstimate>,
    pub acceptance_rate: f64,
    pub acceptance_rates: Vec<f64>,
    pub gamma: f64,
    pub n_samples: usize,
    /// `‖y − G(u_CM)‖`
    pub misfit: f64,
    /// `‖y − G(u_true)‖` when the dataset carries its clean column.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise_norm: Option<f64>,
    pub forward_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub estimator: String,
    pub config_hash: String,
    pub seed: u64,
    pub prior: String,
    pub subset: [bool; 6],
    pub parameters: Vec<ParamEstimate>,
    pub objective: f64,
    pub sigma_reg: f64,
    pub gamma: f64,
    pub n_samples: usize,
    /// `‖y − G(u_MAP)‖`
    pub misfit: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise_norm: Option<f64>,
    pub iterations: usize,
    pub termination: crate::optim::Termination,
    pub vertices: usize,
    pub forward_calls: usize,
}

fn load_matching(dataset: &Path, fwd: &BiotForward) -> Result<Dataset> {
    let data = read_dataset(dataset)?;
    crate::inference::check_sampling(&data.trace, fwd)?;
    Ok(data)
}

fn write_fit(path: &Path, cfg: &RunConfig, data: &Dataset, fit: &[f64]) -> Result<()> {
    let mut header = vec!["t", "P_data", "P_fit"];
    if data.clean.is_some() {
        header.push("P_clean");
    }
    let rows: Vec<Vec<String>> = (0..fit.len())
        .map(|i| {
            let mut r = vec![
                fmt_f64(data.trace.times[i]),
                fmt_f64(data.trace.pressures[i]),
                fmt_f64(fit[i]),
            ];
            if let Some(c) = &data.clean {
                r.push(fmt_f64(c[i]));
            }
            r
        })
        .collect();
    write_csv(path, &meta(cfg), &header, &rows)
}

fn noise_norm(data: &Dataset) -> Option<f64> {
    data.clean.as_ref().map(|c| misfit_norm(&data.trace.pressures, c))
}

/// Ensemble sampling of the posterior; writes the chain, the summary with
/// conditional means and credible intervals, and the fitted trace.
pub fn cmd_estimate_cm(cfg: &RunConfig, dataset: &Path, out: &Path) -> Result<CmSummary> {
    let subset = cfg.mcmc_subset()?;
    let scfg = cfg.sampler_config();
    scfg.validate(subset.dim())?;
    let fwd = cfg.forward_model()?;
    let data = load_matching(dataset, &fwd)?;
    let noise = estimation_gamma(cfg, &data)?;
    let post = Posterior::new(&data.trace, &cfg.prior, noise, &subset, &fwd)?;
    let init = init_walkers(&post, scfg.n_walkers, cfg.seed)?;
    let samples = ensemble_sample(&post, init, &scfg)?;

    let x_cm = conditional_mean(&samples)?;
    let u_cm = subset.embed(&x_cm);
    let fit = fwd.simulate(&u_cm)?;

    let mut parameters = Vec::new();
    for p in Param::ALL {
        let truth = cfg.physics.biot.get(p);
        let entry = match subset.free().iter().position(|&q| q == p) {
            Some(d) => ParamEstimate {
                name: p.label().into(),
                truth,
                estimate: u_cm.get(p),
                free: true,
                interval: Some(credible_interval(&samples, d, LEVEL)?),
                mc_standard_error: Some(mc_standard_error(&samples, d)),
                autocorrelation_time: Some(autocorrelation_time(&samples.walker_series(d), 5.0)),
            },
            None => ParamEstimate {
                name: p.label().into(),
                truth,
                estimate: truth,
                free: false,
                interval: None,
                mc_standard_error: None,
                autocorrelation_time: None,
            },
        };
        parameters.push(entry);
    }

    write_chain(&out.join(CHAIN_FILE), cfg, &subset, &samples)?;
    write_fit(&out.join(CM_FIT_FILE), cfg, &data, &fit)?;
    let rates = samples.acceptance_rates();
    let summary = CmSummary {
        estimator: "conditional-mean".into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        prior: prior_kind(&cfg.prior).into(),
        level: LEVEL,
        walkers: scfg.n_walkers,
        steps: scfg.n_steps,
        burn_in: scfg.burn_in,
        kept: samples.kept(),
        parameters,
        acceptance_rate: mean(&rates),
        acceptance_rates: rates,
        gamma: noise.gamma(),
        n_samples: data.trace.len(),
        misfit: misfit_norm(&data.trace.pressures, &fit),
        noise_norm: noise_norm(&data),
        forward_calls: post.forward_calls(),
    };
    write_json(&out.join(CM_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

fn write_chain(
    path: &Path,
    cfg: &RunConfig,
    subset: &ParamSubset,
    s: &crate::inference::PosteriorSamples,
) -> Result<()> {
    let mut rows = Vec::with_capacity(s.n_walkers * s.n_steps);
    for w in 0..s.n_walkers {
        for k in 0..s.n_steps {
            let u = subset.embed(s.sample(w, k));
            let mut r = vec![w.to_string(), k.to_string()];
            r.extend(u.to_array().iter().map(|v| fmt_f64(*v)));
            r.push(fmt_f64(s.log_post(w, k)));
            r.push(u8::from(s.accepted(w, k)).to_string());
            rows.push(r);
        }
    }
    let mut m = meta(cfg);
    m.push(("burn_in", s.burn_in.to_string()));
    write_csv(
        path,
        &m,
        &["walker", "step", "phi", "alpha", "Ks", "Kb", "N", "rho_s", "log_post", "accepted"],
        &rows,
    )
}

/// Nelder–Mead MAP estimate over `nm.subset`; writes the optimization log,
/// the summary and the fitted trace.
pub fn cmd_estimate_map(cfg: &RunConfig, dataset: &Path, out: &Path) -> Result<MapSummary> {
    let subset = cfg.nm_subset()?;
    let fwd = cfg.forward_model()?;
    let data = load_matching(dataset, &fwd)?;
    let noise = estimation_gamma(cfg, &data)?;
    let sigma_reg = cfg.nm.sigma_reg.unwrap_or_else(|| default_sigma_reg(noise.gamma()));
    let est = estimate_map(&data.trace, &cfg.prior, &subset, sigma_reg, &cfg.nm.nm_config(), &fwd)?;
    let fit = fwd.simulate(&est.u)?;

    let rows: Vec<Vec<String>> = est
        .search
        .log
        .iter()
        .map(|e| {
            vec![
                e.iter.to_string(),
                e.operation.as_str().into(),
                fmt_f64(e.f_best),
                fmt_f64(e.f_worst),
                fmt_f64(e.diameter),
            ]
        })
        .collect();
    let mut m = meta(cfg);
    m.push(("vertices", (subset.dim() + 1).to_string()));
    write_csv(
        &out.join(MAP_LOG_FILE),
        &m,
        &["iter", "operation", "f_best", "f_worst", "diameter"],
        &rows,
    )?;
    write_fit(&out.join(MAP_FIT_FILE), cfg, &data, &fit)?;

    let mask = subset.mask();
    let parameters = Param::ALL
        .iter()
        .zip(mask)
        .map(|(&p, free)| ParamEstimate {
            name: p.label().into(),
            truth: cfg.physics.biot.get(p),
            estimate: est.u.get(p),
            free,
            interval: None,
            mc_standard_error: None,
            autocorrelation_time: None,
        })
        .collect();
    let summary = MapSummary {
        estimator: "map".into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        prior: prior_kind(&cfg.prior).into(),
        subset: mask,
        parameters,
        objective: est.objective,
        sigma_reg,
        gamma: noise.gamma(),
        n_samples: data.trace.len(),
        misfit: misfit_norm(&data.trace.pressures, &fit),
        noise_norm: noise_norm(&data),
        iterations: est.search.iterations,
        termination: est.search.termination,
        vertices: subset.dim() + 1,
        forward_calls: est.forward_calls,
    };
    write_json(&out.join(MAP_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Renders whichever summaries exist in `out` and writes `report.txt`.
pub fn cmd_report(out: &Path) -> Result<String> {
    let read = |name: &str| -> Result<Option<String>> {
        let path = out.join(name);
        match std::fs::read_to_string(&path) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    };
    let parse_err = |name: &str, e: serde_json::Error| Error::Data {
        path: out.join(name),
        message: e.to_string(),
    };
    let mut text = String::new();
    if let Some(s) = read(CM_SUMMARY_FILE)? {
        let cm: CmSummary = serde_json::from_str(&s).map_err(|e| parse_err(CM_SUMMARY_FILE, e))?;
        text.push_str(&crate::report::render_cm(&cm));
    }
    if let Some(s) = read(MAP_SUMMARY_FILE)? {
        let map: MapSummary = serde_json::from_str(&s).map_err(|e| parse_err(MAP_SUMMARY_FILE, e))?;
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&crate::report::render_map(&map));
    }
    if text.is_empty() {
        return Err(Error::Usage(format!(
            "no {CM_SUMMARY_FILE} or {MAP_SUMMARY_FILE} in {}",
            out.display()
        )));
    }
    crate::io::write_atomic(&out.join("report.txt"), text.as_bytes())?;
    Ok(text)
}

/// Output directory: the explicit override, else `output_dir` of the config.
pub fn output_dir(cfg: &RunConfig, over: Option<&Path>) -> PathBuf {
    over.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone())
}
