//! Run configuration for the command line pipeline.
//!
//! One structured file (TOML, or JSON with the same schema) describes the
//! geometry, the physics of the synthetic experiment, the prior, the noise
//! model and both estimators. Every section has defaults, so a file only
//! needs the fields it changes. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{build_domain, resolution_cell_size, uniform_sample_times, GeometryConfig, Rect};
use crate::error::{Error, Result};
use crate::inference::{ParamSubset, Prior, SamplerConfig};
use crate::material::{BiotParams, FluidProps, Param};
use crate::optim::NMConfig;
use crate::solver::{BiotForward, InterfaceCoupling, PointStencil, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub fluid: FluidProps,
    /// Ground truth used by `forward` and `synthesize`; fixed parameters of
    /// the estimators also take their values from here.
    pub biot: BiotParams,
    pub damping: f64,
    pub cfl: f64,
    /// Recording window `T`, s.
    pub duration: f64,
    /// Receiver samples `m` over `(0, T]`.
    pub n_samples: usize,
    pub center_frequency: f64,
    pub amplitude: f64,
    pub stencil: PointStencil,
    pub coupling: InterfaceCoupling,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            fluid: FluidProps::water(),
            biot: BiotParams::reference(),
            damping: 0.0,
            cfl: 0.5,
            duration: 7e-5,
            n_samples: 512,
            center_frequency: 1e6,
            amplitude: 1.0,
            stencil: PointStencil::NearestCell,
            coupling: InterfaceCoupling::TwoWay,
        }
    }
}

/// Exactly one of `gamma` (absolute) or `relative` (fraction of the peak
/// clean signal) is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            gamma: None,
            relative: Some(0.05),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    pub walkers: usize,
    pub steps: usize,
    /// Defaults to a fifth of `steps`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    pub stretch: f64,
    /// Parameters sampled; the rest stay at `physics.biot`.
    pub subset: Vec<Param>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            walkers: 24,
            steps: 1500,
            burn_in: None,
            stretch: 2.0,
            subset: Param::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmSection {
    pub tau_r: f64,
    pub tau_e: f64,
    pub tau_c: f64,
    pub tau_s: f64,
    pub max_iters: usize,
    pub size_tol: f64,
    pub f_tol: f64,
    /// Weight of the log-prior; defaults to `2γ²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_reg: Option<f64>,
    /// Parameters optimized; the rest stay at `physics.biot`.
    pub subset: Vec<Param>,
}

impl Default for NmSection {
    fn default() -> Self {
        let c = NMConfig::default();
        Self {
            tau_r: c.tau_r,
            tau_e: c.tau_e,
            tau_c: c.tau_c,
            tau_s: c.tau_s,
            max_iters: c.max_iters,
            size_tol: c.size_tol,
            f_tol: c.f_tol,
            sigma_reg: None,
            subset: Param::ALL.to_vec(),
        }
    }
}

impl NmSection {
    pub fn nm_config(&self) -> NMConfig {
        NMConfig {
            tau_r: self.tau_r,
            tau_e: self.tau_e,
            tau_c: self.tau_c,
            tau_s: self.tau_s,
            max_iters: self.max_iters,
            size_tol: self.size_tol,
            f_tol: self.f_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Seeds the noise draw and the sampler.
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub physics: PhysicsConfig,
    pub prior: Prior,
    pub noise: NoiseConfig,
    pub mcmc: McmcConfig,
    pub nm: NmSection,
}

impl Default for RunConfig {
    /// Reference specimen in water, 1 MHz pulse, about 20 cells per
    /// wavelength in water, uniform priors.
    fn default() -> Self {
        let fluid = FluidProps::water();
        let h = resolution_cell_size(fluid.speed(), 1e6, 20.0);
        Self {
            output_dir: PathBuf::from("out"),
            seed: 2024,
            geometry: GeometryConfig::through_transmission(1.0, h),
            physics: PhysicsConfig::default(),
            prior: Prior::uniform_table(3.0),
            noise: NoiseConfig::default(),
            mcmc: McmcConfig::default(),
            nm: NmSection::default(),
        }
    }
}

fn bad(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::config(path, message)
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(path, format!("must be positive, got {v}")))
    }
}

fn check_biot(prefix: &str, u: &BiotParams) -> Result<()> {
    for p in Param::ALL {
        let v = u.get(p);
        let path = format!("{prefix}.{}", p.key());
        let ok = v.is_finite()
            && match p {
                Param::Phi => v > 0.0 && v < 1.0,
                Param::Alpha => v >= 1.0,
                _ => v > 0.0,
            };
        if !ok {
            let range = match p {
                Param::Phi => "must lie in (0, 1)",
                Param::Alpha => "must be at least 1",
                _ => "must be positive",
            };
            return Err(bad(path, format!("{range}, got {v}")));
        }
    }
    Ok(())
}

fn check_point(path: &str, p: [f64; 2], g: &GeometryConfig) -> Result<()> {
    if p.iter().all(|v| v.is_finite()) && p[0] > 0.0 && p[0] < g.width && p[1] > 0.0 && p[1] < g.height {
        Ok(())
    } else {
        Err(bad(path, format!("{p:?} lies outside the domain")))
    }
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`, and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
        .map_err(|e| match e {
            Error::Config { path: field, message } => Error::Config {
                path: field,
                message: format!("{message} (in {})", path.display()),
            },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_owned)
                .unwrap_or_else(|| "<file>".into());
            bad(field, e.to_string().trim_end().to_owned())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| bad("<file>", format!("{e} (line {}, column {})", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always representable as JSON")
    }

    /// SHA-256 of the canonical JSON form, so equal configs hash equally
    /// whatever file format they came from.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("serializable");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        positive("geometry.width", g.width)?;
        positive("geometry.height", g.height)?;
        positive("geometry.cell_size", g.cell_size)?;
        if let Some(Rect { x_min, x_max, y_min, y_max }) = g.bone {
            let inside = x_min >= 0.0 && y_min >= 0.0 && x_max <= g.width && y_max <= g.height;
            if !(inside && x_min < x_max && y_min < y_max) {
                return Err(bad("geometry.bone", "rectangle must be non-empty and inside the domain"));
            }
        }
        check_point("geometry.source", g.source, g)?;
        check_point("geometry.receiver", g.receiver, g)?;

        let ph = &self.physics;
        positive("physics.fluid.density", ph.fluid.density)?;
        positive("physics.fluid.bulk_modulus", ph.fluid.bulk_modulus)?;
        check_biot("physics.biot", &ph.biot)?;
        if !(ph.damping.is_finite() && ph.damping >= 0.0) {
            return Err(bad("physics.damping", format!("must be non-negative, got {}", ph.damping)));
        }
        if !(ph.cfl > 0.0 && ph.cfl <= 1.0) {
            return Err(bad("physics.cfl", format!("must lie in (0, 1], got {}", ph.cfl)));
        }
        positive("physics.duration", ph.duration)?;
        positive("physics.center_frequency", ph.center_frequency)?;
        if !ph.amplitude.is_finite() {
            return Err(bad("physics.amplitude", "must be finite"));
        }
        if ph.n_samples == 0 {
            return Err(bad("physics.n_samples", "must be at least 1"));
        }

        self.prior.validate()?;

        match (self.noise.gamma, self.noise.relative) {
            (Some(v), None) if v.is_finite() && v >= 0.0 => {}
            (None, Some(v)) if v.is_finite() && v >= 0.0 => {}
            (Some(_), Some(_)) | (None, None) => {
                return Err(bad("noise", "set exactly one of `gamma` and `relative`"))
            }
            (Some(v), None) => return Err(bad("noise.gamma", format!("must be non-negative, got {v}"))),
            (None, Some(v)) => return Err(bad("noise.relative", format!("must be non-negative, got {v}"))),
        }

        if !self.mcmc.subset.is_empty() {
            self.sampler_config().validate(self.mcmc.subset.len())?;
        }
        if let Some(s) = self.nm.sigma_reg {
            if !(s.is_finite() && s >= 0.0) {
                return Err(bad("nm.sigma_reg", format!("must be non-negative, got {s}")));
            }
        }
        self.nm.nm_config().validate()
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        let mut c = SamplerConfig::new(self.mcmc.walkers, self.mcmc.steps, self.seed);
        if let Some(b) = self.mcmc.burn_in {
            c.burn_in = b;
        }
        c.stretch = self.mcmc.stretch;
        c
    }

    pub fn mcmc_subset(&self) -> Result<ParamSubset> {
        ParamSubset::new(&self.mcmc.subset, self.physics.biot)
    }

    pub fn nm_subset(&self) -> Result<ParamSubset> {
        ParamSubset::new(&self.nm.subset, self.physics.biot)
    }

    pub fn sample_times(&self) -> Vec<f64> {
        uniform_sample_times(self.physics.duration, self.physics.n_samples)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            cfl: self.physics.cfl,
            coupling: self.physics.coupling,
            stencil: self.physics.stencil,
            damping: self.physics.damping,
        }
    }

    pub fn forward_model(&self) -> Result<BiotForward> {
        let domain = build_domain(
            &self.geometry,
            self.physics.center_frequency,
            self.physics.amplitude,
            self.sample_times(),
        )?;
        Ok(BiotForward::new(domain, self.physics.fluid, self.solver_options()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn gaussian_prior_and_absolute_noise_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.prior = Prior::gaussian_table();
        cfg.noise = NoiseConfig { gamma: Some(0.01), relative: None };
        cfg.mcmc.burn_in = Some(7);
        cfg.nm.sigma_reg = Some(0.5);
        cfg.nm.subset = vec![Param::Phi, Param::Ks];
        cfg.geometry.bone = None;
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn partial_file_takes_defaults() {
        let cfg = RunConfig::from_toml("seed = 7\n[physics]\nduration = 5e-5\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.physics.duration, 5e-5);
        assert_eq!(cfg.physics.biot, BiotParams::reference());
    }

    #[test]
    fn bound_violation_names_the_field() {
        let e = RunConfig::from_toml(
            "[physics.biot]\nphi = 1.5\nalpha = 1.4\nks = 2e10\nkb = 3.3e9\nn = 2.6e9\nrho_s = 1960.0\n",
        )
        .unwrap_err();
        assert!(e.to_string().contains("physics.biot.phi"), "{e}");
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = RunConfig::from_toml("[physics]\ndurration = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("durration"), "{e}");
    }

    #[test]
    fn noise_needs_exactly_one_level() {
        let e = RunConfig::from_toml("[noise]\ngamma = 0.1\nrelative = 0.05\n").unwrap_err();
        assert!(e.to_string().contains("`noise`"), "{e}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn empty_subset_is_a_usage_error() {
        let mut cfg = RunConfig::default();
        cfg.nm.subset.clear();
        cfg.validate().unwrap();
        let e = cfg.nm_subset().unwrap_err();
        assert_eq!(e.to_string(), "empty parameter subset");
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn too_few_walkers_for_the_subset() {
        let e = RunConfig::from_toml("[mcmc]\nwalkers = 10\n").unwrap_err();
        assert!(e.to_string().contains("mcmc.walkers"), "{e}");
    }
}
