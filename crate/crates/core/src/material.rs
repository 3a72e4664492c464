//! Biot parameters and the closed-form constitutive algebra built on them.
//!
//! The six unknowns of the inversion live in [`BiotParams`]; the saturating
//! fluid is fixed and described by [`FluidProps`]. [`elastic_constants`]
//! turns both into the generalized moduli and mass-coupling coefficients
//! the time stepper consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Acoustic fluid filling the pores and surrounding the specimen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidProps {
    /// kg/m³
    pub density: f64,
    /// Pa
    pub bulk_modulus: f64,
}

impl FluidProps {
    pub fn new(density: f64, bulk_modulus: f64) -> Result<Self> {
        let fl = Self {
            density,
            bulk_modulus,
        };
        fl.validate()?;
        Ok(fl)
    }

    /// Water as used in the reference synthetic experiment.
    pub fn water() -> Self {
        Self {
            density: 1000.0,
            bulk_modulus: 2.2e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(Error::Admissibility(format!(
                "fluid density must be positive, got {}",
                self.density
            )));
        }
        if !(self.bulk_modulus.is_finite() && self.bulk_modulus > 0.0) {
            return Err(Error::Admissibility(format!(
                "fluid bulk modulus must be positive, got {}",
                self.bulk_modulus
            )));
        }
        Ok(())
    }

    /// Acoustic speed `sqrt(K_f / rho_f)` in m/s.
    pub fn speed(&self) -> f64 {
        (self.bulk_modulus / self.density).sqrt()
    }
}

/// One of the six inferable Biot parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    #[serde(alias = "porosity")]
    Phi,
    #[serde(alias = "tortuosity")]
    Alpha,
    Ks,
    Kb,
    N,
    RhoS,
}

impl Param {
    pub const ALL: [Param; 6] = [
        Param::Phi,
        Param::Alpha,
        Param::Ks,
        Param::Kb,
        Param::N,
        Param::RhoS,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column label used in chain and summary output.
    pub fn label(self) -> &'static str {
        match self {
            Param::Phi => "phi",
            Param::Alpha => "alpha",
            Param::Ks => "Ks",
            Param::Kb => "Kb",
            Param::N => "N",
            Param::RhoS => "rho_s",
        }
    }

    /// Key used in configuration files.
    pub fn key(self) -> &'static str {
        match self {
            Param::Phi => "phi",
            Param::Alpha => "alpha",
            Param::Ks => "ks",
            Param::Kb => "kb",
            Param::N => "n",
            Param::RhoS => "rho_s",
        }
    }
}

impl std::fmt::Display for Param {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// The six-dimensional unknown of the inverse problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiotParams {
    /// Pore volume fraction, in (0, 1).
    pub phi: f64,
    /// Tortuosity, at least 1.
    pub alpha: f64,
    /// Bulk modulus of the solid constituent, Pa.
    pub ks: f64,
    /// Bulk modulus of the drained skeletal frame, Pa.
    pub kb: f64,
    /// Shear modulus of the frame, Pa.
    pub n: f64,
    /// Density of the solid constituent, kg/m³.
    pub rho_s: f64,
}

impl BiotParams {
    /// Water-saturated cancellous bone used as ground truth in the synthetic experiments.
    pub fn reference() -> Self {
        Self {
            phi: 0.5,
            alpha: 1.4,
            ks: 20e9,
            kb: 3.3e9,
            n: 2.6e9,
            rho_s: 1960.0,
        }
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Phi => self.phi,
            Param::Alpha => self.alpha,
            Param::Ks => self.ks,
            Param::Kb => self.kb,
            Param::N => self.n,
            Param::RhoS => self.rho_s,
        }
    }

    pub fn set(&mut self, p: Param, value: f64) {
        match p {
            Param::Phi => self.phi = value,
            Param::Alpha => self.alpha = value,
            Param::Ks => self.ks = value,
            Param::Kb => self.kb = value,
            Param::N => self.n = value,
            Param::RhoS => self.rho_s = value,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        Param::ALL.map(|p| self.get(p))
    }

    pub fn from_array(values: [f64; 6]) -> Self {
        Self {
            phi: values[0],
            alpha: values[1],
            ks: values[2],
            kb: values[3],
            n: values[4],
            rho_s: values[5],
        }
    }

    /// Whether every parameter lies inside its hard physical bounds.
    pub fn within_physical_bounds(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
            && self.phi > 0.0
            && self.phi < 1.0
            && self.alpha >= 1.0
            && self.ks > 0.0
            && self.kb > 0.0
            && self.n > 0.0
            && self.rho_s > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.within_physical_bounds() {
            Ok(())
        } else {
            Err(Error::Admissibility(format!(
                "parameters outside physical bounds: {self:?}"
            )))
        }
    }
}

/// Generalized elastic constants and mass-coupling coefficients of a Biot medium.
///
/// `p`, `q`, `r` are Biot's generalized moduli: `p` is the solid P-wave-like
/// modulus, `r` the fluid one, `q` their coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticConstants {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub delta: f64,
    pub rho11: f64,
    pub rho12: f64,
    pub rho22: f64,
    /// Viscous coupling coefficient, kg/(m³·s).
    pub damping: f64,
    /// Frame shear modulus, carried along for the stress law.
    pub shear: f64,
}

impl ElasticConstants {
    /// Determinant of the 2×2 density matrix.
    pub fn density_det(&self) -> f64 {
        self.rho11 * self.rho22 - self.rho12 * self.rho12
    }

    pub fn density_positive_definite(&self) -> bool {
        self.rho11 > 0.0 && self.density_det() > 0.0
    }

    pub fn stiffness_positive_definite(&self) -> bool {
        self.p > 0.0 && self.p * self.r - self.q * self.q > 0.0
    }

    /// Lamé first parameter of the frame, `P - 2N`.
    pub fn lame_lambda(&self) -> f64 {
        self.p - 2.0 * self.shear
    }
}

/// Computes P, Q, R, Δ and the mass coefficients for `bp` saturated by `fl`.
///
/// Fails with [`Error::Admissibility`] when Δ ≤ 0 or the density matrix is
/// not positive definite; samplers treat that as zero prior mass.
pub fn elastic_constants(bp: &BiotParams, fl: &FluidProps, damping: f64) -> Result<ElasticConstants> {
    bp.validate()?;
    fl.validate()?;
    if !(damping.is_finite() && damping >= 0.0) {
        return Err(Error::Admissibility(format!(
            "damping coefficient must be non-negative, got {damping}"
        )));
    }
    let BiotParams {
        phi,
        alpha,
        ks,
        kb,
        n,
        rho_s,
    } = *bp;
    let kf = fl.bulk_modulus;
    let rho_f = fl.density;

    let frame = 1.0 - phi - kb / ks;
    let delta = frame + phi * ks / kf;
    if !(delta > 0.0) {
        return Err(Error::Admissibility(format!("Δ = {delta} is not positive")));
    }
    let p = ((1.0 - phi) * frame * ks + phi * (ks / kf) * kb) / delta + 4.0 * n / 3.0;
    let q = frame * phi * ks / delta;
    let r = phi * phi * ks / delta;

    let rho12 = -(alpha - 1.0) * phi * rho_f;
    let rho11 = (1.0 - phi) * rho_s - rho12;
    let rho22 = phi * rho_f - rho12;

    let ec = ElasticConstants {
        p,
        q,
        r,
        delta,
        rho11,
        rho12,
        rho22,
        damping,
        shear: n,
    };
    if !ec.density_positive_definite() {
        return Err(Error::Admissibility(
            "density matrix is not positive definite".into(),
        ));
    }
    Ok(ec)
}

/// Fast compressional speed of the lossless Biot system.
///
/// Largest `V` with `det(K - V² M) = 0`, `K = [[P,Q],[Q,R]]`,
/// `M = [[ρ11,ρ12],[ρ12,ρ22]]`. Only used to bound the explicit time step.
pub fn max_wave_speed(ec: &ElasticConstants) -> Result<f64> {
    let (fast, _) = compressional_speeds(ec)?;
    Ok(fast)
}

/// Fast and slow compressional speeds, in that order.
pub fn compressional_speeds(ec: &ElasticConstants) -> Result<(f64, f64)> {
    if !ec.density_positive_definite() {
        return Err(Error::Admissibility(
            "density matrix is not positive definite".into(),
        ));
    }
    if !ec.stiffness_positive_definite() {
        return Err(Error::Admissibility(
            "stiffness matrix is not positive definite".into(),
        ));
    }
    // a s² + b s + c = 0 in s = V²; both roots are positive for PD K and M.
    let a = ec.density_det();
    let b = -(ec.p * ec.rho22 + ec.r * ec.rho11 - 2.0 * ec.q * ec.rho12);
    let c = ec.p * ec.r - ec.q * ec.q;
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let s_fast = (-b + disc.sqrt()) / (2.0 * a);
    let s_slow = c / (a * s_fast);
    Ok((s_fast.sqrt(), s_slow.sqrt()))
}

/// Shear speed `sqrt(N / (ρ11 - ρ12²/ρ22))` of the frame.
pub fn shear_wave_speed(ec: &ElasticConstants) -> f64 {
    (ec.shear / (ec.rho11 - ec.rho12 * ec.rho12 / ec.rho22)).sqrt()
}
