//! Shared parameter types.
//!
//! All lengths are meters and all probabilities are plain `f64` values in
//! `[0, 1]`. Constructors validate their invariants so downstream code can
//! assume well-formed inputs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Blockage rate used throughout the reference evaluation (per meter).
pub const DEFAULT_BETA: f64 = 0.0709;
/// Default UE height in meters.
pub const DEFAULT_UE_HEIGHT: f64 = 1.5;
/// Carrier frequency of the reference scenario. Recorded as metadata only.
pub const CARRIER_FREQUENCY_GHZ: f64 = 28.0;

/// AP, UE and maximum blocker heights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightProfile {
    pub h_ap: f64,
    pub h_ue: f64,
    pub h_blk_max: f64,
}

impl HeightProfile {
    pub fn new(h_ap: f64, h_ue: f64, h_blk_max: f64) -> Result<Self> {
        validate_profile(HeightProfile {
            h_ap,
            h_ue,
            h_blk_max,
        })
    }

    /// Same profile with a different AP height.
    pub fn with_ap(self, h_ap: f64) -> Result<Self> {
        Self::new(h_ap, self.h_ue, self.h_blk_max)
    }

    /// Same profile with a different maximum blocker height.
    pub fn with_blk_max(self, h_blk_max: f64) -> Result<Self> {
        Self::new(self.h_ap, self.h_ue, h_blk_max)
    }
}

/// Checks the height invariants and hands the profile back unchanged.
pub fn validate_profile(p: HeightProfile) -> Result<HeightProfile> {
    let finite = p.h_ap.is_finite() && p.h_ue.is_finite() && p.h_blk_max.is_finite();
    if !finite {
        return Err(domain(format!("non-finite height in {p:?}")));
    }
    if p.h_ue < 0.0 || p.h_blk_max < 0.0 || p.h_ap < 0.0 {
        return Err(domain(format!("negative height in {p:?}")));
    }
    if p.h_ap <= p.h_ue {
        return Err(domain(format!(
            "AP height {} must exceed UE height {}",
            p.h_ap, p.h_ue
        )));
    }
    Ok(p)
}

/// Exponential blockage rate β of the LOS probability `exp(-β x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockageParams {
    pub beta: f64,
}

impl BlockageParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(domain(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { beta })
    }
}

impl Default for BlockageParams {
    fn default() -> Self {
        Self { beta: DEFAULT_BETA }
    }
}

/// Path-loss exponents and intercepts for the LOS and NLOS branches.
///
/// The default is `alpha_los = 4`, `alpha_nlos = 2`, equal intercepts. This
/// is the reference parameter table as printed; the usual mm-wave convention
/// has the exponents the other way round, available via [`Self::swapped`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub c_los: f64,
    pub c_nlos: f64,
}

impl PathLossParams {
    pub fn new(alpha_los: f64, alpha_nlos: f64, c_los: f64, c_nlos: f64) -> Result<Self> {
        for (name, v) in [
            ("alpha_los", alpha_los),
            ("alpha_nlos", alpha_nlos),
            ("c_los", c_los),
            ("c_nlos", c_nlos),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            alpha_los,
            alpha_nlos,
            c_los,
            c_nlos,
        })
    }

    /// Exchanges the LOS and NLOS exponents, keeping the intercepts.
    pub fn swapped(self) -> Self {
        Self {
            alpha_los: self.alpha_nlos,
            alpha_nlos: self.alpha_los,
            ..self
        }
    }
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            alpha_los: 4.0,
            alpha_nlos: 2.0,
            c_los: 1.0,
            c_nlos: 1.0,
        }
    }
}

/// How an "average cell radius" maps onto a PPP density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaConvention {
    /// Each AP owns a disk of radius `r`: `λ = 1 / (π r²)`.
    #[default]
    Disk,
    /// Each AP owns a hexagon of circumradius `r`: `λ = 2 / (3√3 r²)`.
    Hexagon,
}

impl LambdaConvention {
    /// Area served by one AP with the given radius.
    pub fn cell_area(self, r: f64) -> f64 {
        match self {
            LambdaConvention::Disk => PI * r * r,
            LambdaConvention::Hexagon => 1.5 * 3f64.sqrt() * r * r,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LambdaConvention::Disk => "disk",
            LambdaConvention::Hexagon => "hexagon",
        }
    }
}

impl std::str::FromStr for LambdaConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "disk" => Ok(Self::Disk),
            "hexagon" | "hex" => Ok(Self::Hexagon),
            other => Err(format!("unknown lambda convention '{other}'")),
        }
    }
}

/// PPP density for an average cell radius under the disk convention.
pub fn lambda_from_radius(r: f64) -> Result<f64> {
    lambda_from_radius_with(r, LambdaConvention::Disk)
}

pub fn lambda_from_radius_with(r: f64, convention: LambdaConvention) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(domain(format!("cell radius must be positive, got {r}")));
    }
    Ok(1.0 / convention.cell_area(r))
}

/// Homogeneous PPP deployment of APs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrregularDeployment {
    /// APs per square meter.
    pub lambda: f64,
}

impl IrregularDeployment {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(domain(format!("density must be positive, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    pub fn from_radius(r: f64) -> Result<Self> {
        Self::new(lambda_from_radius(r)?)
    }

    pub fn from_radius_with(r: f64, convention: LambdaConvention) -> Result<Self> {
        Self::new(lambda_from_radius_with(r, convention)?)
    }

    /// Mean nearest-neighbour scale `1/√(πλ)`.
    pub fn radius_scale(&self) -> f64 {
        (1.0 / (PI * self.lambda)).sqrt()
    }
}

/// A Monte Carlo estimate of a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Builds an estimate from a success count.
    pub fn from_count(hits: u64, n_samples: u64, seed: u64) -> Self {
        assert!(n_samples > 0, "estimate needs at least one sample");
        let n = n_samples as f64;
        let mean = hits as f64 / n;
        let std_err = (mean * (1.0 - mean) / n).sqrt();
        Self {
            mean,
            std_err,
            n_samples,
            seed,
        }
    }

    /// Whether `value` lies within `k` standard errors of the estimate, with an
    /// absolute floor.
    pub fn agrees_with(&self, value: f64, k: f64, floor: f64) -> bool {
        (self.mean - value).abs() <= (k * self.std_err).max(floor)
    }

    /// Standard error with a Laplace-smoothed floor, so that an estimate of
    /// exactly 0 or 1 from few samples still carries a non-zero width.
    pub fn smoothed_std_err(&self) -> f64 {
        let n = self.n_samples as f64;
        let p = (self.mean * n + 1.0) / (n + 2.0);
        self.std_err.max((p * (1.0 - p) / n).sqrt())
    }
}
