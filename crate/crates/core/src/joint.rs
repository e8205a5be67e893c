//! Joint low-rise / high-rise deployments.
//!
//! The two tiers are combined as independent chances of finding a LOS AP:
//! `P = 1 - (1 - P_low)(1 - P_high)`. Densifying the high-rise tier is
//! expressed as "n high-rise APs per 100 low-rise APs", which at equal cell
//! shapes scales the high-rise cell radius by `√(100 / n)`.

use serde::{Deserialize, Serialize};

use crate::blockage::{effective_beta, pblk_irregular};
use crate::error::{domain, Error, Result};
use crate::irregular::{p_los_association, AssociationInputs};
use crate::model::{BlockageParams, HeightProfile, IrregularDeployment, PathLossParams};
use crate::regular::{default_grid_step, worst_case_p_los, HexLayout};

/// Where and how one tier of APs is deployed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TierDeployment {
    /// PPP deployment, scored by the LOS association probability.
    Irregular {
        deployment: IrregularDeployment,
        pathloss: PathLossParams,
    },
    /// Hexagonal deployment, scored by the worst-case at-least-one-LOS
    /// probability. `grid_step` defaults to `D / 200`.
    RegularWorstCase {
        layout: HexLayout,
        grid_step: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierSpec {
    pub profile: HeightProfile,
    pub deployment: TierDeployment,
}

impl TierSpec {
    /// LOS probability this tier provides on its own.
    pub fn p_los(&self, b: &BlockageParams) -> Result<f64> {
        match self.deployment {
            TierDeployment::Irregular {
                deployment,
                pathloss,
            } => {
                let beta_eff = effective_beta(b, pblk_irregular(&self.profile)?);
                p_los_association(&AssociationInputs::new(deployment, beta_eff, pathloss)?)
            }
            TierDeployment::RegularWorstCase { layout, grid_step } => {
                let step = grid_step.unwrap_or_else(|| default_grid_step(&layout));
                Ok(worst_case_p_los(&layout, &self.profile, b, step)?.0)
            }
        }
    }

    /// The same deployment shape at `n` APs per 100 of this tier, with
    /// another height profile.
    pub fn densified(&self, profile: HeightProfile, n_per_100: u32) -> Result<TierSpec> {
        let deployment = match self.deployment {
            TierDeployment::Irregular {
                deployment,
                pathloss,
            } => {
                if n_per_100 < 1 {
                    return Err(domain("high-rise count must be at least 1"));
                }
                TierDeployment::Irregular {
                    deployment: IrregularDeployment::new(
                        deployment.lambda * n_per_100 as f64 / 100.0,
                    )?,
                    pathloss,
                }
            }
            TierDeployment::RegularWorstCase { layout, grid_step } => {
                let r = high_rise_radius(layout.r_cell, n_per_100)?;
                let scaled = HexLayout::from_cell_radius(r)?;
                TierDeployment::RegularWorstCase {
                    layout: scaled,
                    grid_step: grid_step.map(|s| s * scaled.d_inter / layout.d_inter),
                }
            }
        };
        Ok(TierSpec {
            profile,
            deployment,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointResult {
    pub p_low: f64,
    pub p_high: f64,
    pub p_joint: f64,
    pub high_rise_count_per_100: Option<u32>,
}

impl JointResult {
    pub fn combine(p_low: f64, p_high: f64) -> Result<Self> {
        Ok(Self {
            p_low,
            p_high,
            p_joint: joint_p_los(p_low, p_high)?,
            high_rise_count_per_100: None,
        })
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// `1 - (1 - p_low)(1 - p_high)`.
pub fn joint_p_los(p_low: f64, p_high: f64) -> Result<f64> {
    check_prob("p_low", p_low)?;
    check_prob("p_high", p_high)?;
    Ok(1.0 - (1.0 - p_low) * (1.0 - p_high))
}

/// High-rise cell radius giving `n` high-rise APs per 100 low-rise APs.
pub fn high_rise_radius(low_radius: f64, n_high_per_100_low: u32) -> Result<f64> {
    if n_high_per_100_low < 1 {
        return Err(domain("high-rise count must be at least 1"));
    }
    if !(low_radius.is_finite() && low_radius > 0.0) {
        return Err(domain(format!("low-rise radius must be positive, got {low_radius}")));
    }
    Ok(low_radius * (100.0 / n_high_per_100_low as f64).sqrt())
}

/// Smallest number of high-rise APs per 100 low-rise APs (1..=100) that
/// lifts the joint LOS probability to `target`. The high-rise tier is scored
/// in the same mode as the low-rise tier, at its own worst point.
pub fn min_high_rise_count(
    target: f64,
    low_tier: &TierSpec,
    high_profile: &HeightProfile,
    b: &BlockageParams,
) -> Result<JointResult> {
    if !(target > 0.0 && target < 1.0) {
        return Err(domain(format!("target must lie in (0, 1), got {target}")));
    }
    let p_low = low_tier.p_los(b)?;
    let mut best: Option<JointResult> = None;
    for n in 1..=100 {
        let p_high = low_tier.densified(*high_profile, n)?.p_los(b)?;
        let mut r = JointResult::combine(p_low, p_high)?;
        r.high_rise_count_per_100 = Some(n);
        if r.p_joint >= target {
            return Ok(r);
        }
        if best.is_none_or(|bst| r.p_joint > bst.p_joint) {
            best = Some(r);
        }
    }
    Err(Error::Infeasible {
        target,
        best: best.expect("scan visits n = 1"),
    })
}
