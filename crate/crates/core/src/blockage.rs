//! Height-aware blocking probability.
//!
//! A single blocker sits at a uniform position along the AP–UE segment with
//! a uniform height on `[0, H_max]`. It blocks the link when it rises above
//! the sightline at its position. The resulting probability is not the link
//! blockage probability itself: it scales the blockage rate, `β' = β·P_blk`,
//! which then enters the exponential LOS model.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{validate_profile, BlockageParams, HeightProfile};

/// Per-blocker blocking probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockProbability {
    pub value: f64,
    /// Set when the raw value fell outside `[0, 1]` and was clamped.
    pub saturated: bool,
}

impl BlockProbability {
    pub fn clamped(raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        Self {
            value,
            saturated: value != raw,
        }
    }

    pub fn zero() -> Self {
        Self {
            value: 0.0,
            saturated: false,
        }
    }
}

/// Fraction of a link blocked by one blocker spread over the link itself.
///
/// Three regimes:
/// * `H_max <= H_U`: blockers never reach the sightline, 0.
/// * `H_B >= H_max`: only blockers near the UE can block,
///   `(H_max - H_U)² / (2 H_max (H_B - H_U))`.
/// * `H_U < H_B < H_max`: the whole segment is exposed and the survivor
///   function averages to `1 - (H_B + H_U) / (2 H_max)`.
pub fn pblk_irregular(p: &HeightProfile) -> Result<BlockProbability> {
    let p = validate_profile(*p)?;
    Ok(BlockProbability::clamped(height_factor(&p)))
}

fn height_factor(p: &HeightProfile) -> f64 {
    let (hb, hu, hm) = (p.h_ap, p.h_ue, p.h_blk_max);
    if hm <= hu {
        0.0
    } else if hb >= hm {
        (hm - hu).powi(2) / (2.0 * hm * (hb - hu))
    } else {
        1.0 - (hb + hu) / (2.0 * hm)
    }
}

/// Blocking probability when blockers are spread over the cell extent
/// `r_cell` rather than over the link of length `r`. Linear in `r`.
pub fn pblk_regular(p: &HeightProfile, r: f64, r_cell: f64) -> Result<BlockProbability> {
    let p = validate_profile(*p)?;
    if !(r_cell.is_finite() && r_cell > 0.0) {
        return Err(domain(format!("cell extent must be positive, got {r_cell}")));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(domain(format!("link length must be non-negative, got {r}")));
    }
    Ok(BlockProbability::clamped(r / r_cell * height_factor(&p)))
}

/// Height-adjusted blockage rate `β·P_blk`.
pub fn effective_beta(b: &BlockageParams, pb: BlockProbability) -> f64 {
    b.beta * pb.value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(hb: f64, hm: f64) -> HeightProfile {
        HeightProfile::new(hb, 1.5, hm).unwrap()
    }

    #[test]
    fn reference_points() {
        assert_eq!(pblk_irregular(&prof(3.0, 3.0)).unwrap().value, 0.25);
        assert!((pblk_irregular(&prof(10.0, 3.0)).unwrap().value - 0.0441).abs() < 1e-4);
        assert!((pblk_irregular(&prof(40.0, 10.0)).unwrap().value - 0.0938).abs() < 1e-4);
        assert_eq!(pblk_irregular(&prof(10.0, 10.0)).unwrap().value, 0.425);
        assert!((pblk_irregular(&prof(3.0, 15.0)).unwrap().value - 0.85).abs() < 1e-15);
        assert_eq!(pblk_irregular(&prof(30.0, 1.5)).unwrap().value, 0.0);
        assert_eq!(pblk_irregular(&prof(30.0, 1.0)).unwrap().value, 0.0);
    }

    #[test]
    fn invalid_profile_rejected() {
        let bad = HeightProfile {
            h_ap: 1.5,
            h_ue: 1.5,
            h_blk_max: 3.0,
        };
        assert!(pblk_irregular(&bad).is_err());
        assert!(pblk_regular(&bad, 1.0, 2.0).is_err());
    }

    #[test]
    fn regular_scaling() {
        let p = prof(3.0, 3.0);
        assert_eq!(pblk_regular(&p, 100.0, 100.0).unwrap().value, 0.25);
        assert_eq!(pblk_regular(&p, 0.0, 100.0).unwrap().value, 0.0);
        assert_eq!(pblk_regular(&p, 50.0, 100.0).unwrap().value, 0.125);
        assert!(pblk_regular(&p, 10.0, 0.0).is_err());
        assert!(pblk_regular(&p, -1.0, 10.0).is_err());
    }

    #[test]
    fn saturation_is_flagged() {
        let p = prof(3.0, 15.0);
        let pb = pblk_regular(&p, 300.0, 100.0).unwrap();
        assert_eq!(pb.value, 1.0);
        assert!(pb.saturated);
        assert!(!pblk_regular(&p, 50.0, 100.0).unwrap().saturated);
    }

    #[test]
    fn effective_rate() {
        let b = BlockageParams::default();
        assert_eq!(effective_beta(&b, BlockProbability::clamped(1.0)), 0.0709);
        assert!((effective_beta(&b, BlockProbability::clamped(0.25)) - 0.017725).abs() < 1e-15);
        assert_eq!(effective_beta(&b, BlockProbability::zero()), 0.0);
    }
}
