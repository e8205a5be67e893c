//! Monte Carlo estimators that check the closed forms from first principles.
//!
//! Samples are split into fixed-size chunks. Chunk `k` draws from a ChaCha8
//! generator seeded with `seed` on stream `(stream_id << 32) | k`, so an
//! estimate depends only on its [`RngSpec`] and sample count, never on how
//! many threads ran it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::irregular::AssociationInputs;
use crate::model::{validate_profile, BlockageParams, HeightProfile, McEstimate};
use crate::regular::{link_los_probs, HexLayout, UserPoint};

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream_id: u32,
}

impl RngSpec {
    pub fn new(seed: u64, stream_id: u32) -> Self {
        Self { seed, stream_id }
    }

    fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((self.stream_id as u64) << 32) | chunk);
        rng
    }
}

/// Runs `trial` `n` times across deterministic chunks and counts successes.
fn count_hits<F>(n: u64, rng: RngSpec, trial: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut r = rng.chunk_rng(k);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len).filter(|_| trial(&mut r)).count() as u64
        })
        .sum()
}

fn check_count(n: u64) -> Result<()> {
    if n == 0 {
        return Err(domain("sample count must be at least 1"));
    }
    Ok(())
}

/// Samples one blocker with position uniform on `[0, r_extent]` (measured
/// from the UE) and height uniform on `[0, H_max]`, and counts it as blocking
/// when it lies on the link (`y <= r`) and rises above the sightline there.
pub fn mc_pblk(
    profile: &HeightProfile,
    r: f64,
    r_extent: f64,
    n: u64,
    rng: RngSpec,
) -> Result<McEstimate> {
    let p = validate_profile(*profile)?;
    check_count(n)?;
    if !(r > 0.0 && r_extent > 0.0 && r.is_finite() && r_extent.is_finite()) {
        return Err(domain(format!(
            "link length and blocker extent must be positive, got {r} and {r_extent}"
        )));
    }
    let hits = count_hits(n, rng, |g| {
        let y = g.random::<f64>() * r_extent;
        let h = g.random::<f64>() * p.h_blk_max;
        if y > r {
            return false;
        }
        let sightline = (y * p.h_ap + (r - y) * p.h_ue) / r;
        h > sightline
    });
    Ok(McEstimate::from_count(hits, n, rng.seed))
}

/// Observation window that makes edge effects negligible for
/// [`mc_association`]: ten blockage lengths and ten cell scales.
pub fn default_window(inputs: &AssociationInputs) -> f64 {
    let scale = 10.0 * inputs.deployment.radius_scale();
    if inputs.beta_eff > 0.0 {
        scale.max(10.0 / inputs.beta_eff)
    } else {
        scale
    }
}

/// Simulates the PPP directly. Each trial scatters APs over a disk around the
/// UE, marks each LOS with probability `exp(-β' r)`, and scores 1 when the
/// AP with the strongest gain `C r^{-α}` is LOS. Empty trials score 0.
pub fn mc_association(
    inputs: &AssociationInputs,
    window_radius: f64,
    n_trials: u64,
    rng: RngSpec,
) -> Result<McEstimate> {
    check_count(n_trials)?;
    if !(window_radius.is_finite() && window_radius > 0.0) {
        return Err(domain(format!("window radius must be positive, got {window_radius}")));
    }
    if !(inputs.beta_eff >= 0.0) {
        return Err(domain("effective beta must be non-negative"));
    }
    let mean_count = inputs.deployment.lambda * PI * window_radius * window_radius;
    let poisson = Poisson::new(mean_count)
        .map_err(|e| domain(format!("invalid mean AP count {mean_count}: {e}")))?;
    let pl = inputs.pathloss;
    let (ln_c_los, ln_c_nlos) = (pl.c_los.ln(), pl.c_nlos.ln());
    let beta = inputs.beta_eff;

    let hits = count_hits(n_trials, rng, |g| {
        let count = poisson.sample(g) as u64;
        let mut best_loss = f64::INFINITY;
        let mut best_is_los = false;
        for _ in 0..count {
            let r = window_radius * g.random::<f64>().sqrt();
            let los = g.random::<f64>() < (-beta * r).exp();
            // log path loss: α ln r - ln C
            let loss = if los {
                pl.alpha_los * r.ln() - ln_c_los
            } else {
                pl.alpha_nlos * r.ln() - ln_c_nlos
            };
            if loss < best_loss {
                best_loss = loss;
                best_is_los = los;
            }
        }
        best_is_los
    });
    Ok(McEstimate::from_count(hits, n_trials, rng.seed))
}

/// Draws the three link states as independent Bernoulli variables with the
/// closed-form per-link LOS probabilities and scores 1 when any is LOS.
pub fn mc_regular_p_los(
    layout: &HexLayout,
    u: UserPoint,
    profile: &HeightProfile,
    b: &BlockageParams,
    n: u64,
    rng: RngSpec,
) -> Result<McEstimate> {
    check_count(n)?;
    let p = link_los_probs(layout, u, profile, b)?;
    let hits = count_hits(n, rng, |g| p.iter().any(|&pi| g.random::<f64>() < pi));
    Ok(McEstimate::from_count(hits, n, rng.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{IrregularDeployment, PathLossParams};

    fn prof(hb: f64, hm: f64) -> HeightProfile {
        HeightProfile::new(hb, 1.5, hm).unwrap()
    }

    #[test]
    fn pblk_reference_run() {
        let e = mc_pblk(&prof(3.0, 3.0), 100.0, 100.0, 1_000_000, RngSpec::new(11, 0)).unwrap();
        assert!(e.agrees_with(0.25, 4.0, 0.0), "{e:?}");
        let e = mc_pblk(&prof(3.0, 15.0), 100.0, 100.0, 1_000_000, RngSpec::new(12, 0)).unwrap();
        assert!(e.agrees_with(0.85, 4.0, 0.0), "{e:?}");
    }

    #[test]
    fn pblk_low_blockers_never_block() {
        let e = mc_pblk(&prof(3.0, 1.5), 100.0, 100.0, 10_000, RngSpec::new(1, 0)).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn pblk_half_extent() {
        let e = mc_pblk(&prof(3.0, 3.0), 50.0, 100.0, 1_000_000, RngSpec::new(2, 0)).unwrap();
        assert!(e.agrees_with(0.125, 4.0, 0.0), "{e:?}");
    }

    #[test]
    fn deterministic_and_chunk_independent() {
        let a = mc_pblk(&prof(10.0, 10.0), 80.0, 80.0, 50_000, RngSpec::new(5, 3)).unwrap();
        let b = mc_pblk(&prof(10.0, 10.0), 80.0, 80.0, 50_000, RngSpec::new(5, 3)).unwrap();
        assert_eq!(a, b);
        let c = mc_pblk(&prof(10.0, 10.0), 80.0, 80.0, 50_000, RngSpec::new(5, 4)).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn invalid_inputs() {
        assert!(mc_pblk(&prof(3.0, 3.0), 1.0, 1.0, 0, RngSpec::new(0, 0)).is_err());
        assert!(mc_pblk(&prof(3.0, 3.0), 0.0, 1.0, 10, RngSpec::new(0, 0)).is_err());
    }

    #[test]
    fn association_without_blockage() {
        let i = AssociationInputs::new(
            IrregularDeployment::from_radius(100.0).unwrap(),
            0.0,
            PathLossParams::default(),
        )
        .unwrap();
        let e = mc_association(&i, 1000.0, 2000, RngSpec::new(3, 0)).unwrap();
        assert_eq!(e.mean, 1.0);
    }

    #[test]
    fn regular_at_ap_and_without_blockage() {
        let l = HexLayout::from_cell_radius(100.0).unwrap();
        let b = BlockageParams::default();
        let e = mc_regular_p_los(&l, UserPoint::new(0.0, 0.0), &prof(3.0, 3.0), &b, 1000, RngSpec::new(4, 0))
            .unwrap();
        assert_eq!(e.mean, 1.0);
        let e = mc_regular_p_los(&l, l.centroid(), &prof(3.0, 1.0), &b, 1000, RngSpec::new(4, 0)).unwrap();
        assert_eq!(e.mean, 1.0);
    }
}
