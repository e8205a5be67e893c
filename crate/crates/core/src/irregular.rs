//! LOS association probability for APs deployed as a homogeneous PPP.
//!
//! A link of length `x` is LOS with probability `exp(-β' x)`. The typical UE
//! attaches to the AP with the smallest path loss, so it is served over LOS
//! when its nearest LOS AP at distance `x` has no NLOS competitor inside the
//! exclusion radius `ψ(x)`. Averaging over the nearest-LOS distance gives
//!
//! ```text
//! P_LOS = 2πλ ∫ x exp(-2πλ (Y(ψ(x)) + U(x)) - β' x) dx
//! ```
//!
//! with `U(x) = ∫₀ˣ r p(r) dr` and `Y(x) = x²/2 - U(x)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{IrregularDeployment, PathLossParams};
use crate::quadrature::{integrate_decaying, QuadOptions};

/// Everything the association integral depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationInputs {
    pub deployment: IrregularDeployment,
    /// Height-adjusted blockage rate `β·P_blk`.
    pub beta_eff: f64,
    pub pathloss: PathLossParams,
}

impl AssociationInputs {
    pub fn new(
        deployment: IrregularDeployment,
        beta_eff: f64,
        pathloss: PathLossParams,
    ) -> Result<Self> {
        check_beta(beta_eff)?;
        Ok(Self {
            deployment,
            beta_eff,
            pathloss,
        })
    }
}

fn check_beta(beta_eff: f64) -> Result<()> {
    if !(beta_eff >= 0.0) || beta_eff.is_infinite() {
        return Err(domain(format!(
            "effective beta must be finite and non-negative, got {beta_eff}"
        )));
    }
    Ok(())
}

/// `exp(-β' x)`.
pub fn los_prob_at_distance(beta_eff: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("distance must be non-negative, got {x}")));
    }
    check_beta(beta_eff)?;
    Ok((-beta_eff * x).exp())
}

/// Radius inside which an NLOS AP has lower path loss than a LOS AP at `x`.
pub fn psi_nlos_exclusion(pl: &PathLossParams, x: f64) -> f64 {
    (pl.c_nlos / pl.c_los).powf(1.0 / pl.alpha_nlos) * x.powf(pl.alpha_los / pl.alpha_nlos)
}

// Below this value of β'x the closed forms lose digits to cancellation and
// the Taylor series is used instead.
const SERIES_LIMIT: f64 = 1.0;

/// `1 - e^{-t}(1 + t) = Σ_{k≥2} (-1)^k (k-1) t^k / k!`
fn one_minus_exp_poly(t: f64) -> f64 {
    if t >= SERIES_LIMIT {
        return -(-t).exp_m1() - t * (-t).exp();
    }
    series(t, 2)
}

/// `t²/2 - (1 - e^{-t}(1 + t)) = Σ_{k≥3} (-1)^{k+1} (k-1) t^k / k!`
fn y_kernel(t: f64) -> f64 {
    if t >= SERIES_LIMIT {
        return 0.5 * t * t - one_minus_exp_poly(t);
    }
    -series(t, 3)
}

fn series(t: f64, start: i32) -> f64 {
    // term_k = (-1)^k t^k / k!
    let mut term = 1.0;
    for k in 1..=start {
        term *= -t / k as f64;
    }
    let mut sum = 0.0;
    for k in start..start + 40 {
        let contrib = (k - 1) as f64 * term;
        sum += contrib;
        if contrib.abs() <= 1e-18 * sum.abs() {
            break;
        }
        term *= -t / (k + 1) as f64;
    }
    sum
}

/// `U(x) = ∫₀ˣ r e^{-β' r} dr`. `x` may be `f64::INFINITY`; with `β' = 0` the
/// limit `x²/2` is returned.
pub fn antiderivative_u(beta_eff: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("upper limit must be non-negative, got {x}")));
    }
    check_beta(beta_eff)?;
    if beta_eff == 0.0 {
        return Ok(0.5 * x * x);
    }
    if x.is_infinite() {
        return Ok(1.0 / (beta_eff * beta_eff));
    }
    Ok(one_minus_exp_poly(beta_eff * x) / (beta_eff * beta_eff))
}

/// `Y(x) = x²/2 - U(x) = ∫₀ˣ r (1 - e^{-β' r}) dr`.
pub fn antiderivative_y(beta_eff: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("upper limit must be non-negative, got {x}")));
    }
    check_beta(beta_eff)?;
    if beta_eff == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(y_kernel(beta_eff * x) / (beta_eff * beta_eff))
}

/// Probability that at least one LOS AP exists anywhere in the plane.
pub fn prob_at_least_one_los(inputs: &AssociationInputs) -> f64 {
    if inputs.beta_eff == 0.0 {
        return 1.0;
    }
    let mass = 2.0 * PI * inputs.deployment.lambda / (inputs.beta_eff * inputs.beta_eff);
    -(-mass).exp_m1()
}

/// Density of the distance to the nearest LOS AP, conditioned on one existing.
pub fn nearest_los_density(inputs: &AssociationInputs, x: f64) -> Result<f64> {
    let lambda = inputs.deployment.lambda;
    let u = antiderivative_u(inputs.beta_eff, x)?;
    let b_l = prob_at_least_one_los(inputs);
    let unnormalised = 2.0 * PI * lambda * x * (-inputs.beta_eff * x - 2.0 * PI * lambda * u).exp();
    Ok(unnormalised / b_l)
}

fn truncation_limit(inputs: &AssociationInputs) -> f64 {
    if inputs.beta_eff > 0.0 {
        50.0 / inputs.beta_eff
    } else {
        50.0 * inputs.deployment.radius_scale()
    }
}

fn association_quad_options() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-8,
        abs_tol: 1e-16,
        max_evals: 500_000,
    }
}

const TRUNCATION_RATIO: f64 = 1e-14;

/// Probability that the minimum-path-loss AP is a LOS AP.
pub fn p_los_association(inputs: &AssociationInputs) -> Result<f64> {
    check_beta(inputs.beta_eff)?;
    if inputs.beta_eff == 0.0 {
        // every AP is LOS
        return Ok(1.0);
    }
    let lambda = inputs.deployment.lambda;
    let b = inputs.beta_eff;
    let pl = inputs.pathloss;
    let integrand = |x: f64| {
        let y = antiderivative_y(b, psi_nlos_exclusion(&pl, x)).unwrap_or(f64::INFINITY);
        let u = antiderivative_u(b, x).unwrap_or(0.0);
        x * (-2.0 * PI * lambda * (y + u) - b * x).exp()
    };
    let r = integrate_decaying(
        integrand,
        truncation_limit(inputs),
        TRUNCATION_RATIO,
        association_quad_options(),
    )?;
    Ok((2.0 * PI * lambda * r.value).clamp(0.0, 1.0))
}

/// Same probability assembled as `B_L · ∫ exp(-2πλ Y(ψ(x))) f_L(x) dx`, i.e.
/// through the normalised nearest-LOS density.
pub fn p_los_association_via_density(inputs: &AssociationInputs) -> Result<f64> {
    check_beta(inputs.beta_eff)?;
    if inputs.beta_eff == 0.0 {
        return Ok(1.0);
    }
    let lambda = inputs.deployment.lambda;
    let b = inputs.beta_eff;
    let pl = inputs.pathloss;
    let b_l = prob_at_least_one_los(inputs);
    let integrand = |x: f64| {
        let y = antiderivative_y(b, psi_nlos_exclusion(&pl, x)).unwrap_or(f64::INFINITY);
        let f_l = nearest_los_density(inputs, x).unwrap_or(0.0);
        (-2.0 * PI * lambda * y).exp() * f_l
    };
    let r = integrate_decaying(
        integrand,
        truncation_limit(inputs),
        TRUNCATION_RATIO,
        association_quad_options(),
    )?;
    Ok((b_l * r.value).clamp(0.0, 1.0))
}
