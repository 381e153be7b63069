//! Variational entropy costs evaluated on an `h` table.
//!
//! `weights` is the distribution the first term is averaged over: the
//! empirical frequencies of a shot set, a minibatch, or the exact outcome
//! probabilities. The normalization term always runs over every string.

use serde::{Deserialize, Serialize};

use crate::ansatz::ShotSet;
use crate::error::{Error, Result};
use crate::quantum::check_alpha;

/// `-Σ_i w_i h_i + Σ_i e^{h_i} - 1`.
pub fn cost_vn(h: &[f64], weights: &[f64]) -> f64 {
    let first: f64 = h
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w != 0.0)
        .map(|(&h, &w)| w * h)
        .sum();
    let norm: f64 = h.iter().map(|x| x.exp()).sum();
    -first + norm - 1.0
}

/// [`cost_vn`] averaged over the strings of a shot set.
pub fn cost_vn_shots(h: &[f64], shots: &ShotSet) -> f64 {
    cost_vn(h, &shots.frequencies())
}

/// `Σ_i w_i (e^{(α-1) h_i} - 1)/(1-α) + (Σ_i e^{α h_i} - 1)/α`.
///
/// The `-1` of the normalization term is taken once, not per string, so the
/// bound saturates at `h = ln p` and tends to [`cost_vn`] as `α → 1`.
pub fn cost_renyi(h: &[f64], weights: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let first: f64 = h
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w != 0.0)
        .map(|(&h, &w)| w * (((alpha - 1.0) * h).exp() - 1.0) / (1.0 - alpha))
        .sum();
    let norm: f64 = h.iter().map(|&h| (alpha * h).exp()).sum();
    let second = (norm - 1.0) / alpha;
    Ok(first + second)
}

/// Solve `(e^{(1-α)S} - 1)/(α(1-α)) = c` for `S`.
pub fn invert_cost_renyi(c_alpha: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let arg = 1.0 + alpha * (1.0 - alpha) * c_alpha;
    if !(arg > 0.0) {
        return Err(Error::Range(format!(
            "cost {c_alpha} at order {alpha} has no entropy preimage"
        )));
    }
    Ok(arg.ln() / (1.0 - alpha))
}

/// Which variational bound is being minimized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    VonNeumann,
    Renyi(f64),
}

impl Objective {
    pub fn cost(&self, h: &[f64], weights: &[f64]) -> Result<f64> {
        match *self {
            Objective::VonNeumann => Ok(cost_vn(h, weights)),
            Objective::Renyi(a) => cost_renyi(h, weights, a),
        }
    }

    /// `∂C/∂h_i`.
    pub fn grad_h(&self, h: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Objective::VonNeumann => Ok(h
                .iter()
                .zip(weights)
                .map(|(&h, &w)| h.exp() - w)
                .collect()),
            Objective::Renyi(a) => {
                check_alpha(a)?;
                Ok(h.iter()
                    .zip(weights)
                    .map(|(&h, &w)| {
                        let first = if w != 0.0 { -w * ((a - 1.0) * h).exp() } else { 0.0 };
                        first + (a * h).exp()
                    })
                    .collect())
            }
        }
    }

    /// Entropy implied by a cost value at saturation.
    pub fn entropy_from_cost(&self, c: f64) -> Result<f64> {
        match *self {
            Objective::VonNeumann => Ok(c),
            Objective::Renyi(a) => invert_cost_renyi(c, a),
        }
    }
}
