//! Scheduled-Hamiltonian eigensolver baseline.
//!
//! The circuit is trained to minimize the energy of
//! `H(t) = (1 - t) H_L + t H_G`, where `H_L = I - ½ Σ_j r_j Z_j` is a local
//! Hamiltonian with distinct low levels and `H_G` is diagonal with those same
//! levels placed on the currently most frequent strings. Eigenvalues are then
//! read off as string frequencies.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{outcome_distribution, sample_shots, BitString, CircuitParams, ShotSet};
use crate::error::{Error, Result};
use crate::hybrid::{default_layers, exact_entropy, FdScheme, ParamInit};
use crate::neural::Objective;
use crate::quantum::DensityMatrix;
use crate::record::{EigenEstimate, EstimationRecord, Method, OuterPoint, TrialRecord};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VqseConfig {
    /// Number of qubits `H_L` acts on, counted from qubit 0; `None` means all.
    pub ell: Option<usize>,
    pub r1: f64,
    pub delta_r: f64,
    /// Size of the top-string set; `None` means `ℓ + 1`.
    pub m: Option<usize>,
    pub t_update_period: usize,
    pub learning_rate: f64,
    pub n_iter: usize,
    pub n_shots: u64,
    pub n_layers: Option<usize>,
    pub fd_step: f64,
    pub fd_scheme: FdScheme,
    pub n_trials: usize,
    pub init: ParamInit,
    /// Entropy functional applied to the final eigenvalue estimates.
    pub objective: Objective,
    pub seed: u64,
}

impl Default for VqseConfig {
    fn default() -> Self {
        Self {
            ell: None,
            r1: 0.2,
            delta_r: 0.01,
            m: None,
            t_update_period: 25,
            learning_rate: 0.05,
            n_iter: 200,
            n_shots: 30_000,
            n_layers: None,
            fd_step: 0.01,
            fd_scheme: FdScheme::Forward,
            n_trials: 5,
            init: ParamInit::Random,
            objective: Objective::VonNeumann,
            seed: 0,
        }
    }
}

impl VqseConfig {
    pub fn ell_for(&self, n_qubits: usize) -> usize {
        self.ell.unwrap_or(n_qubits)
    }

    pub fn m_for(&self, n_qubits: usize) -> usize {
        self.m.unwrap_or(self.ell_for(n_qubits) + 1)
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let ell = self.ell_for(n_qubits);
        if ell == 0 || ell > n_qubits {
            return Err(Error::Argument(format!("ell must be in 1..={n_qubits}, got {ell}")));
        }
        let m = self.m_for(n_qubits);
        if m == 0 || m >= 1 << ell {
            return Err(Error::Argument(format!(
                "top-set size {m} must be in 1..{}",
                1usize << ell
            )));
        }
        if !(self.r1 > 0.0) || !(self.delta_r >= 0.0) {
            return Err(Error::Argument("r1 must be positive and delta_r nonnegative".into()));
        }
        if self.t_update_period == 0 || self.n_trials == 0 || self.n_shots == 0 {
            return Err(Error::Argument(
                "period, trial count and shot count must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !(self.fd_step > 0.0) {
            return Err(Error::Argument("learning rate and fd_step must be positive".into()));
        }
        Ok(())
    }

    /// `t` used at iteration `i`: steps of `1/k_max` every period, reaching 1
    /// once three quarters of the iterations have passed.
    pub fn t_at(&self, i: usize) -> f64 {
        let k_max = ((3 * self.n_iter) / (4 * self.t_update_period)).max(1);
        ((i / self.t_update_period) as f64 / k_max as f64).min(1.0)
    }
}

/// `E_L(s) = 1 - ½ Σ_j r_j z_j` with `r_j = r_1 + (j - 1) δ` and `z = +1` for bit 0.
pub fn local_energy(s: &BitString, cfg: &VqseConfig) -> f64 {
    let ell = cfg.ell_for(s.n_qubits()).min(s.n_qubits());
    let sum: f64 = (0..ell)
        .map(|q| {
            let r = cfg.r1 + q as f64 * cfg.delta_r;
            let z = if s.bit(q) == 0 { 1.0 } else { -1.0 };
            r * z
        })
        .sum();
    1.0 - 0.5 * sum
}

/// All `H_L` levels, ascending.
pub fn local_levels(n_qubits: usize, cfg: &VqseConfig) -> Vec<f64> {
    let mut e: Vec<f64> = BitString::all(n_qubits).map(|s| local_energy(&s, cfg)).collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Diagonal of `H_G`: the `|top_set|` lowest `H_L` levels on `top_set` (first
/// string gets the lowest), 1 on every other string.
pub fn global_energies(n_qubits: usize, top_set: &[BitString], cfg: &VqseConfig) -> Vec<f64> {
    let levels = local_levels(n_qubits, cfg);
    let mut e = vec![1.0; 1 << n_qubits];
    for (s, level) in top_set.iter().zip(levels) {
        e[s.index()] = level;
    }
    e
}

/// `Σ_s P(s) [(1 - t) E_L(s) + t E_G(s)]`.
pub fn vqse_cost(dist: &[f64], t: f64, top_set: &[BitString], cfg: &VqseConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Argument(format!("t = {t} outside [0, 1]")));
    }
    let n = crate::quantum::dim_to_qubits(dist.len())?;
    if top_set.iter().any(|s| s.n_qubits() != n) {
        return Err(Error::Argument("top-set string width does not match".into()));
    }
    let eg = global_energies(n, top_set, cfg);
    Ok(BitString::all(n)
        .zip(dist)
        .map(|(s, &p)| p * ((1.0 - t) * local_energy(&s, cfg) + t * eg[s.index()]))
        .sum())
}

fn sampled(rho: &DensityMatrix, params: &CircuitParams, n_shots: u64, seed: u64) -> Result<ShotSet> {
    sample_shots(&outcome_distribution(rho, params)?, n_shots, seed)
}

/// Entropy of the (possibly unnormalized) eigenvalue estimates.
fn entropy_of_estimates(values: &[f64], objective: Objective) -> f64 {
    match objective {
        Objective::VonNeumann => values
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum(),
        Objective::Renyi(a) => {
            values.iter().map(|p| p.powf(a)).sum::<f64>().ln() / (1.0 - a)
        }
    }
}

fn run_trial(rho: &DensityMatrix, cfg: &VqseConfig, trial: usize) -> Result<TrialRecord> {
    let n = rho.n_qubits();
    let m = cfg.m_for(n);
    let t_id = trial as u64;
    let layers = cfg.n_layers.unwrap_or_else(|| default_layers(n));
    let mut params = cfg.init.params(n, layers, derive_seed(cfg.seed, &[t_id, 0xA0]));
    let start = Instant::now();
    let mut history = Vec::with_capacity(cfg.n_iter + 1);
    let mut top_set: Vec<BitString> = Vec::new();
    let delta = cfg.fd_step;

    for i in 0..=cfg.n_iter {
        let seed = derive_seed(cfg.seed, &[t_id, i as u64]);
        let shots = sampled(rho, &params, cfg.n_shots, derive_seed(seed, &[u64::MAX]))?;
        if i % cfg.t_update_period == 0 || top_set.is_empty() {
            top_set = shots.most_frequent(m);
        }
        let t = cfg.t_at(i);
        let base = vqse_cost(&shots.frequencies(), t, &top_set, cfg)?;
        history.push(OuterPoint {
            outer_iter: i,
            cost: base,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        if i == cfg.n_iter {
            break;
        }
        let cost_at = |k: usize, sign: f64, tag: u64| -> Result<f64> {
            let p = params.perturbed(k, sign * delta);
            let s = sampled(rho, &p, cfg.n_shots, derive_seed(seed, &[k as u64, tag]))?;
            vqse_cost(&s.frequencies(), t, &top_set, cfg)
        };
        let grad: Vec<f64> = (0..params.len())
            .into_par_iter()
            .map(|k| match cfg.fd_scheme {
                FdScheme::Forward => Ok((cost_at(k, 1.0, 0)? - base) / delta),
                FdScheme::Central => Ok((cost_at(k, 1.0, 0)? - cost_at(k, -1.0, 1)?) / (2.0 * delta)),
            })
            .collect::<Result<_>>()?;
        params.descend(&grad, cfg.learning_rate);
    }

    let final_shots = sampled(
        rho,
        &params,
        cfg.n_shots,
        derive_seed(cfg.seed, &[t_id, 0xF1]),
    )?;
    let total = final_shots.total() as f64;
    let eigen: Vec<EigenEstimate> = final_shots
        .most_frequent(m)
        .into_iter()
        .map(|s| EigenEstimate {
            index: s.index(),
            value: final_shots.count(&s) as f64 / total,
        })
        .collect();
    let values: Vec<f64> = eigen.iter().map(|e| e.value).collect();
    Ok(TrialRecord {
        trial,
        estimate: entropy_of_estimates(&values, cfg.objective),
        best_outer_iter: cfg.n_iter,
        best_params: params,
        eigen,
        history,
        failure: None,
    })
}

/// Run the baseline. Among trials, the one with the lowest final energy
/// supplies the estimate.
pub fn run_vqse(rho: &DensityMatrix, cfg: &VqseConfig) -> Result<EstimationRecord> {
    let n = rho.n_qubits();
    cfg.validate(n)?;
    let trials: Vec<TrialRecord> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| run_trial(rho, cfg, t))
        .collect::<Result<_>>()?;
    let final_cost = |t: &TrialRecord| t.history.last().map_or(f64::INFINITY, |p| p.cost);
    let best_trial = (0..trials.len())
        .min_by(|&a, &b| final_cost(&trials[a]).total_cmp(&final_cost(&trials[b])).then(a.cmp(&b)))
        .expect("at least one trial");
    Ok(EstimationRecord {
        method: Method::Vqse,
        objective: cfg.objective,
        n_qubits: n,
        n_layers: cfg.n_layers.unwrap_or_else(|| default_layers(n)),
        estimate: trials[best_trial].estimate,
        best_trial,
        trials,
        exact_entropy: Some(exact_entropy(rho, cfg.objective)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg2() -> VqseConfig {
        VqseConfig {
            ell: Some(2),
            ..Default::default()
        }
    }

    #[test]
    fn local_energy_examples() {
        let c = cfg2();
        let e = |i| local_energy(&BitString::new(2, i).unwrap(), &c);
        assert!((e(0) - 0.795).abs() < 1e-12);
        assert!((e(3) - 1.205).abs() < 1e-12);
        assert!((e(1) - 1.005).abs() < 1e-12);
        assert!((e(2) - 0.995).abs() < 1e-12);
    }

    #[test]
    fn uniform_local_cost_is_one() {
        let c = vqse_cost(&[0.25; 4], 0.0, &[], &cfg2()).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concentrated_on_top_string_gives_lowest_level() {
        let c = cfg2();
        let top = [BitString::new(2, 2).unwrap(), BitString::new(2, 0).unwrap()];
        let cost = vqse_cost(&[0.0, 0.0, 1.0, 0.0], 1.0, &top, &c).unwrap();
        assert!((cost - 0.795).abs() < 1e-12);
    }

    #[test]
    fn schedule_reaches_one_by_three_quarters() {
        let c = VqseConfig::default();
        assert_eq!(c.t_at(0), 0.0);
        assert_eq!(c.t_at(150), 1.0);
        assert!(c.t_at(149) < 1.0);
        assert!((1..=200).all(|i| c.t_at(i) >= c.t_at(i - 1)));
    }

    #[test]
    fn rejects_bad_config() {
        let rho = DensityMatrix::maximally_mixed(2);
        let bad = VqseConfig {
            m: Some(4),
            ..Default::default()
        };
        assert!(run_vqse(&rho, &bad).is_err());
        assert!(vqse_cost(&[0.25; 4], 1.5, &[], &cfg2()).is_err());
    }
}
