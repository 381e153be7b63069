//! Outer loop: finite-difference descent on circuit angles with the trained
//! network cost `C^NN` as objective.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{outcome_distribution, sample_shots, CircuitParams};
use crate::error::{Error, Result};
use crate::neural::{train, EntropyNet, NetConfig, Objective, Sample, TrainConfig};
use crate::quantum::{renyi_exact, von_neumann_exact, DensityMatrix};
use crate::record::{EigenEstimate, EstimationRecord, Method, OuterPoint, TrialRecord};
use crate::seed::derive_seed;

/// Floor on outcome probabilities when forming the analytic `h = ln P_V`.
const PROB_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FdScheme {
    #[default]
    Forward,
    Central,
}

/// Starting angles of each trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ParamInit {
    /// Uniform on `[0, 2π)`.
    #[default]
    Random,
    /// All angles zero, so the circuit only applies diagonal phases.
    Zeros,
}

impl ParamInit {
    pub fn params(&self, n_qubits: usize, n_layers: usize, seed: u64) -> CircuitParams {
        match self {
            ParamInit::Random => CircuitParams::random(n_qubits, n_layers, seed),
            ParamInit::Zeros => CircuitParams::zeros(n_qubits, n_layers),
        }
    }
}

/// How the inner minimum over `h` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InnerMode {
    /// Train the network on sampled shots.
    #[default]
    Neural,
    /// Exact outcome distribution and `h = ln P_V`; no shots, no network.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QneeConfig {
    /// Ansatz depth; `None` picks [`default_layers`].
    pub n_layers: Option<usize>,
    pub eta_q: f64,
    pub fd_step: f64,
    pub fd_scheme: FdScheme,
    pub n_outer: usize,
    /// Shots per train set and per test set.
    pub n_shots: u64,
    /// Training at the initial angles of each trial.
    pub nn_initial: TrainConfig,
    /// Training at every later evaluation.
    pub nn_step: TrainConfig,
    pub net: NetConfig,
    pub n_trials: usize,
    pub init: ParamInit,
    /// Overrides the objective of both training configs.
    pub objective: Objective,
    pub inner: InnerMode,
    pub seed: u64,
}

impl Default for QneeConfig {
    fn default() -> Self {
        Self {
            n_layers: None,
            eta_q: 0.01,
            fd_step: 0.01,
            fd_scheme: FdScheme::Forward,
            n_outer: 200,
            n_shots: 30_000,
            nn_initial: TrainConfig::default().with_iters(10_000),
            nn_step: TrainConfig::default().with_iters(100),
            net: NetConfig::default(),
            n_trials: 5,
            init: ParamInit::Random,
            objective: Objective::VonNeumann,
            inner: InnerMode::Neural,
            seed: 0,
        }
    }
}

/// 8 layers at three qubits and 10 at four, extended linearly.
pub fn default_layers(n_qubits: usize) -> usize {
    2 * n_qubits + 2
}

impl QneeConfig {
    pub fn layers_for(&self, n_qubits: usize) -> usize {
        self.n_layers.unwrap_or_else(|| default_layers(n_qubits))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_q > 0.0) || !(self.fd_step > 0.0) {
            return Err(Error::Argument(
                "eta_q and fd_step must be positive".into(),
            ));
        }
        if self.n_trials == 0 {
            return Err(Error::Argument("need at least one trial".into()));
        }
        if self.n_layers == Some(0) {
            return Err(Error::Argument("need at least one layer".into()));
        }
        if self.inner == InnerMode::Neural && self.n_shots == 0 {
            return Err(Error::Argument("need at least one shot".into()));
        }
        Ok(())
    }

    fn train_cfg(&self, base: &TrainConfig, seed: u64) -> TrainConfig {
        TrainConfig {
            objective: self.objective,
            seed,
            ..base.clone()
        }
    }
}

/// Inner-estimator state carried between evaluations.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Inner {
    Neural(EntropyNet),
    Exact,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    /// `C^NN`, or the analytic inner minimum in exact mode.
    pub cost: f64,
    pub h_table: Vec<f64>,
    /// State to warm-start the next evaluation from.
    pub inner: Inner,
}

/// Cost at `params`: fresh train and test shots, then warm-started training.
pub fn evaluate_cnn(
    rho: &DensityMatrix,
    params: &CircuitParams,
    warm: &Inner,
    train_cfg: &TrainConfig,
    cfg: &QneeConfig,
    seed: u64,
) -> Result<Evaluation> {
    let dist = outcome_distribution(rho, params)?;
    match warm {
        Inner::Exact => {
            let h: Vec<f64> = dist.iter().map(|p| p.max(PROB_FLOOR).ln()).collect();
            Ok(Evaluation {
                cost: cfg.objective.cost(&h, &dist)?,
                h_table: h,
                inner: Inner::Exact,
            })
        }
        Inner::Neural(net) => {
            let train_set = sample_shots(&dist, cfg.n_shots, derive_seed(seed, &[1]))?;
            let test_set = sample_shots(&dist, cfg.n_shots, derive_seed(seed, &[2]))?;
            let r = train(
                net.clone(),
                &Sample::Shots(train_set),
                &Sample::Shots(test_set),
                &cfg.train_cfg(train_cfg, derive_seed(seed, &[3])),
            )?;
            Ok(Evaluation {
                cost: r.c_nn,
                h_table: r.h_table,
                inner: Inner::Neural(r.best_net),
            })
        }
    }
}

/// Perturbed costs around a known baseline, each warm-started from `warm`.
fn gradient_around(
    rho: &DensityMatrix,
    params: &CircuitParams,
    baseline: f64,
    warm: &Inner,
    cfg: &QneeConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let delta = cfg.fd_step;
    let eval = |k: usize, sign: f64, tag: u64| -> Result<f64> {
        let p = params.perturbed(k, sign * delta);
        let s = derive_seed(seed, &[k as u64, tag]);
        Ok(evaluate_cnn(rho, &p, warm, &cfg.nn_step, cfg, s)?.cost)
    };
    (0..params.len())
        .into_par_iter()
        .map(|k| match cfg.fd_scheme {
            FdScheme::Forward => Ok((eval(k, 1.0, 0)? - baseline) / delta),
            FdScheme::Central => Ok((eval(k, 1.0, 0)? - eval(k, -1.0, 1)?) / (2.0 * delta)),
        })
        .collect()
}

/// Finite-difference gradient of `C^NN` with respect to the circuit angles.
///
/// The forward scheme spends one baseline and one perturbed training per
/// angle; the central scheme two perturbed trainings per angle.
pub fn fd_gradient(
    rho: &DensityMatrix,
    params: &CircuitParams,
    warm: &Inner,
    cfg: &QneeConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let base = evaluate_cnn(rho, params, warm, &cfg.nn_step, cfg, derive_seed(seed, &[u64::MAX]))?;
    gradient_around(rho, params, base.cost, &base.inner, cfg, seed)
}

/// Reference entropy matching the configured objective.
pub fn exact_entropy(rho: &DensityMatrix, objective: Objective) -> Result<f64> {
    match objective {
        Objective::VonNeumann => Ok(von_neumann_exact(rho)),
        Objective::Renyi(a) => renyi_exact(rho, a),
    }
}

fn eigen_from_h(h: &[f64]) -> Vec<EigenEstimate> {
    let mut e: Vec<EigenEstimate> = h
        .iter()
        .enumerate()
        .map(|(index, &h)| EigenEstimate {
            index,
            value: h.exp(),
        })
        .collect();
    e.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.index.cmp(&b.index)));
    e
}

struct TrialState {
    history: Vec<OuterPoint>,
    best: Option<(f64, usize, CircuitParams, Vec<f64>)>,
}

impl TrialState {
    fn finish(self, trial: usize, objective: Objective, failure: Option<String>) -> Result<Option<TrialRecord>> {
        let Some((cost, it, params, h)) = self.best else {
            return Ok(None);
        };
        Ok(Some(TrialRecord {
            trial,
            history: self.history,
            estimate: objective.entropy_from_cost(cost)?,
            best_outer_iter: it,
            best_params: params,
            eigen: eigen_from_h(&h),
            failure,
        }))
    }
}

fn run_trial(
    rho: &DensityMatrix,
    cfg: &QneeConfig,
    trial: usize,
) -> Result<(Option<TrialRecord>, Vec<f64>)> {
    let n = rho.n_qubits();
    let layers = cfg.layers_for(n);
    let t = trial as u64;
    let mut params = cfg.init.params(n, layers, derive_seed(cfg.seed, &[t, 0xA0]));
    let mut inner = match cfg.inner {
        InnerMode::Neural => Inner::Neural(EntropyNet::new(n, cfg.net, derive_seed(cfg.seed, &[t, 0xA1]))?),
        InnerMode::Exact => Inner::Exact,
    };
    let start = Instant::now();
    let mut state = TrialState {
        history: Vec::with_capacity(cfg.n_outer + 1),
        best: None,
    };

    let step = |it: usize, params: &mut CircuitParams, inner: &mut Inner, state: &mut TrialState| -> Result<()> {
        let train_cfg = if it == 0 { &cfg.nn_initial } else { &cfg.nn_step };
        let seed = derive_seed(cfg.seed, &[t, it as u64]);
        let base = evaluate_cnn(rho, params, inner, train_cfg, cfg, derive_seed(seed, &[u64::MAX]))?;
        state.history.push(OuterPoint {
            outer_iter: it,
            cost: base.cost,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        if state.best.as_ref().is_none_or(|b| base.cost < b.0) {
            state.best = Some((base.cost, it, params.clone(), base.h_table.clone()));
        }
        if it < cfg.n_outer {
            let grad = gradient_around(rho, params, base.cost, &base.inner, cfg, seed)?;
            params.descend(&grad, cfg.eta_q);
        }
        *inner = base.inner;
        Ok(())
    };

    for it in 0..=cfg.n_outer {
        if let Err(e) = step(it, &mut params, &mut inner, &mut state) {
            if !matches!(e, Error::Training { .. }) {
                return Err(e);
            }
            let costs = state.history.iter().map(|p| p.cost).collect();
            return Ok((state.finish(trial, cfg.objective, Some(e.to_string()))?, costs));
        }
    }
    let costs = state.history.iter().map(|p| p.cost).collect();
    Ok((state.finish(trial, cfg.objective, None)?, costs))
}

/// Full estimation: independent trials from random angles, each a long
/// initial training followed by `n_outer` descent steps. The estimate is the
/// lowest cost recorded anywhere.
pub fn run_qnee(rho: &DensityMatrix, cfg: &QneeConfig) -> Result<EstimationRecord> {
    cfg.validate()?;
    let n = rho.n_qubits();
    if n < 1 {
        return Err(Error::Argument("need at least one qubit".into()));
    }
    let results: Vec<(Option<TrialRecord>, Vec<f64>)> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| run_trial(rho, cfg, t))
        .collect::<Result<_>>()?;
    let histories: Vec<Vec<f64>> = results.iter().map(|(_, h)| h.clone()).collect();
    let trials: Vec<TrialRecord> = results.into_iter().filter_map(|(r, _)| r).collect();
    if trials.iter().all(|t| t.failure.is_some()) {
        return Err(Error::Estimation { histories });
    }
    let best_trial = trials
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.estimate.total_cmp(&b.1.estimate).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one trial");
    Ok(EstimationRecord {
        method: Method::Qnee,
        objective: cfg.objective,
        n_qubits: n,
        n_layers: cfg.layers_for(n),
        estimate: trials[best_trial].estimate,
        best_trial,
        trials,
        exact_entropy: Some(exact_entropy(rho, cfg.objective)?),
    })
}
