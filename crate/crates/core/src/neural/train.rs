use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::{EntropyNet, Objective};
use crate::ansatz::{validate_distribution, ShotSet};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub n_iter: usize,
    /// Minibatch size in shots; `None` trains on the full training set.
    pub batch_size: Option<usize>,
    pub test_eval_period: usize,
    pub seed: u64,
    pub objective: Objective,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            weight_decay: 5e-5,
            n_iter: 100,
            batch_size: None,
            test_eval_period: 10,
            seed: 0,
            objective: Objective::VonNeumann,
        }
    }
}

impl TrainConfig {
    pub fn with_iters(mut self, n_iter: usize) -> Self {
        self.n_iter = n_iter;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Argument("learning rate must be positive".into()));
        }
        if self.n_iter == 0 || self.test_eval_period == 0 {
            return Err(Error::Argument(
                "iteration count and test period must be at least 1".into(),
            ));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Argument("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Strings the cost's first term is averaged over.
#[derive(Clone, Debug, PartialEq)]
pub enum Sample {
    Shots(ShotSet),
    /// Exact outcome probabilities (the infinite-shot limit).
    Exact(Vec<f64>),
}

impl Sample {
    pub fn weights(&self) -> Vec<f64> {
        match self {
            Sample::Shots(s) => s.frequencies(),
            Sample::Exact(p) => p.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Sample::Shots(s) => s.counts().len(),
            Sample::Exact(p) => p.len(),
        }
    }

    /// Shot count behind the sample; `None` for exact weights.
    pub fn n_shots(&self) -> Option<u64> {
        match self {
            Sample::Shots(s) => Some(s.total()),
            Sample::Exact(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub iteration: usize,
    pub train: f64,
    pub test: f64,
}

#[derive(Clone, Debug)]
pub struct NnResult {
    /// Lowest recorded test cost.
    pub c_nn: f64,
    pub best_net: EntropyNet,
    /// `h` of `best_net` on every string.
    pub h_table: Vec<f64>,
    pub history: Vec<EvalPoint>,
}

/// Minibatch weights: frequency of each string within `batch`.
fn batch_weights(batch: &[usize], dim: usize) -> Vec<f64> {
    let mut w = vec![0.0; dim];
    let inc = 1.0 / batch.len() as f64;
    for &i in batch {
        w[i] += inc;
    }
    w
}

/// Iterator over minibatches of a shuffled shot list, reshuffled every epoch.
struct Batches {
    shots: Vec<usize>,
    size: usize,
    pos: usize,
    rng: rand_chacha::ChaCha8Rng,
}

impl Batches {
    fn new(shots: Vec<usize>, size: usize, seed: u64) -> Self {
        let mut b = Self {
            shots,
            size,
            pos: 0,
            rng: rng_from(seed),
        };
        b.shots.shuffle(&mut b.rng);
        b
    }

    fn next_batch(&mut self) -> &[usize] {
        if self.pos + self.size > self.shots.len() {
            self.shots.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let end = (self.pos + self.size).min(self.shots.len());
        let out = &self.shots[self.pos..end];
        self.pos = end;
        out
    }
}

/// Minimize the cost on `train_set` with Adam, tracking the test cost every
/// `test_eval_period` iterations and after the last update.
pub fn train(
    mut net: EntropyNet,
    train_set: &Sample,
    test_set: &Sample,
    cfg: &TrainConfig,
) -> Result<NnResult> {
    cfg.validate()?;
    let dim = 1usize << net.n_qubits();
    for s in [train_set, test_set] {
        if s.dim() != dim {
            return Err(Error::Argument(format!(
                "sample covers {} strings, network covers {dim}",
                s.dim()
            )));
        }
        if let Sample::Exact(p) = s {
            validate_distribution(p)?;
        }
    }
    let w_train = train_set.weights();
    let w_test = test_set.weights();
    let mut batches = match (cfg.batch_size, train_set) {
        (Some(size), Sample::Shots(shots)) => Some(Batches::new(
            shots.expand(),
            size.min(shots.total() as usize),
            derive_seed(cfg.seed, &[0xBA7C]),
        )),
        _ => None,
    };

    let mut opt = Adam::new(&net, cfg.learning_rate, cfg.weight_decay);
    let mut history = Vec::new();
    let mut best: Option<(f64, EntropyNet, Vec<f64>)> = None;

    let mut record = |it: usize, net: &EntropyNet, h: &[f64], history: &mut Vec<EvalPoint>| -> Result<()> {
        let c_train = cfg.objective.cost(h, &w_train)?;
        let c_test = cfg.objective.cost(h, &w_test)?;
        history.push(EvalPoint {
            iteration: it,
            train: c_train,
            test: c_test,
        });
        if !c_train.is_finite() || !c_test.is_finite() {
            return Err(Error::Training {
                iteration: it,
                history: history.iter().map(|e| (e.iteration, e.train, e.test)).collect(),
            });
        }
        if best.as_ref().is_none_or(|(c, _, _)| c_test < *c) {
            best = Some((c_test, net.clone(), h.to_vec()));
        }
        Ok(())
    };

    for it in 0..cfg.n_iter {
        let cache = net.forward_all();
        if it % cfg.test_eval_period == 0 {
            record(it, &net, cache.output(), &mut history)?;
        }
        let dh = match batches.as_mut() {
            Some(b) => {
                let w = batch_weights(b.next_batch(), dim);
                cfg.objective.grad_h(cache.output(), &w)?
            }
            None => cfg.objective.grad_h(cache.output(), &w_train)?,
        };
        if dh.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training {
                iteration: it,
                history: history.iter().map(|e| (e.iteration, e.train, e.test)).collect(),
            });
        }
        let grads = net.backward(&cache, &dh);
        opt.step(&mut net, &grads);
    }
    let h = net.h_table();
    record(cfg.n_iter, &net, &h, &mut history)?;

    let (c_nn, best_net, h_table) = best.expect("at least one evaluation recorded");
    Ok(NnResult {
        c_nn,
        best_net,
        h_table,
        history,
    })
}

/// Gradient of the cost on `weights` averaged over consecutive minibatches
/// that partition `shots` (in the given order).
pub fn epoch_average_gradient(
    net: &EntropyNet,
    objective: Objective,
    shots: &[usize],
    batch_size: usize,
) -> Result<Vec<f64>> {
    if batch_size == 0 || shots.is_empty() || !shots.len().is_multiple_of(batch_size) {
        return Err(Error::Argument(
            "batch size must evenly divide a nonempty shot list".into(),
        ));
    }
    let dim = 1usize << net.n_qubits();
    let n_batches = shots.len() / batch_size;
    let mut acc = vec![0.0; net.n_params()];
    for batch in shots.chunks(batch_size) {
        let (_, g) = net.cost_and_gradient(objective, &batch_weights(batch, dim))?;
        for (a, x) in acc.iter_mut().zip(g.to_flat()) {
            *a += x / n_batches as f64;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::NetConfig;

    fn small() -> NetConfig {
        NetConfig {
            embed_dim: 8,
            hidden_width: 16,
        }
    }

    #[test]
    fn c_nn_is_min_of_recorded_test_costs() {
        let net = EntropyNet::new(2, small(), 3).unwrap();
        let train_s = Sample::Shots(ShotSet::from_counts(vec![50, 30, 15, 5]).unwrap());
        let test_s = Sample::Shots(ShotSet::from_counts(vec![48, 33, 12, 7]).unwrap());
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            n_iter: 95,
            ..Default::default()
        };
        let r = train(net, &train_s, &test_s, &cfg).unwrap();
        let min = r.history.iter().map(|e| e.test).fold(f64::INFINITY, f64::min);
        assert_eq!(r.c_nn, min);
        // 0, 10, ..., 90 and the final state.
        assert_eq!(r.history.len(), 11);
        assert_eq!(r.h_table, r.best_net.h_table());
    }

    #[test]
    fn divergence_is_reported_with_history() {
        let net = EntropyNet::new(1, small(), 3).unwrap();
        let s = Sample::Exact(vec![0.5, 0.5]);
        let cfg = TrainConfig {
            learning_rate: 1e6,
            weight_decay: 0.0,
            n_iter: 200,
            test_eval_period: 1,
            ..Default::default()
        };
        match train(net, &s, &s, &cfg) {
            Err(Error::Training { history, .. }) => assert!(!history.is_empty()),
            other => panic!("expected divergence, got {:?}", other.map(|r| r.c_nn)),
        }
    }

    #[test]
    fn config_validation() {
        let net = EntropyNet::new(1, small(), 3).unwrap();
        let s = Sample::Exact(vec![0.5, 0.5]);
        let bad = TrainConfig {
            n_iter: 0,
            ..Default::default()
        };
        assert!(train(net.clone(), &s, &s, &bad).is_err());
        let wrong_dim = Sample::Exact(vec![0.25; 4]);
        assert!(train(net, &wrong_dim, &s, &TrainConfig::default()).is_err());
    }
}
