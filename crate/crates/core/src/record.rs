//! Estimation records and their serialized forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ansatz::{conjugate_column, BitString, CircuitParams};
use crate::error::{Error, Result};
use crate::neural::Objective;
use crate::quantum::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qnee,
    Vqse,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Qnee => "qnee",
            Method::Vqse => "vqse",
        }
    }
}

/// One recorded outer iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterPoint {
    /// Also identifies the circuit parameters evaluated at this step.
    pub outer_iter: usize,
    /// `C^NN` for QNEE, the scheduled energy for VQSE.
    pub cost: f64,
    pub wall_time_s: f64,
}

/// A string and its estimated eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    pub index: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub history: Vec<OuterPoint>,
    /// Entropy estimate of this trial alone.
    pub estimate: f64,
    pub best_outer_iter: usize,
    pub best_params: CircuitParams,
    /// Eigenvalue estimates, largest first.
    pub eigen: Vec<EigenEstimate>,
    /// Set when the trial diverged; the other fields then describe the last good state.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationRecord {
    pub method: Method,
    pub objective: Objective,
    pub n_qubits: usize,
    pub n_layers: usize,
    pub trials: Vec<TrialRecord>,
    /// Index into `trials` of the trial providing the estimate.
    pub best_trial: usize,
    /// Entropy estimate (for Rényi objectives, already converted from cost).
    pub estimate: f64,
    pub exact_entropy: Option<f64>,
}

impl EstimationRecord {
    pub fn best(&self) -> &TrialRecord {
        &self.trials[self.best_trial]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.best().eigen.iter().map(|e| e.value).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// An estimated eigenpair `(λ̂_i, V†|s_i⟩)`.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub string: BitString,
    pub vector: StateVector,
}

/// The `k` largest eigenvalue estimates of the best trial with their eigenvectors.
pub fn extract_eigen(record: &EstimationRecord, k: usize) -> Result<Vec<EigenPair>> {
    let best = record.best();
    if k > best.eigen.len() {
        return Err(Error::Argument(format!(
            "requested {k} eigenpairs, record holds {}",
            best.eigen.len()
        )));
    }
    best.eigen[..k]
        .iter()
        .map(|e| {
            let string = BitString::new(record.n_qubits, e.index)?;
            Ok(EigenPair {
                value: e.value,
                string,
                vector: conjugate_column(&best.best_params, &string)?,
            })
        })
        .collect()
}

/// Row of the learning-curve CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: Method,
    pub trial: usize,
    pub outer_iter: usize,
    pub c_nn: f64,
    pub exact_entropy: Option<f64>,
}

pub fn curve_rows(record: &EstimationRecord) -> Vec<CurveRow> {
    record
        .trials
        .iter()
        .flat_map(|t| {
            t.history.iter().map(move |p| CurveRow {
                method: record.method,
                trial: t.trial,
                outer_iter: p.outer_iter,
                c_nn: p.cost,
                exact_entropy: record.exact_entropy,
            })
        })
        .collect()
}

/// Learning curves as CSV with columns `method,trial,outer_iter,c_nn,exact_entropy`.
pub fn write_curve_csv<W: Write>(records: &[&EstimationRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        for row in curve_rows(r) {
            out.serialize(row)?;
        }
    }
    out.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

pub fn read_curve_csv<R: std::io::Read>(r: R) -> Result<Vec<CurveRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}
