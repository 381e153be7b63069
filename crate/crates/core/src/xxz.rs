//! Periodic XXZ chain in a longitudinal field.
//!
//! `H = Σ_l (X_l X_{l+1} + Y_l Y_{l+1} + Δ Z_l Z_{l+1} - λ Z_l)` with site
//! `L ≡ 0`. Site `l` is qubit `l`, so `|0…0⟩` is the fully polarized state
//! favoured by a large positive field.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{fix_phase, ComplexMatrix, PartialTrace, StateVector, C64};

/// Largest chain handled by the dense builder.
pub const MAX_SITES: usize = 12;

/// Ground-state energies closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XxzParams {
    pub sites: usize,
    pub delta: f64,
    pub lambda: f64,
}

impl XxzParams {
    pub fn new(sites: usize, delta: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            sites,
            delta,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::Argument(format!(
                "chain needs at least 2 sites, got {}",
                self.sites
            )));
        }
        if self.sites > MAX_SITES {
            return Err(Error::Capacity(format!(
                "{} sites exceeds the dense limit of {MAX_SITES}",
                self.sites
            )));
        }
        if !self.delta.is_finite() || !self.lambda.is_finite() {
            return Err(Error::Argument("Δ and λ must be finite".into()));
        }
        Ok(())
    }
}

/// Field at which the ground state becomes fully polarized, `2(1 - Δ)`.
pub fn critical_field(delta: f64) -> f64 {
    2.0 * (1.0 - delta)
}

fn real_hamiltonian(p: &XxzParams) -> Result<DMatrix<f64>> {
    p.validate()?;
    let l = p.sites;
    let dim = 1usize << l;
    let bit = |site: usize| 1usize << (l - 1 - site);
    let z = |state: usize, site: usize| if state & bit(site) == 0 { 1.0 } else { -1.0 };
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for state in 0..dim {
        for site in 0..l {
            let next = (site + 1) % l;
            let (za, zb) = (z(state, site), z(state, next));
            h[(state, state)] += p.delta * za * zb - p.lambda * za;
            // X X + Y Y = 2 (σ⁺σ⁻ + σ⁻σ⁺): flips an anti-aligned pair with amplitude 2.
            if za != zb {
                let flipped = state ^ bit(site) ^ bit(next);
                h[(flipped, state)] += 2.0;
            }
        }
    }
    Ok(h)
}

/// Dense Hamiltonian matrix on `2^L` states.
pub fn build_hamiltonian(p: &XxzParams) -> Result<ComplexMatrix> {
    Ok(real_hamiltonian(p)?.map(|x| C64::new(x, 0.0)))
}

/// Ground state together with its energy and the degeneracy of the lowest level.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub state: StateVector,
    pub energy: f64,
    pub degeneracy: usize,
}

impl GroundState {
    /// Reduced state of the contiguous block of `size` sites starting at site 0.
    pub fn block(&self, size: usize) -> Result<crate::quantum::DensityMatrix> {
        if size == 0 || size >= self.state.n_qubits() {
            return Err(Error::Argument(format!(
                "block size {size} must lie in [1, {})",
                self.state.n_qubits()
            )));
        }
        let keep: Vec<usize> = (0..size).collect();
        self.state.partial_trace(&keep)
    }
}

/// Lowest eigenvector of the chain.
///
/// For a degenerate ground level the returned vector is the projection of the
/// lowest-index basis state with nonzero weight onto the ground space, which
/// does not depend on the eigensolver's choice of basis.
pub fn ground_state(p: &XxzParams) -> Result<GroundState> {
    let h = real_hamiltonian(p)?;
    let dim = h.nrows();
    let eig = h.symmetric_eigen();
    let energy = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let ground: Vec<usize> = (0..dim)
        .filter(|&k| eig.eigenvalues[k] - energy < DEGENERACY_TOL)
        .collect();
    let degeneracy = ground.len();

    let project = |e: usize| -> DVector<f64> {
        let mut v = DVector::zeros(dim);
        for &k in &ground {
            let col = eig.eigenvectors.column(k);
            v += col * col[e];
        }
        v
    };
    let mut vec = (0..dim)
        .map(project)
        .find(|v| v.norm() > 1e-6)
        .expect("ground space is nonempty");
    vec /= vec.norm();
    let mut amps = vec.map(|x| C64::new(x, 0.0));
    fix_phase(&mut amps);
    Ok(GroundState {
        state: StateVector::normalized(amps)?,
        energy,
        degeneracy,
    })
}
