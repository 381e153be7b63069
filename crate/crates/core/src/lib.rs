//! Entropy, eigenvalue and eigenvector estimation for small density matrices
//! by jointly training a simulated layered circuit and a classical network
//! on variational entropy bounds, with exact-diagonalization oracles and a
//! scheduled-Hamiltonian eigensolver baseline for comparison.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod error;
pub mod hybrid;
pub mod neural;
pub mod quantum;
pub mod record;
pub mod seed;
pub mod vqse;
pub mod xxz;

pub use error::{Error, Result};
