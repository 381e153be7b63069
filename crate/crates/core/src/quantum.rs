//! Dense complex linear algebra for few-qubit states.
//!
//! Qubit `q` of an `n`-qubit register corresponds to bit `n - 1 - q` of a
//! basis index, i.e. qubit 0 is the most significant bit.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Tolerance for the Hermitian / trace / positivity checks on density matrices.
pub const STATE_TOL: f64 = 1e-10;

/// Eigenvalue floor used when forming `ln ρ` for rank-deficient states.
pub const LOG_CLAMP: f64 = 1e-14;

pub(crate) fn dim_to_qubits(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Validation(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Largest entrywise deviation `|m_ij - conj(m_ji)|`.
pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn hermitize(m: &mut ComplexMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// A pure state on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let n_qubits = dim_to_qubits(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::Validation(format!(
                "state norm {norm} deviates from 1"
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Rescale arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Validation("cannot normalize a zero vector".into()));
        }
        Self::new(amplitudes / C64::new(norm, 0.0))
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Argument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes: amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `⟨ψ|M|ψ⟩`.
    pub fn expectation(&self, m: &ComplexMatrix) -> C64 {
        self.amplitudes.dotc(&(m * &self.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_parts(self.n_qubits, m)
    }
}

/// A Hermitian, unit-trace, positive semidefinite operator on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validate and wrap a matrix.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Validation("density matrix must be square".into()));
        }
        let n_qubits = dim_to_qubits(matrix.nrows())?;
        let herm = hermiticity_error(&matrix);
        if herm > STATE_TOL {
            return Err(Error::Validation(format!(
                "matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::Validation(format!("trace {tr} deviates from 1")));
        }
        let mut matrix = matrix;
        hermitize(&mut matrix);
        let eig = matrix.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(Error::Validation(format!(
                "matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Wrap a matrix known to be a valid state up to rounding; symmetrizes it.
    pub(crate) fn from_parts(n_qubits: usize, mut matrix: ComplexMatrix) -> Self {
        hermitize(&mut matrix);
        Self { n_qubits, matrix }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let d = probs.len();
        let m = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(probs[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::new(m)
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        let m = ComplexMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
        Self { n_qubits, matrix: m }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> Spectrum {
        // Hermitian by construction.
        eig_hermitian_unchecked(&self.matrix)
    }

    /// `tr(ρ M)`.
    pub fn expectation(&self, m: &ComplexMatrix) -> C64 {
        (&self.matrix * m).trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }
}

/// Eigen-decomposition with eigenvalues sorted descending and eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn eigenvector(&self, k: usize) -> DVector<C64> {
        self.eigenvectors.column(k).into_owned()
    }

    /// `U diag(λ) U†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.eigenvalues.len();
        let diag = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(self.eigenvalues[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &self.eigenvectors * diag * self.eigenvectors.adjoint()
    }
}

/// Rotate `v` so its first non-negligible component is real and positive.
pub fn fix_phase(v: &mut DVector<C64>) {
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Lexicographic order on phase-fixed vectors: larger magnitude at the first
/// differing position comes first.
fn lex_order(a: &DVector<C64>, b: &DVector<C64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let (mx, my) = (x.norm(), y.norm());
        if (mx - my).abs() > 1e-9 {
            return my.partial_cmp(&mx).unwrap_or(Ordering::Equal);
        }
        if (x.re - y.re).abs() > 1e-9 {
            return y.re.partial_cmp(&x.re).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

const EIG_TIE: f64 = 1e-10;
const EIG_FLOOR: f64 = 1e-13;

fn eig_hermitian_unchecked(m: &ComplexMatrix) -> Spectrum {
    let eig = m.clone().symmetric_eigen();
    let d = m.nrows();
    let mut pairs: Vec<(f64, DVector<C64>)> = (0..d)
        .map(|k| {
            let mut v = eig.eigenvectors.column(k).into_owned();
            fix_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|(la, va), (lb, vb)| {
        if (la - lb).abs() > EIG_TIE {
            lb.partial_cmp(la).unwrap_or(Ordering::Equal)
        } else {
            lex_order(va, vb)
        }
    });
    let eigenvalues = pairs.iter().map(|(l, _)| *l).collect();
    let eigenvectors = ComplexMatrix::from_fn(d, d, |i, k| pairs[k].1[i]);
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted descending; within a degenerate cluster the
/// phase-fixed eigenvectors are ordered lexicographically.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Spectrum> {
    if m.nrows() != m.ncols() {
        return Err(Error::Validation("matrix must be square".into()));
    }
    let herm = hermiticity_error(m);
    if herm > STATE_TOL {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (deviation {herm:e})"
        )));
    }
    Ok(eig_hermitian_unchecked(m))
}

/// Apply a real function to a Hermitian matrix through its spectrum.
pub fn hermitian_map(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let spec = eig_hermitian(m)?;
    let mapped = Spectrum {
        eigenvalues: spec.eigenvalues.iter().map(|&l| f(l)).collect(),
        eigenvectors: spec.eigenvectors,
    };
    Ok(mapped.reconstruct())
}

/// `ln ρ` with eigenvalues clamped below at [`LOG_CLAMP`].
pub fn log_density(rho: &DensityMatrix) -> ComplexMatrix {
    let spec = rho.spectrum();
    Spectrum {
        eigenvalues: spec
            .eigenvalues
            .iter()
            .map(|&l| l.max(LOG_CLAMP).ln())
            .collect(),
        eigenvectors: spec.eigenvectors,
    }
    .reconstruct()
}

/// `tr e^M` for Hermitian `M`.
pub fn trace_exp(m: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.eigenvalues.iter().map(|l| l.exp()).sum())
}

fn xlnx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy (nats) of a probability vector, with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlnx(x)).sum::<f64>()
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || (alpha - 1.0).abs() <= 1e-9 || !alpha.is_finite() {
        return Err(Error::Argument(format!(
            "Rényi order must be positive and different from 1, got {alpha}"
        )));
    }
    Ok(())
}

/// Classical Rényi entropy `ln(Σ p^α)/(1-α)` of a probability vector.
pub fn renyi_entropy_of(p: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(alpha)).sum();
    Ok(s.ln() / (1.0 - alpha))
}

/// `S(ρ) = -tr ρ ln ρ` in nats.
pub fn von_neumann_exact(rho: &DensityMatrix) -> f64 {
    let eig = rho.spectrum().eigenvalues;
    let s = shannon_entropy(&eig);
    // `+ 0.0` maps a clamped -0.0 to 0.0 so serialized outputs read "0".
    s.clamp(0.0, rho.n_qubits() as f64 * std::f64::consts::LN_2) + 0.0
}

/// `S_α(ρ) = ln tr ρ^α / (1-α)` in nats.
pub fn renyi_exact(rho: &DensityMatrix, alpha: f64) -> Result<f64> {
    // Eigenvalues at the solver's rounding floor count as zero; they would
    // otherwise dominate Σ λ^α for small α.
    let eig: Vec<f64> = rho
        .spectrum()
        .eigenvalues
        .into_iter()
        .map(|l| if l < EIG_FLOOR { 0.0 } else { l })
        .collect();
    let s = renyi_entropy_of(&eig, alpha)?;
    Ok(s.clamp(0.0, rho.n_qubits() as f64 * std::f64::consts::LN_2) + 0.0)
}

fn validate_keep(n: usize, keep: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &q in keep {
        if q >= n {
            return Err(Error::Argument(format!(
                "qubit index {q} out of range for {n} qubits"
            )));
        }
        if seen[q] {
            return Err(Error::Argument(format!("qubit index {q} repeated")));
        }
        seen[q] = true;
    }
    Ok(())
}

/// Table `full[a][t]` of full-register indices for kept-subsystem index `a`
/// and traced-subsystem index `t`. Output qubit `j` is `keep[j]`; traced
/// qubits keep their relative order.
fn index_table(n: usize, keep: &[usize]) -> Vec<Vec<usize>> {
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let k = keep.len();
    let m = traced.len();
    (0..1usize << k)
        .map(|a| {
            (0..1usize << m)
                .map(|t| {
                    let mut idx = 0usize;
                    for (j, &q) in keep.iter().enumerate() {
                        let bit = (a >> (k - 1 - j)) & 1;
                        idx |= bit << (n - 1 - q);
                    }
                    for (j, &q) in traced.iter().enumerate() {
                        let bit = (t >> (m - 1 - j)) & 1;
                        idx |= bit << (n - 1 - q);
                    }
                    idx
                })
                .collect()
        })
        .collect()
}

/// Reduction of a state onto a subset of its qubits.
pub trait PartialTrace {
    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix>;
}

impl PartialTrace for StateVector {
    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        validate_keep(self.n_qubits, keep)?;
        let table = index_table(self.n_qubits, keep);
        let rows = table.len();
        let cols = table[0].len();
        let psi = ComplexMatrix::from_fn(rows, cols, |a, t| self.amplitudes[table[a][t]]);
        Ok(DensityMatrix::from_parts(keep.len(), &psi * psi.adjoint()))
    }
}

impl PartialTrace for DensityMatrix {
    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        validate_keep(self.n_qubits, keep)?;
        let table = index_table(self.n_qubits, keep);
        let d = table.len();
        let m = ComplexMatrix::from_fn(d, d, |a, b| {
            table[a]
                .iter()
                .zip(&table[b])
                .map(|(&i, &j)| self.matrix[(i, j)])
                .sum()
        });
        Ok(DensityMatrix::from_parts(keep.len(), m))
    }
}

/// Random states and operators for property checks.
pub mod random {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    }

    /// Haar-random pure state.
    pub fn state_vector<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> StateVector {
        let d = 1usize << n_qubits;
        let v = DVector::from_fn(d, |_, _| gaussian(rng));
        StateVector::normalized(v).expect("gaussian vector is nonzero")
    }

    /// Ginibre-ensemble density matrix of the given rank (full rank when `None`).
    pub fn density_matrix<R: Rng + ?Sized>(
        n_qubits: usize,
        rank: Option<usize>,
        rng: &mut R,
    ) -> DensityMatrix {
        let d = 1usize << n_qubits;
        let r = rank.unwrap_or(d).clamp(1, d);
        let g = ComplexMatrix::from_fn(d, r, |_, _| gaussian(rng));
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        DensityMatrix::from_parts(n_qubits, m / C64::new(tr, 0.0))
    }

    /// Random Hermitian matrix with entries of typical size `scale`.
    pub fn hermitian<R: Rng + ?Sized>(n_qubits: usize, scale: f64, rng: &mut R) -> ComplexMatrix {
        let d = 1usize << n_qubits;
        let g = ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng));
        (&g + g.adjoint()) * C64::new(0.5 * scale, 0.0)
    }

    /// Probability vector drawn from a flat Dirichlet.
    pub fn distribution<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
        let w: Vec<f64> = (0..d)
            .map(|_| {
                let u: f64 = rand::RngExt::random::<f64>(rng);
                -(1.0 - u).ln()
            })
            .collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }
}
