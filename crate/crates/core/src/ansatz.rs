//! Layered hardware-efficient ansatz, its outcome distribution, and shot sampling.
//!
//! Each layer rotates every qubit with `R_Y`, applies `CZ` on a set of
//! disjoint neighbouring pairs, and rotates every qubit again, so one layer
//! consumes `2n` angles laid out as `[pre_0 .. pre_{n-1}, post_0 .. post_{n-1}]`.
//! A pair therefore sees the block `(R_Y ⊗ R_Y) CZ (R_Y ⊗ R_Y)`. Even layers
//! pair `(0,1), (2,3), …`; odd layers pair `(1,2), (3,4), …` and, for even
//! `n`, close the ring with `(n-1, 0)`. With odd `n` one qubit per layer has
//! no partner and only receives its two rotations.

use std::fmt;

use nalgebra::DMatrix;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{ComplexMatrix, DensityMatrix, StateVector, C64};
use crate::seed::rng_from;

/// Angles of the layered ansatz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    n_qubits: usize,
    n_layers: usize,
    angles: Vec<f64>,
}

impl CircuitParams {
    pub fn new(n_qubits: usize, n_layers: usize, angles: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Argument("circuit needs at least one qubit".into()));
        }
        let want = Self::param_count(n_qubits, n_layers);
        if angles.len() != want {
            return Err(Error::Argument(format!(
                "expected {want} angles for {n_qubits} qubits x {n_layers} layers, got {}",
                angles.len()
            )));
        }
        Ok(Self {
            n_qubits,
            n_layers,
            angles,
        })
    }

    pub fn zeros(n_qubits: usize, n_layers: usize) -> Self {
        Self {
            n_qubits,
            n_layers,
            angles: vec![0.0; Self::param_count(n_qubits, n_layers)],
        }
    }

    /// Angles drawn uniformly from `[0, 2π)`.
    pub fn random(n_qubits: usize, n_layers: usize, seed: u64) -> Self {
        use rand::RngExt;
        let mut rng = rng_from(seed);
        let angles = (0..Self::param_count(n_qubits, n_layers))
            .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
            .collect();
        Self {
            n_qubits,
            n_layers,
            angles,
        }
    }

    pub fn param_count(n_qubits: usize, n_layers: usize) -> usize {
        2 * n_qubits * n_layers
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Copy with angle `k` shifted by `delta`.
    pub fn perturbed(&self, k: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.angles[k] += delta;
        out
    }

    /// In-place `θ ← θ - step · grad`.
    pub fn descend(&mut self, grad: &[f64], step: f64) {
        for (a, g) in self.angles.iter_mut().zip(grad) {
            *a -= step * g;
        }
    }
}

/// Qubit pairs entangled by `CZ` in layer `layer`.
pub fn layer_pairs(n_qubits: usize, layer: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let start = layer % 2;
    let mut q = start;
    while q + 1 < n_qubits {
        pairs.push((q, q + 1));
        q += 2;
    }
    if start == 1 && n_qubits.is_multiple_of(2) {
        pairs.push((n_qubits - 1, 0));
    }
    pairs
}

fn apply_ry(m: &mut DMatrix<f64>, n: usize, qubit: usize, theta: f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    if s == 0.0 && c == 1.0 {
        return;
    }
    let mask = 1usize << (n - 1 - qubit);
    let dim = m.nrows();
    for j in 0..m.ncols() {
        let mut col = m.column_mut(j);
        for i0 in (0..dim).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            let (a, b) = (col[i0], col[i1]);
            col[i0] = c * a - s * b;
            col[i1] = s * a + c * b;
        }
    }
}

fn apply_cz(m: &mut DMatrix<f64>, n: usize, a: usize, b: usize) {
    let mask = (1usize << (n - 1 - a)) | (1usize << (n - 1 - b));
    for i in (0..m.nrows()).filter(|i| i & mask == mask) {
        m.row_mut(i).neg_mut();
    }
}

/// The circuit unitary `V(Θ)`; real because `R_Y` and `CZ` are real.
pub fn circuit_matrix(params: &CircuitParams) -> DMatrix<f64> {
    let n = params.n_qubits;
    let dim = 1usize << n;
    let mut v = DMatrix::<f64>::identity(dim, dim);
    for layer in 0..params.n_layers {
        let base = layer * 2 * n;
        for q in 0..n {
            apply_ry(&mut v, n, q, params.angles[base + q]);
        }
        for (a, b) in layer_pairs(n, layer) {
            apply_cz(&mut v, n, a, b);
        }
        for q in 0..n {
            apply_ry(&mut v, n, q, params.angles[base + n + q]);
        }
    }
    v
}

pub fn circuit_unitary(params: &CircuitParams) -> ComplexMatrix {
    circuit_matrix(params).map(|x| C64::new(x, 0.0))
}

fn check_width(rho: &DensityMatrix, params: &CircuitParams) -> Result<()> {
    if rho.n_qubits() != params.n_qubits {
        return Err(Error::Argument(format!(
            "state has {} qubits but circuit has {}",
            rho.n_qubits(),
            params.n_qubits
        )));
    }
    Ok(())
}

/// `V ρ V†`.
pub fn apply_circuit(rho: &DensityMatrix, params: &CircuitParams) -> Result<DensityMatrix> {
    check_width(rho, params)?;
    let v = circuit_unitary(params);
    let out = &v * rho.matrix() * v.adjoint();
    Ok(DensityMatrix::from_parts(rho.n_qubits(), out))
}

/// Candidate eigenvector `V† |s⟩`.
pub fn conjugate_column(params: &CircuitParams, s: &BitString) -> Result<StateVector> {
    if s.n_qubits() != params.n_qubits {
        return Err(Error::Argument("bit string width does not match circuit".into()));
    }
    let v = circuit_matrix(params);
    let row = v.row(s.index()).transpose().map(|x| C64::new(x, 0.0));
    StateVector::normalized(row)
}

/// Computational-basis outcome probabilities `⟨s|V ρ V†|s⟩`.
pub fn outcome_distribution(rho: &DensityMatrix, params: &CircuitParams) -> Result<Vec<f64>> {
    check_width(rho, params)?;
    let v = circuit_unitary(params);
    let vr = &v * rho.matrix();
    let dim = rho.dim();
    Ok((0..dim)
        .map(|i| {
            let p: f64 = (0..dim).map(|k| (vr[(i, k)] * v[(i, k)].conj()).re).sum();
            p.max(0.0)
        })
        .collect())
}

/// A measurement outcome on `n` qubits; qubit 0 is the most significant bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitString {
    n_qubits: usize,
    index: usize,
}

impl BitString {
    pub fn new(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits >= usize::BITS as usize || index >= (1usize << n_qubits) {
            return Err(Error::Argument(format!(
                "index {index} does not fit in {n_qubits} bits"
            )));
        }
        Ok(Self { n_qubits, index })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut index = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(Error::Argument(format!("bit value {b} is not 0 or 1")));
            }
            index = (index << 1) | b as usize;
        }
        Self::new(bits.len(), index)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn bit(&self, qubit: usize) -> u8 {
        ((self.index >> (self.n_qubits - 1 - qubit)) & 1) as u8
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.n_qubits).map(|q| self.bit(q)).collect()
    }

    /// Number of 1 bits.
    pub fn weight(&self) -> u32 {
        self.index.count_ones()
    }

    pub fn all(n_qubits: usize) -> impl Iterator<Item = BitString> {
        (0..1usize << n_qubits).map(move |index| BitString { n_qubits, index })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Multiset of sampled bit strings, stored as dense counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSet {
    n_qubits: usize,
    counts: Vec<u64>,
    total: u64,
}

impl ShotSet {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let n_qubits = crate::quantum::dim_to_qubits(counts.len())?;
        let total = counts.iter().sum();
        Ok(Self {
            n_qubits,
            counts,
            total,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, s: &BitString) -> u64 {
        self.counts[s.index()]
    }

    /// Observed strings with nonzero counts, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (BitString, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| {
                (
                    BitString {
                        n_qubits: self.n_qubits,
                        index: i,
                    },
                    c,
                )
            })
    }

    /// Empirical distribution `N_i / N_s` over all `2^n` strings.
    pub fn frequencies(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// Every shot as a string index, grouped by index.
    pub fn expand(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
            .collect()
    }

    /// The `m` most frequent strings; ties go to the lower index.
    pub fn most_frequent(&self, m: usize) -> Vec<BitString> {
        let mut idx: Vec<usize> = (0..self.counts.len()).collect();
        idx.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        idx.into_iter()
            .take(m)
            .map(|index| BitString {
                n_qubits: self.n_qubits,
                index,
            })
            .collect()
    }
}

/// Check that `dist` is a probability vector over `2^n` outcomes.
pub fn validate_distribution(dist: &[f64]) -> Result<usize> {
    let n = crate::quantum::dim_to_qubits(dist.len())?;
    if dist.iter().any(|&p| !p.is_finite() || p < -1e-12) {
        return Err(Error::Validation("distribution has a negative or non-finite entry".into()));
    }
    let s: f64 = dist.iter().sum();
    if (s - 1.0).abs() > 1e-8 {
        return Err(Error::Validation(format!("distribution sums to {s}, not 1")));
    }
    Ok(n)
}

/// Multinomial sample of `n_shots` outcomes, drawn as a chain of conditional binomials.
pub fn sample_shots(dist: &[f64], n_shots: u64, seed: u64) -> Result<ShotSet> {
    let n_qubits = validate_distribution(dist)?;
    if n_shots == 0 {
        return Err(Error::Argument("need at least one shot".into()));
    }
    let mut rng = rng_from(seed);
    let mut counts = vec![0u64; dist.len()];
    let mut left = n_shots;
    let mut mass: f64 = dist.iter().map(|p| p.max(0.0)).sum();
    for (i, &p) in dist.iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p.max(0.0);
        if i + 1 == dist.len() {
            counts[i] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if q >= 1.0 {
            left
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(left, q)
                .map_err(|e| Error::Validation(e.to_string()))?
                .sample(&mut rng)
        };
        counts[i] = k;
        left -= k;
        mass -= p;
    }
    Ok(ShotSet {
        n_qubits,
        counts,
        total: n_shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::random;
    use crate::seed::rng_from;
    use std::f64::consts::PI;

    #[test]
    fn layer_layout() {
        assert_eq!(layer_pairs(2, 0), vec![(0, 1)]);
        assert_eq!(layer_pairs(2, 1), vec![(1, 0)]);
        assert_eq!(layer_pairs(4, 1), vec![(1, 2), (3, 0)]);
        assert_eq!(layer_pairs(3, 0), vec![(0, 1)]);
        assert_eq!(layer_pairs(3, 1), vec![(1, 2)]);
        assert_eq!(CircuitParams::param_count(3, 8), 48);
    }

    #[test]
    fn param_length_is_checked() {
        assert!(CircuitParams::new(2, 1, vec![0.0; 3]).is_err());
        assert!(CircuitParams::new(2, 1, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn zero_angles_leave_all_zero_state() {
        let rho = StateVector::basis(3, 0).unwrap().to_density();
        let out = apply_circuit(&rho, &CircuitParams::zeros(3, 4)).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-14);
        let dist = outcome_distribution(&rho, &CircuitParams::zeros(3, 4)).unwrap();
        assert!((dist[0] - 1.0).abs() < 1e-14);
    }

    /// Explicit 4x4 product for one layer on two qubits.
    fn two_qubit_layer(a: [f64; 4]) -> DMatrix<f64> {
        let ry = |t: f64| {
            let (s, c) = (t / 2.0).sin_cos();
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
        };
        let cz = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
        ry(a[2]).kronecker(&ry(a[3])) * cz * ry(a[0]).kronecker(&ry(a[1]))
    }

    #[test]
    fn pi_rotation_on_first_qubit_gives_10() {
        let p = CircuitParams::new(2, 1, vec![PI, 0.0, 0.0, 0.0]).unwrap();
        let rho = StateVector::basis(2, 0).unwrap().to_density();
        let dist = outcome_distribution(&rho, &p).unwrap();
        assert!((dist[0b10] - 1.0).abs() < 1e-14);
        let oracle = two_qubit_layer([PI, 0.0, 0.0, 0.0]);
        assert!((circuit_matrix(&p) - oracle).norm() < 1e-14);
    }

    #[test]
    fn composition_of_two_layers_matches_explicit_product() {
        let a = [0.3, -1.2, 2.0, 0.7];
        let b = [1.1, 0.4, -0.5, 2.9];
        let mut angles = a.to_vec();
        angles.extend_from_slice(&b);
        let p = CircuitParams::new(2, 2, angles).unwrap();
        // The odd layer pairs (1, 0), which is the same CZ.
        let oracle = two_qubit_layer(b) * two_qubit_layer(a);
        assert!((circuit_matrix(&p) - oracle).norm() < 1e-12);
    }

    #[test]
    fn unitary_and_spectrum_preserving() {
        let mut rng = rng_from(1);
        for seed in 0..5 {
            let p = CircuitParams::random(3, 3, seed);
            let v = circuit_matrix(&p);
            assert!((v.transpose() * &v - DMatrix::identity(8, 8)).norm() < 1e-12);
            let rho = random::density_matrix(3, None, &mut rng);
            let out = apply_circuit(&rho, &p).unwrap();
            for (x, y) in rho.spectrum().eigenvalues.iter().zip(out.spectrum().eigenvalues) {
                assert!((x - y).abs() < 1e-10);
            }
            assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn conjugate_columns_are_orthonormal() {
        let p = CircuitParams::random(3, 2, 9);
        let cols: Vec<StateVector> = BitString::all(3)
            .map(|s| conjugate_column(&p, &s).unwrap())
            .collect();
        for (i, a) in cols.iter().enumerate() {
            for (j, b) in cols.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b).norm() - want).abs() < 1e-10);
            }
        }
        let zero = conjugate_column(&CircuitParams::zeros(3, 2), &BitString::new(3, 0).unwrap()).unwrap();
        assert!((zero.amplitudes()[0].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distribution_matches_triple_product_and_mixed_is_uniform() {
        let mut rng = rng_from(4);
        let rho = random::density_matrix(3, Some(2), &mut rng);
        let p = CircuitParams::random(3, 2, 77);
        let v = circuit_unitary(&p);
        let full = &v * rho.matrix() * v.adjoint();
        let dist = outcome_distribution(&rho, &p).unwrap();
        for (i, d) in dist.iter().enumerate() {
            assert!((full[(i, i)].re - d).abs() < 1e-12);
        }
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-10);

        let mm = DensityMatrix::maximally_mixed(3);
        for d in outcome_distribution(&mm, &p).unwrap() {
            assert!((d - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            apply_circuit(&rho, &CircuitParams::zeros(3, 1)),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn bitstring_big_endian() {
        let s = BitString::from_bits(&[1, 0, 1]).unwrap();
        assert_eq!(s.index(), 5);
        assert_eq!(s.bit(0), 1);
        assert_eq!(s.to_string(), "101");
        assert!(BitString::new(2, 4).is_err());
    }

    #[test]
    fn deterministic_point_mass_sampling() {
        let s = sample_shots(&[1.0, 0.0, 0.0, 0.0], 100, 3).unwrap();
        assert_eq!(s.counts(), &[100, 0, 0, 0]);
        let a = sample_shots(&[0.1, 0.2, 0.3, 0.4], 1000, 42).unwrap();
        let b = sample_shots(&[0.1, 0.2, 0.3, 0.4], 1000, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 1000);
        assert_eq!(a.counts().iter().sum::<u64>(), 1000);
    }

    #[test]
    fn uniform_sampling_within_five_sigma() {
        let s = sample_shots(&[0.25; 4], 40_000, 8).unwrap();
        let sigma = (40_000.0f64 * 0.25 * 0.75).sqrt();
        for &c in s.counts() {
            assert!((c as f64 - 10_000.0).abs() < 5.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn sampling_rejects_bad_distributions() {
        assert!(matches!(sample_shots(&[0.5, 0.4], 10, 0), Err(Error::Validation(_))));
        assert!(sample_shots(&[0.5, 0.5, 0.0], 10, 0).is_err());
        assert!(sample_shots(&[0.5, 0.5], 0, 0).is_err());
    }

    #[test]
    fn most_frequent_breaks_ties_by_index() {
        let s = ShotSet::from_counts(vec![3, 5, 5, 0]).unwrap();
        let top: Vec<usize> = s.most_frequent(3).iter().map(|b| b.index()).collect();
        assert_eq!(top, vec![1, 2, 0]);
    }
}
