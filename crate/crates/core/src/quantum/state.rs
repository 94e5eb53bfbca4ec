use std::fmt;

use nalgebra::DMatrix;

use super::{
    check_positions, MeasurementRecord, Observable, OutcomeSource, PauliOp, QuantumError, Result, C64, NORM_TOLERANCE,
    PROBABILITY_FLOOR,
};

/// Normalized amplitude vector over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// The all-zero basis state `|0...0>`.
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = C64::new(1.0, 0.0);
        StateVector { num_qubits, amps }
    }

    /// Basis state from a bit string, qubit 0 first.
    pub fn from_bits(bits: &[bool]) -> Self {
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Self::basis(bits.len(), index)
    }

    /// Validates length and normalization.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(QuantumError::BadLength(len));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(StateVector { num_qubits: len.trailing_zeros() as usize, amps })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(QuantumError::BadLength(len));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < PROBABILITY_FLOOR {
            return Err(QuantumError::NotNormalized(norm));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(StateVector { num_qubits: len.trailing_zeros() as usize, amps })
    }

    /// Single-qubit state `alpha|0> + beta|1>`, normalized.
    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::normalized(vec![alpha, beta])
    }

    /// Haar-random single-qubit pure state.
    pub fn haar_random_qubit<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        let theta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
        let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        let alpha = C64::new((theta / 2.0).cos(), 0.0);
        let beta = C64::from_polar((theta / 2.0).sin(), phi);
        StateVector { num_qubits: 1, amps: vec![alpha, beta] }
    }

    /// Tensor product of the given states in order (the first becomes qubit 0).
    pub fn product(states: &[StateVector]) -> Self {
        states.iter().fold(StateVector::zero(0), |acc, s| acc.tensor(s))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector { num_qubits: self.num_qubits + other.num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.num_qubits != other.num_qubits {
            return Err(QuantumError::DimensionMismatch(self.num_qubits, other.num_qubits));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    fn bit_weight(&self, position: usize) -> usize {
        1 << (self.num_qubits - 1 - position)
    }

    /// Applies a `2^k x 2^k` matrix to the qubits at `positions` without renormalizing.
    fn apply_raw(&self, matrix: &DMatrix<C64>, positions: &[usize]) -> Result<Vec<C64>> {
        check_positions(positions, self.num_qubits)?;
        let k = positions.len();
        let dim = 1usize << k;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QuantumError::ArityMismatch { expected: matrix.nrows().trailing_zeros() as usize, got: k });
        }
        let offsets: Vec<usize> = (0..dim)
            .map(|l| (0..k).filter(|&j| l & (1 << (k - 1 - j)) != 0).map(|j| self.bit_weight(positions[j])).sum())
            .collect();
        let mask: usize = positions.iter().map(|&p| self.bit_weight(p)).sum();
        Ok(match dim {
            2 => self.apply_small::<2>(matrix, &offsets, mask),
            4 => self.apply_small::<4>(matrix, &offsets, mask),
            _ => self.apply_general(matrix, &offsets, mask),
        })
    }

    // Projectors and Paulis are sparse, and so are registers with many
    // qubits in basis states; exact zeros are skipped on both sides.
    fn apply_general(&self, matrix: &DMatrix<C64>, offsets: &[usize], mask: usize) -> Vec<C64> {
        let dim = offsets.len();
        let rows: Vec<Vec<(usize, C64)>> = (0..dim)
            .map(|r| (0..dim).filter(|&c| matrix[(r, c)] != C64::new(0.0, 0.0)).map(|c| (c, matrix[(r, c)])).collect())
            .collect();
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        let mut local = vec![C64::new(0.0, 0.0); dim];
        for base in (0..self.amps.len()).filter(|i| i & mask == 0) {
            let mut any = false;
            for (l, off) in offsets.iter().enumerate() {
                local[l] = self.amps[base + off];
                any |= local[l] != C64::new(0.0, 0.0);
            }
            if !any {
                continue;
            }
            for (row, off) in rows.iter().zip(offsets) {
                out[base + off] = row.iter().map(|&(c, m)| m * local[c]).sum();
            }
        }
        out
    }

    /// [`Self::apply_general`] with the local blocks on the stack.
    fn apply_small<const D: usize>(&self, matrix: &DMatrix<C64>, offsets: &[usize], mask: usize) -> Vec<C64> {
        let zero = C64::new(0.0, 0.0);
        let offsets: [usize; D] = std::array::from_fn(|l| offsets[l]);
        let mut rows = [[(0usize, zero); D]; D];
        let mut lens = [0usize; D];
        for r in 0..D {
            for c in 0..D {
                if matrix[(r, c)] != zero {
                    rows[r][lens[r]] = (c, matrix[(r, c)]);
                    lens[r] += 1;
                }
            }
        }
        let mut out = vec![zero; self.amps.len()];
        for base in (0..self.amps.len()).filter(|i| i & mask == 0) {
            let local: [C64; D] = std::array::from_fn(|l| self.amps[base + offsets[l]]);
            if local.iter().all(|a| *a == zero) {
                continue;
            }
            for r in 0..D {
                out[base + offsets[r]] = rows[r][..lens[r]].iter().map(|&(c, m)| m * local[c]).sum();
            }
        }
        out
    }

    /// Applies a unitary to the qubits at `positions`; the result is renormalized.
    pub fn apply_local(&self, matrix: &DMatrix<C64>, positions: &[usize]) -> Result<StateVector> {
        Self::normalized(self.apply_raw(matrix, positions)?)
    }

    /// Applies a Pauli tensor. Used by test oracles and frame bookkeeping only.
    pub fn apply_pauli(&self, pauli: &PauliOp, positions: &[usize]) -> Result<StateVector> {
        if pauli.arity() != positions.len() {
            return Err(QuantumError::ArityMismatch { expected: pauli.arity(), got: positions.len() });
        }
        let amps = self.apply_raw(&pauli.matrix(), positions)?;
        Ok(StateVector { num_qubits: self.num_qubits, amps })
    }

    /// Rows indexed by the local basis of `positions`, columns by the rest.
    fn split_matrix(&self, positions: &[usize]) -> Result<DMatrix<C64>> {
        check_positions(positions, self.num_qubits)?;
        let k = positions.len();
        let rest: Vec<usize> = (0..self.num_qubits).filter(|p| !positions.contains(p)).collect();
        let mut m = DMatrix::zeros(1 << k, 1 << rest.len());
        for (i, a) in self.amps.iter().enumerate() {
            let pick =
                |ps: &[usize]| ps.iter().fold(0usize, |acc, &p| (acc << 1) | usize::from(i & self.bit_weight(p) != 0));
            m[(pick(positions), pick(&rest))] = *a;
        }
        Ok(m)
    }

    /// Reduced density matrix of the qubits at `positions`.
    pub fn reduced_density(&self, positions: &[usize]) -> Result<DMatrix<C64>> {
        let m = self.split_matrix(positions)?;
        Ok(&m * m.adjoint())
    }

    /// `Tr(rho^2)` of the reduced state on `positions`.
    pub fn subsystem_purity(&self, positions: &[usize]) -> Result<f64> {
        let rho = self.reduced_density(positions)?;
        Ok(rho.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn single_qubit_purity(&self, position: usize) -> Result<f64> {
        self.subsystem_purity(&[position])
    }

    /// Pure state of the qubits at `positions`, provided they are not entangled
    /// with the rest of the register.
    pub fn extract(&self, positions: &[usize]) -> Result<StateVector> {
        let purity = self.subsystem_purity(positions)?;
        if purity < 1.0 - 1e-9 {
            return Err(QuantumError::Entangled(purity));
        }
        let m = self.split_matrix(positions)?;
        let best = (0..m.ncols())
            .max_by(|&a, &b| m.column(a).norm_squared().total_cmp(&m.column(b).norm_squared()))
            .unwrap_or(0);
        Self::normalized(m.column(best).iter().copied().collect())
    }

    /// Moves the qubits at `positions` (in that order) to the front of the register.
    pub fn permute_to_front(&self, positions: &[usize]) -> Result<StateVector> {
        let m = self.split_matrix(positions)?;
        let (rows, cols) = m.shape();
        let amps = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect();
        Ok(StateVector { num_qubits: self.num_qubits, amps })
    }
}

impl fmt::Display for StateVector {
    /// Nonzero amplitudes as `(re+imi)|bits>` terms.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm() < 1e-9 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let bits: String =
                (0..self.num_qubits).map(|q| if i & self.bit_weight(q) != 0 { '1' } else { '0' }).collect();
            write!(f, "({:.6}{:+.6}i)|{}>", a.re, a.im, bits)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// One possible result of a measurement.
#[derive(Debug, Clone)]
pub struct DistributionEntry {
    pub eigenvalue: f64,
    pub probability: f64,
    pub state: StateVector,
}

fn check_arity(obs: &Observable, positions: &[usize]) -> Result<()> {
    if obs.arity() != positions.len() {
        return Err(QuantumError::ArityMismatch { expected: obs.arity(), got: positions.len() });
    }
    Ok(())
}

/// All outcomes of measuring `obs` at `positions` with probability at least
/// [`PROBABILITY_FLOOR`], in descending eigenvalue order.
pub fn outcome_distribution(
    state: &StateVector,
    obs: &Observable,
    positions: &[usize],
) -> Result<Vec<DistributionEntry>> {
    check_arity(obs, positions)?;
    check_positions(positions, state.num_qubits())?;
    let spectrum = obs.spectrum();
    let mut entries = Vec::with_capacity(spectrum.len());
    // The projectors sum to the identity, so the last image is what the
    // others leave behind.
    let mut rest = state.amps.clone();
    for (t, term) in spectrum.iter().enumerate() {
        let mut projected = if t + 1 == spectrum.len() {
            let mut r = std::mem::take(&mut rest);
            // Keep cancelled entries exactly zero so later projections stay sparse.
            r.iter_mut().filter(|a| a.norm_sqr() < 1e-30).for_each(|a| *a = C64::new(0.0, 0.0));
            r
        } else {
            let p = state.apply_raw(&term.projector, positions)?;
            rest.iter_mut().zip(&p).for_each(|(r, a)| *r -= a);
            p
        };
        let probability: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
        if probability < PROBABILITY_FLOOR {
            continue;
        }
        let scale = probability.sqrt().recip();
        projected.iter_mut().for_each(|a| *a *= scale);
        entries.push(DistributionEntry {
            eigenvalue: term.eigenvalue,
            probability,
            state: StateVector { num_qubits: state.num_qubits(), amps: projected },
        });
    }
    Ok(entries)
}

/// Measures `obs` at `positions`, drawing the outcome from `source`.
pub fn measure<S: OutcomeSource + ?Sized>(
    state: &StateVector,
    obs: &Observable,
    positions: &[usize],
    source: &mut S,
) -> Result<(MeasurementRecord, StateVector)> {
    let mut entries = outcome_distribution(state, obs, positions)?;
    let eigenvalues: Vec<f64> = entries.iter().map(|e| e.eigenvalue).collect();
    let probabilities: Vec<f64> = entries.iter().map(|e| e.probability).collect();
    let k = source.pick(&eigenvalues, &probabilities)?;
    let entry = entries.swap_remove(k);
    let record = MeasurementRecord {
        observable_name: obs.name().to_string(),
        positions: positions.to_vec(),
        outcome: entry.eigenvalue,
        probability: entry.probability,
    };
    Ok((record, entry.state))
}

/// `|<a|b>|`, which is 1 exactly when the states agree up to a global phase.
pub fn fidelity_up_to_global_phase(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}
