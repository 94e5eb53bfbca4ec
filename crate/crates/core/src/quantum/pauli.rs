use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::{QuantumError, C64};

/// Single-qubit Pauli operator, stored as its (x, z) bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Pauli {
    #[default]
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn x_bit(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn z_bit(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    /// Product up to phase; the Pauli classes form the group Z2 x Z2.
    pub fn class_mul(self, other: Pauli) -> Pauli {
        Pauli::from_bits(self.x_bit() ^ other.x_bit(), self.z_bit() ^ other.z_bit())
    }

    /// Exact product `self * other` as `(i^k, P)`.
    pub fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }

    pub fn commutes_with(self, other: Pauli) -> bool {
        self == Pauli::I || other == Pauli::I || self == other
    }

    /// Conjugation by the Hadamard gate (X and Z swap).
    pub fn hadamard_conjugate(self) -> Pauli {
        Pauli::from_bits(self.z_bit(), self.x_bit())
    }

    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Tensor product of Pauli matrices with a global phase `i^phase`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliOp {
    labels: Vec<Pauli>,
    phase: u8,
}

impl PauliOp {
    pub fn new(labels: Vec<Pauli>, phase: u8) -> Self {
        PauliOp { labels, phase: phase % 4 }
    }

    pub fn identity(arity: usize) -> Self {
        PauliOp::new(vec![Pauli::I; arity], 0)
    }

    pub fn single(p: Pauli) -> Self {
        PauliOp::new(vec![p], 0)
    }

    pub fn arity(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Pauli] {
        &self.labels
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.labels.iter().all(|&p| p == Pauli::I)
    }

    /// Operator product `self * other`; both must have the same arity.
    pub fn mul(&self, other: &PauliOp) -> PauliOp {
        assert_eq!(self.arity(), other.arity(), "Pauli arity mismatch");
        let mut phase = self.phase + other.phase;
        let labels = self
            .labels
            .iter()
            .zip(&other.labels)
            .map(|(&a, &b)| {
                let (k, p) = a.mul(b);
                phase += k;
                p
            })
            .collect();
        PauliOp::new(labels, phase)
    }

    /// Hermitian adjoint (Pauli tensors are Hermitian, so only the phase changes).
    pub fn adjoint(&self) -> PauliOp {
        PauliOp::new(self.labels.clone(), (4 - self.phase) % 4)
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &PauliOp) -> PauliOp {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        PauliOp::new(labels, self.phase + other.phase)
    }

    /// Matrix transpose: only `Y` is antisymmetric, so each `Y` flips the sign.
    pub fn transpose(&self) -> PauliOp {
        let ys = self.labels.iter().filter(|&&p| p == Pauli::Y).count() as u8;
        PauliOp::new(self.labels.clone(), self.phase + 2 * (ys % 2))
    }

    pub fn commutes_with(&self, other: &PauliOp) -> bool {
        let anti = self.labels.iter().zip(&other.labels).filter(|(a, b)| !a.commutes_with(**b)).count();
        anti % 2 == 0
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for p in &self.labels {
            let a = p.matrix();
            let local = DMatrix::from_fn(2, 2, |r, c| a[r][c]);
            m = m.kronecker(&local);
        }
        let scale = match self.phase {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        m * scale
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["", "i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}")?;
        for p in &self.labels {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliOp {
    type Err = QuantumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (phase, body) = if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix('i') {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else {
            (0, s.strip_prefix('+').unwrap_or(s))
        };
        let labels: Option<Vec<Pauli>> = body.chars().map(Pauli::from_symbol).collect();
        match labels {
            Some(l) if !l.is_empty() => Ok(PauliOp::new(l, phase)),
            _ => Err(QuantumError::UnknownObservable(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_close(a: &DMatrix<C64>, b: &DMatrix<C64>) -> bool {
        (a - b).iter().all(|z| z.norm() < 1e-14)
    }

    #[test]
    fn group_laws() {
        let x = PauliOp::single(Pauli::X);
        let y = PauliOp::single(Pauli::Y);
        assert!(x.mul(&x).is_identity_up_to_phase());
        assert_eq!(x.mul(&x).phase(), 0);
        assert_eq!(x.mul(&y), "iZ".parse().unwrap());
        assert_eq!(y.mul(&x), "-iZ".parse().unwrap());
    }

    #[test]
    fn table_matches_dense_products() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                for c in Pauli::ALL {
                    for d in Pauli::ALL {
                        let p = PauliOp::new(vec![a, b], 1);
                        let q = PauliOp::new(vec![c, d], 2);
                        assert!(dense_close(&p.mul(&q).matrix(), &(p.matrix() * q.matrix())));
                        assert!(dense_close(&p.transpose().matrix(), &p.matrix().transpose()));
                        let commute = dense_close(&(p.matrix() * q.matrix()), &(q.matrix() * p.matrix()));
                        assert_eq!(commute, p.commutes_with(&q));
                    }
                }
            }
        }
    }

    #[test]
    fn class_product_ignores_phase() {
        assert_eq!(Pauli::X.class_mul(Pauli::Z), Pauli::Y);
        assert_eq!(Pauli::Y.class_mul(Pauli::Y), Pauli::I);
        assert_eq!(Pauli::X.hadamard_conjugate(), Pauli::Z);
        assert_eq!(Pauli::Y.hadamard_conjugate(), Pauli::Y);
    }

    #[test]
    fn parse_and_display() {
        let p: PauliOp = "-iXZ".parse().unwrap();
        assert_eq!(p.to_string(), "-iXZ");
        assert!("XQ".parse::<PauliOp>().is_err());
        assert!("".parse::<PauliOp>().is_err());
    }
}
