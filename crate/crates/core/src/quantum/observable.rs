use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use super::{PauliOp, QuantumError, Result, C64, EIGENVALUE_MERGE_TOLERANCE, NORM_TOLERANCE};

/// One term `(m, P_m)` of a spectral decomposition.
#[derive(Debug, Clone)]
pub struct SpectralProjector {
    pub eigenvalue: f64,
    pub projector: DMatrix<C64>,
}

/// A Hermitian operator on `arity` qubits together with its spectral decomposition.
#[derive(Debug, Clone)]
pub struct Observable {
    name: String,
    arity: usize,
    matrix: DMatrix<C64>,
    spectrum: Vec<SpectralProjector>,
}

impl Observable {
    pub fn new(name: impl Into<String>, matrix: DMatrix<C64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols || !rows.is_power_of_two() || rows < 2 {
            return Err(QuantumError::BadShape { rows, cols });
        }
        let arity = rows.trailing_zeros() as usize;
        let spectrum = spectral_decompose(&matrix)?;
        Ok(Observable { name: name.into(), arity, matrix, spectrum })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Terms sorted by descending eigenvalue.
    pub fn spectrum(&self) -> &[SpectralProjector] {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum.iter().map(|s| s.eigenvalue).collect()
    }

    pub fn has_eigenvalue(&self, value: f64) -> bool {
        self.spectrum.iter().any(|s| (s.eigenvalue - value).abs() <= EIGENVALUE_MERGE_TOLERANCE)
    }
}

/// Decomposes a Hermitian matrix into `(eigenvalue, projector)` pairs.
///
/// Eigenvalues within [`EIGENVALUE_MERGE_TOLERANCE`] of each other share one
/// projector; the result is sorted by descending eigenvalue. Eigenvalues that
/// are numerically integral are snapped to the integer.
pub fn spectral_decompose(matrix: &DMatrix<C64>) -> Result<Vec<SpectralProjector>> {
    let (rows, cols) = matrix.shape();
    if rows != cols || rows == 0 {
        return Err(QuantumError::BadShape { rows, cols });
    }
    let deviation = (matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if deviation > NORM_TOLERANCE {
        return Err(QuantumError::NotHermitian(deviation));
    }

    let eigen = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let mut groups: Vec<(Vec<f64>, DMatrix<C64>)> = Vec::new();
    for k in order {
        let value = eigen.eigenvalues[k];
        let v = eigen.eigenvectors.column(k);
        let outer = v * v.adjoint();
        match groups.last_mut() {
            Some((values, proj)) if (values[0] - value).abs() <= EIGENVALUE_MERGE_TOLERANCE => {
                values.push(value);
                *proj += outer;
            }
            _ => groups.push((vec![value], outer)),
        }
    }

    Ok(groups
        .into_iter()
        .map(|(values, projector)| {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let eigenvalue =
                if (mean - mean.round()).abs() <= EIGENVALUE_MERGE_TOLERANCE { mean.round() } else { mean };
            SpectralProjector { eigenvalue, projector }
        })
        .collect())
}

fn rotated_sum(rotated_first: bool) -> DMatrix<C64> {
    let x: PauliOp = "XX".parse().unwrap();
    let y: PauliOp = if rotated_first { "YX" } else { "XY" }.parse().unwrap();
    (x.matrix() + y.matrix()) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// Builds one of the recognised observables.
///
/// Accepted names are Pauli tensor strings of length one or two over
/// `I, X, Y, Z` (`"Z"`, `"XI"`, `"ZZ"`, ...) and the two non-Pauli observables
/// `"XX+YX"` = (X⊗X + Y⊗X)/√2 and `"XX+XY"` = (X⊗X + X⊗Y)/√2.
pub fn builtin_observable(name: &str) -> Result<Observable> {
    let matrix = match name {
        "XX+YX" => rotated_sum(true),
        "XX+XY" => rotated_sum(false),
        _ => {
            let valid = (1..=2).contains(&name.len()) && name.chars().all(|c| "IXYZ".contains(c));
            if !valid {
                return Err(QuantumError::UnknownObservable(name.to_string()));
            }
            name.parse::<PauliOp>()?.matrix()
        }
    };
    Observable::new(name, matrix)
}

/// Cached, shareable variant of [`builtin_observable`].
pub fn shared_observable(name: &str) -> Result<Arc<Observable>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<Observable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(obs) = cache.lock().unwrap().get(name) {
        return Ok(obs.clone());
    }
    let obs = Arc::new(builtin_observable(name)?);
    cache.lock().unwrap().insert(name.to_string(), obs.clone());
    Ok(obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check_projector_algebra(obs: &Observable) {
        let dim = obs.matrix().nrows();
        let id = DMatrix::<C64>::identity(dim, dim);
        let mut sum = DMatrix::<C64>::zeros(dim, dim);
        let mut recon = DMatrix::<C64>::zeros(dim, dim);
        for (a, pa) in obs.spectrum().iter().enumerate() {
            sum += &pa.projector;
            recon += &pa.projector * C64::new(pa.eigenvalue, 0.0);
            assert!(max_abs(&(&pa.projector - pa.projector.adjoint())) < 1e-10);
            for (b, pb) in obs.spectrum().iter().enumerate() {
                let prod = &pa.projector * &pb.projector;
                let expected = if a == b { pa.projector.clone() } else { DMatrix::zeros(dim, dim) };
                assert!(max_abs(&(prod - expected)) < 1e-10, "{} projectors {a},{b}", obs.name());
            }
        }
        assert!(max_abs(&(sum - id)) < 1e-10);
        assert!(max_abs(&(recon - obs.matrix())) < 1e-10);
    }

    #[test]
    fn z_is_diagonal() {
        let z = builtin_observable("Z").unwrap();
        assert_eq!(z.eigenvalues(), vec![1.0, -1.0]);
        assert!((z.spectrum()[0].projector[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((z.spectrum()[1].projector[(1, 1)] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotated_observables_have_rank_two_projectors() {
        for name in ["XX+YX", "XX+XY"] {
            let obs = builtin_observable(name).unwrap();
            assert_eq!(obs.arity(), 2);
            assert_eq!(obs.eigenvalues(), vec![1.0, -1.0]);
            for term in obs.spectrum() {
                let trace: C64 = term.projector.diagonal().iter().sum();
                assert!((trace.re - 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn x_tensor_identity() {
        let obs = builtin_observable("XI").unwrap();
        let half = C64::new(0.5, 0.0);
        let plus = (PauliOp::identity(1).matrix() + PauliOp::single(crate::quantum::Pauli::X).matrix()) * half;
        let expected = plus.kronecker(&DMatrix::identity(2, 2));
        assert!(max_abs(&(&obs.spectrum()[0].projector - expected)) < 1e-10);
    }

    #[test]
    fn zz_and_identity_decompositions() {
        let zz = builtin_observable("ZZ").unwrap();
        let diag: Vec<f64> = zz.spectrum()[0].projector.diagonal().iter().map(|z| z.re).collect();
        assert!(diag.iter().zip([1.0, 0.0, 0.0, 1.0]).all(|(a, b)| (a - b).abs() < 1e-12));
        let id = spectral_decompose(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(id.len(), 1);
        assert_eq!(id[0].eigenvalue, 1.0);
    }

    #[test]
    fn projector_algebra_for_all_builtins() {
        let mut names = vec!["XX+YX".to_string(), "XX+XY".to_string()];
        for a in "IXYZ".chars() {
            names.push(a.to_string());
            for b in "IXYZ".chars() {
                names.push(format!("{a}{b}"));
            }
        }
        for name in names {
            check_projector_algebra(&builtin_observable(&name).unwrap());
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(builtin_observable("XYZ"), Err(QuantumError::UnknownObservable(_))));
        assert!(matches!(builtin_observable("Q"), Err(QuantumError::UnknownObservable(_))));
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(spectral_decompose(&m), Err(QuantumError::NotHermitian(_))));
    }
}
