use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::eigen::hermitian_eigenvalues;
use crate::error::{invalid, Error, Result};

/// Density matrix in the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Wraps a square matrix. No positivity or trace check is made here; see
    /// [`DensityMatrix::validate`].
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                found: data.ncols(),
            });
        }
        Ok(Self { data })
    }

    pub fn from_pure(psi: &DVector<Complex64>) -> Self {
        Self {
            data: psi * psi.adjoint(),
        }
    }

    /// Diagonal state with the given Dicke-basis populations.
    pub fn from_populations(p: &[f64]) -> Self {
        let diag = DVector::from_iterator(p.len(), p.iter().map(|&x| Complex64::new(x, 0.0)));
        Self {
            data: DMatrix::from_diagonal(&diag),
        }
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_populations(&vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.data.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.data[(r, c)] - self.data[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.data)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Expectation value of a real symmetric observable.
    pub fn expectation(&self, op: &DMatrix<f64>) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                acc += op[(r, c)] * self.data[(c, r)].re;
            }
        }
        acc
    }

    /// Checks the invariants: Hermitian to `1e-10`, unit trace to `1e-8` and
    /// minimum eigenvalue above `-1e-7`.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(invalid(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(invalid(format!("density matrix trace {tr}")));
        }
        let min = self.min_eigenvalue()?;
        if min < -1e-7 {
            return Err(invalid(format!("density matrix min eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Operator (spectral) norm of `self - other`.
    pub fn distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.data - &other.data;
        let ev = hermitian_eigenvalues(&diff)?;
        Ok(ev.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_state_invariants() {
        let psi = DVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let rho = DensityMatrix::from_pure(&psi);
        rho.validate().unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        let ev = rho.eigenvalues().unwrap();
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distance_between_orthogonal_projectors() {
        let a = DensityMatrix::from_populations(&[1.0, 0.0]);
        let b = DensityMatrix::from_populations(&[0.0, 1.0]);
        assert!((a.distance(&b).unwrap() - 1.0).abs() < 1e-14);
        assert!(DensityMatrix::maximally_mixed(3).distance(&a).is_err());
    }

    #[test]
    fn validate_catches_bad_trace() {
        let rho = DensityMatrix::from_populations(&[0.7, 0.7]);
        assert!(rho.validate().is_err());
    }
}
