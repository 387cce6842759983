use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu as FaerLu};
use faer::{Mat, Side};
use sprs::CsMat;

use crate::error::{Error, Result};
use crate::sparse::to_faer;

/// Sparse Cholesky factorization `A = L Lᵀ`.
pub struct Cholesky {
    factor: Llt<usize, f64>,
    n: usize,
}

impl Cholesky {
    pub fn factor(a: &CsMat<f64>) -> Result<Self> {
        let m = to_faer(a);
        let factor = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Solver(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(Self { factor, n: a.rows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.factor.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Sparse LU factorization with partial pivoting, for indefinite systems.
pub struct Lu {
    factor: FaerLu<usize, f64>,
    n: usize,
}

impl Lu {
    pub fn factor(a: &CsMat<f64>) -> Result<Self> {
        let m = to_faer(a);
        let factor = m.sp_lu().map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))?;
        Ok(Self { factor, n: a.rows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.factor.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}
