//! Linear solvers: Jacobi-preconditioned conjugate gradients and sparse
//! direct factorizations.

mod cg;
mod direct;

pub use cg::{pcg, pcg_with, CgOutcome};
pub use direct::{Cholesky, Lu};

use sprs::CsMat;

use crate::error::{Error, Result};
use crate::sparse::{diagonal, submatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Direct factorization up to `direct_limit` unknowns, CG above.
    Auto,
    Cg,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolverConfig {
    pub method: SolverMethod,
    /// Relative residual target of the iterative solver.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub direct_limit: usize,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        Self { method: SolverMethod::Auto, rel_tol: 1e-12, max_iter: 50_000, direct_limit: 20_000 }
    }
}

impl LinearSolverConfig {
    pub fn direct() -> Self {
        Self { method: SolverMethod::Direct, ..Self::default() }
    }

    pub fn cg() -> Self {
        Self { method: SolverMethod::Cg, ..Self::default() }
    }

    fn use_direct(&self, n: usize) -> bool {
        match self.method {
            SolverMethod::Direct => true,
            SolverMethod::Cg => false,
            SolverMethod::Auto => n <= self.direct_limit,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

enum Kind {
    Direct(Cholesky),
    Cg { a: CsMat<f64>, diag: Vec<f64>, rel_tol: f64, max_iter: usize },
}

/// Solver for a symmetric positive (semi)definite matrix.
///
/// With `ground` set, the first unknown is fixed to zero, which makes a
/// matrix whose kernel is the constants invertible.
pub struct SpdSolver {
    kind: Kind,
    n: usize,
    ground: bool,
}

impl SpdSolver {
    pub fn new(a: &CsMat<f64>, cfg: &LinearSolverConfig, ground: bool) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::Solver("matrix is not square".into()));
        }
        let reduced = if ground && n > 0 {
            let keep: Vec<usize> = (1..n).collect();
            submatrix(a, &keep, &keep)
        } else {
            a.clone()
        };
        let kind = if reduced.rows() == 0 {
            Kind::Cg { a: reduced, diag: Vec::new(), rel_tol: cfg.rel_tol, max_iter: cfg.max_iter }
        } else if cfg.use_direct(reduced.rows()) {
            Kind::Direct(Cholesky::factor(&reduced)?)
        } else {
            let diag = diagonal(&reduced);
            if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
                return Err(Error::Solver(format!("non-positive diagonal entry {i}")));
            }
            Kind::Cg { a: reduced, diag, rel_tol: cfg.rel_tol, max_iter: cfg.max_iter }
        };
        Ok(Self { kind, n, ground })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.kind, Kind::Direct(_))
    }

    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        assert_eq!(b.len(), self.n);
        let rhs = if self.ground { &b[1.min(b.len())..] } else { b };
        let (x, stats) = match &self.kind {
            Kind::Direct(f) => (f.solve(rhs), SolveStats::default()),
            Kind::Cg { a, diag, rel_tol, max_iter } => {
                if rhs.is_empty() {
                    (Vec::new(), SolveStats::default())
                } else {
                    let out = pcg(a, diag, rhs, *rel_tol, *max_iter);
                    if !out.converged {
                        return Err(Error::Solver(format!(
                            "CG stopped after {} iterations at relative residual {:.3e}",
                            out.iterations, out.rel_residual
                        )));
                    }
                    (out.x, SolveStats { iterations: out.iterations, rel_residual: out.rel_residual })
                }
            }
        };
        if self.ground {
            let mut full = Vec::with_capacity(self.n);
            full.push(0.0);
            full.extend(x);
            Ok((full, stats))
        } else {
            Ok((x, stats))
        }
    }
}
