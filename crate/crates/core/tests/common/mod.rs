//! Oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// POD by the textbook route: eigenpairs of the Gram matrix `SᵀS` by cyclic
/// symmetric Jacobi, `σ = √λ`, `U = S v / σ`. Deliberately independent of
/// the library's one-sided rotations.
pub fn gram_pod(s: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = s.ncols();
    let mut a = s.transpose() * s;
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off.sqrt() <= 1e-15 * a.norm() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                // A ← Jᵀ A J with the rotation in the (p, q) plane
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let sigma: Vec<f64> = order.iter().map(|&i| a[(i, i)].max(0.0).sqrt()).collect();
    let mut u = DMatrix::zeros(s.nrows(), n);
    for (k, &i) in order.iter().enumerate() {
        if sigma[k] > 0.0 {
            u.column_mut(k).copy_from(&(s * v.column(i) / sigma[k]));
        }
    }
    (u, sigma)
}

/// Largest principal angle between the column spans of two orthonormal
/// matrices of equal width.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 && b.ncols() == 0 {
        return 0.0;
    }
    let residual = b - a * (a.transpose() * b);
    residual.svd(false, false).singular_values.max().min(1.0).asin()
}

pub fn random_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
}

/// Random matrix with orthonormal columns.
pub fn random_orthonormal(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    random_matrix(m, n, seed).qr().q()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    d / if n > 0.0 { n } else { 1.0 }
}
