use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 80;

/// Thin SVD by one-sided Jacobi rotations.
///
/// Returns `(U, σ)` with `σ` descending and `U` holding the normalized
/// columns; columns whose singular value is zero are left as zero vectors.
/// Rotating the columns of `A` directly keeps small singular values to high
/// relative accuracy, which forming `AᵀA` would not.
pub fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let tol = f64::EPSILON * (m.max(1) as f64).sqrt();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (alpha, beta, gamma) = {
                    let ci = w.column(i);
                    let cj = w.column(j);
                    (ci.norm_squared(), cj.norm_squared(), ci.dot(&cj))
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let x = w[(r, i)];
                    let y = w[(r, j)];
                    w[(r, i)] = c * x - s * y;
                    w[(r, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(usize, f64)> = (0..n).map(|j| (j, w.column(j).norm())).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut u = DMatrix::zeros(m, n);
    let mut sigma = Vec::with_capacity(n);
    for (k, &(j, s)) in order.iter().enumerate() {
        sigma.push(s);
        if s > 0.0 {
            u.column_mut(k).copy_from(&(w.column(j) / s));
        }
    }
    (u, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_input() {
        let a = DMatrix::from_row_slice(3, 2, &[0.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
        let (u, s) = jacobi_svd(&a);
        assert_eq!(s, vec![3.0, 2.0]);
        assert_eq!(u[(1, 0)], 1.0);
        assert_eq!(u[(0, 1)], 1.0);
    }

    #[test]
    fn reconstructs_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(30, 7, |_, _| rng.random::<f64>() - 0.5);
        let (u, s) = jacobi_svd(&a);
        let utu = u.transpose() * &u;
        assert!((utu - DMatrix::identity(7, 7)).amax() < 1e-13);
        // A = U Σ Vᵀ gives Vᵀ = Σ⁻¹ Uᵀ A, which must be orthogonal
        let sinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(7, s.iter().map(|x| 1.0 / x)));
        let vt = sinv * u.transpose() * &a;
        assert!((&vt * vt.transpose() - DMatrix::identity(7, 7)).amax() < 1e-12);
    }
}
