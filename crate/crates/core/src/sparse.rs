//! Small helpers over `sprs` compressed matrices. Matrices built here are
//! always stored row-major.

use faer::sparse::{SparseColMat, Triplet};
use num_traits::Zero;
use sprs::{CsMat, TriMat};

pub type SparseMatrix = CsMat<f64>;

/// Row-major matrix from `(row, col, value)` triples; duplicates are summed.
pub fn from_triplets<T>(rows: usize, cols: usize, triplets: impl IntoIterator<Item = (usize, usize, T)>) -> CsMat<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + Zero,
{
    let mut tri = TriMat::new((rows, cols));
    for (r, c, v) in triplets {
        tri.add_triplet(r, c, v);
    }
    let m: CsMat<T> = tri.to_csr();
    prune(&m)
}

/// Drops stored zeros.
pub fn prune<T>(a: &CsMat<T>) -> CsMat<T>
where
    T: Copy + Default + Zero,
{
    let a = if a.is_csr() { a.clone() } else { a.to_csr() };
    let mut indptr = Vec::with_capacity(a.rows() + 1);
    let mut indices = Vec::with_capacity(a.nnz());
    let mut data = Vec::with_capacity(a.nnz());
    indptr.push(0);
    for row in a.outer_iterator() {
        for (c, &v) in row.iter() {
            if !v.is_zero() {
                indices.push(c);
                data.push(v);
            }
        }
        indptr.push(indices.len());
    }
    CsMat::new(a.shape(), indptr, indices, data)
}

/// `y = A x` for a row-major matrix with entries convertible to `f64`.
pub fn matvec<T: Copy + Into<f64>>(a: &CsMat<T>, x: &[f64]) -> Vec<f64> {
    assert!(a.is_csr(), "row-major storage expected");
    assert_eq!(a.cols(), x.len());
    a.outer_iterator()
        .map(|row| row.iter().map(|(c, &v)| v.into() * x[c]).sum())
        .collect()
}

/// `y = Aᵀ x`.
pub fn matvec_t<T: Copy + Into<f64>>(a: &CsMat<T>, x: &[f64]) -> Vec<f64> {
    assert!(a.is_csr(), "row-major storage expected");
    assert_eq!(a.rows(), x.len());
    let mut y = vec![0.0; a.cols()];
    for (r, row) in a.outer_iterator().enumerate() {
        let xr = x[r];
        if xr == 0.0 {
            continue;
        }
        for (c, &v) in row.iter() {
            y[c] += v.into() * xr;
        }
    }
    y
}

pub fn transpose<T: Copy + Default>(a: &CsMat<T>) -> CsMat<T> {
    a.transpose_view().to_csr()
}

pub fn to_f64(a: &CsMat<i32>) -> CsMat<f64> {
    a.map(|&v| v as f64)
}

/// `A diag(d) Aᵀ`.
pub fn weighted_gram(a: &CsMat<f64>, d: &[f64]) -> CsMat<f64> {
    let mut ad = a.clone();
    for mut row in ad.outer_iterator_mut() {
        for (c, v) in row.iter_mut() {
            *v *= d[c];
        }
    }
    let at = transpose(a);
    prune(&(&ad * &at).to_csr())
}

/// `Aᵀ M A` for a row-major `A`.
pub fn congruence(a: &CsMat<f64>, m: &CsMat<f64>) -> CsMat<f64> {
    let at = transpose(a);
    let ma = (m * a).to_csr();
    prune(&(&at * &ma).to_csr())
}

/// Rows and columns selected by index lists.
pub fn submatrix<T: Copy + Default + Zero + std::ops::Add<Output = T>>(
    a: &CsMat<T>,
    rows: &[usize],
    cols: &[usize],
) -> CsMat<T> {
    const DROP: usize = usize::MAX;
    let mut col_pos = vec![DROP; a.cols()];
    for (i, &c) in cols.iter().enumerate() {
        col_pos[c] = i;
    }
    let mut trip = Vec::new();
    for (i, &r) in rows.iter().enumerate() {
        if let Some(row) = a.outer_view(r) {
            for (c, &v) in row.iter() {
                if col_pos[c] != DROP {
                    trip.push((i, col_pos[c], v));
                }
            }
        }
    }
    from_triplets(rows.len(), cols.len(), trip)
}

pub fn diagonal(a: &CsMat<f64>) -> Vec<f64> {
    let n = a.rows().min(a.cols());
    (0..n).map(|i| a.get(i, i).copied().unwrap_or(0.0)).collect()
}

pub fn row_sums(a: &CsMat<f64>) -> Vec<f64> {
    a.outer_iterator().map(|row| row.iter().map(|(_, &v)| v).sum()).collect()
}

pub fn add(a: &CsMat<f64>, b: &CsMat<f64>) -> CsMat<f64> {
    prune(&(a + b).to_csr())
}

pub fn to_faer(a: &CsMat<f64>) -> SparseColMat<usize, f64> {
    let mut trip = Vec::with_capacity(a.nnz());
    for (r, row) in a.outer_iterator().enumerate() {
        for (c, &v) in row.iter() {
            trip.push(Triplet::new(r, c, v));
        }
    }
    SparseColMat::try_new_from_triplets(a.rows(), a.cols(), &trip).expect("indices in range")
}

/// Largest absolute entry of `A - Aᵀ`.
pub fn asymmetry(a: &CsMat<f64>) -> f64 {
    let at = transpose(a);
    let d = a - &at;
    d.data().iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `xᵀ M x`.
pub fn energy(m: &CsMat<f64>, x: &[f64]) -> f64 {
    dot(x, &matvec(m, x))
}
