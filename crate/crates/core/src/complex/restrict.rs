use sprs::CsMat;

use crate::mesh::{BoundaryTag, BoundaryTags, SimplicialMesh, NONE};
use crate::sparse::submatrix;

/// Entities kept after eliminating the closure of the flux boundary.
///
/// A `k`-entity is removed when it lies on a face tagged [`BoundaryTag::Flux`];
/// cells are always kept.
#[derive(Debug, Clone)]
pub struct EssentialRestriction {
    kept: Vec<Vec<usize>>,
    position: Vec<Vec<usize>>,
}

impl EssentialRestriction {
    /// Keeps every entity.
    pub fn identity(mesh: &SimplicialMesh) -> Self {
        let kept: Vec<Vec<usize>> = (0..=mesh.dim()).map(|k| (0..mesh.n_entities(k)).collect()).collect();
        let position = kept.clone();
        Self { kept, position }
    }

    pub fn new(mesh: &SimplicialMesh, tags: &BoundaryTags) -> Self {
        let dim = mesh.dim();
        let mut removed: Vec<Vec<bool>> = (0..=dim).map(|k| vec![false; mesh.n_entities(k)]).collect();
        let mut buf = Vec::new();
        for f in tags.faces_with(BoundaryTag::Flux) {
            let face = mesh.entity(dim - 1, f).to_vec();
            removed[dim - 1][f] = true;
            for k in 0..dim - 1 {
                for_each_sub(&face, k + 1, &mut buf, |t| {
                    let e = mesh.entities(k).find(t).expect("sub-entity exists");
                    removed[k][e] = true;
                });
            }
        }
        let kept: Vec<Vec<usize>> = removed
            .iter()
            .map(|r| (0..r.len()).filter(|&i| !r[i]).collect())
            .collect();
        let position = kept
            .iter()
            .zip(&removed)
            .map(|(k, r)| {
                let mut p = vec![NONE; r.len()];
                for (i, &e) in k.iter().enumerate() {
                    p[e] = i;
                }
                p
            })
            .collect();
        Self { kept, position }
    }

    pub fn kept(&self, k: usize) -> &[usize] {
        &self.kept[k]
    }

    pub fn n_kept(&self, k: usize) -> usize {
        self.kept[k].len()
    }

    pub fn n_full(&self, k: usize) -> usize {
        self.position[k].len()
    }

    /// Restricted index of a full entity, if kept.
    pub fn position(&self, k: usize, i: usize) -> Option<usize> {
        let p = self.position[k][i];
        (p != NONE).then_some(p)
    }

    /// Restricts a map from degree `k` to degree `k + 1` cochains.
    pub fn restrict_differential<T>(&self, m: &CsMat<T>, k: usize) -> CsMat<T>
    where
        T: Copy + Default + num_traits::Zero + std::ops::Add<Output = T>,
    {
        submatrix(m, &self.kept[k + 1], &self.kept[k])
    }

    /// Restricts an operator acting within degree `k`.
    pub fn restrict_square<T>(&self, m: &CsMat<T>, k: usize) -> CsMat<T>
    where
        T: Copy + Default + num_traits::Zero + std::ops::Add<Output = T>,
    {
        submatrix(m, &self.kept[k], &self.kept[k])
    }

    pub fn restrict_vec(&self, k: usize, full: &[f64]) -> Vec<f64> {
        self.kept[k].iter().map(|&i| full[i]).collect()
    }

    /// Zero-extends a restricted cochain.
    pub fn prolong(&self, k: usize, values: &[f64]) -> Vec<f64> {
        prolong(values, &self.kept[k], self.n_full(k))
    }
}

/// Keeps the listed rows and columns of a matrix.
pub fn restrict<T>(m: &CsMat<T>, rows: &[usize], cols: &[usize]) -> CsMat<T>
where
    T: Copy + Default + num_traits::Zero + std::ops::Add<Output = T>,
{
    submatrix(m, rows, cols)
}

/// Zero-extends values on `kept` entries to a vector of length `full`.
pub fn prolong(values: &[f64], kept: &[usize], full: usize) -> Vec<f64> {
    let mut out = vec![0.0; full];
    for (&i, &v) in kept.iter().zip(values) {
        out[i] = v;
    }
    out
}

fn for_each_sub(set: &[usize], size: usize, buf: &mut Vec<usize>, mut f: impl FnMut(&[usize])) {
    // faces have at most three vertices, so plain recursion over masks is enough
    let n = set.len();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != size {
            continue;
        }
        buf.clear();
        buf.extend((0..n).filter(|&i| mask & (1 << i) != 0).map(|i| set[i]));
        f(buf);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_differential, composition_defect};
    use crate::mesh::{build_structured, tag_boundary};

    #[test]
    fn restriction_drops_flux_closure() {
        let m = build_structured(2, 2, [0.0; 3], [1.0; 3]).unwrap();
        let tags = tag_boundary(&m, |x, _| {
            Some(if x[1] < 1e-12 { BoundaryTag::Flux } else { BoundaryTag::Pressure })
        })
        .unwrap();
        let r = EssentialRestriction::new(&m, &tags);
        assert_eq!(r.n_full(1) - r.n_kept(1), 2);
        assert_eq!(r.n_full(0) - r.n_kept(0), 3);
        assert_eq!(r.n_kept(2), 8);
        let b0 = r.restrict_differential(&build_differential(&m, 0).unwrap(), 0);
        let b1 = r.restrict_differential(&build_differential(&m, 1).unwrap(), 1);
        assert_eq!(composition_defect(&b1, &b0), 0);
    }

    #[test]
    fn prolong_round_trip() {
        let full = [1.0, 2.0, 3.0, 4.0];
        let kept = [0, 2];
        let v: Vec<f64> = kept.iter().map(|&i| full[i]).collect();
        assert_eq!(prolong(&v, &kept, 4), vec![1.0, 0.0, 3.0, 0.0]);
    }
}
