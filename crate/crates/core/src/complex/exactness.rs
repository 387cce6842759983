use std::collections::HashMap;

use super::{build_differential, composition_defect, EssentialRestriction, IncidenceMatrix};
use crate::mesh::{Regime, SimplicialMesh};

/// Spaces larger than this are not rank-checked.
pub const RANK_LIMIT: usize = 5000;

const PRIME: u64 = 2_147_483_647;

/// Result of checking a sequence of differentials.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessReport {
    /// Largest entry of each composition `B_{k+1} B_k`.
    pub composition_defects: Vec<i64>,
    /// Rank of each differential, `None` when skipped as too large.
    pub ranks: Vec<Option<usize>>,
    /// Dimension of each cochain space.
    pub dims: Vec<usize>,
    /// Cohomology dimensions where both neighbouring ranks are known.
    pub betti: Vec<Option<usize>>,
    pub expected_betti: Option<Vec<usize>>,
}

impl ExactnessReport {
    pub fn compositions_zero(&self) -> bool {
        self.composition_defects.iter().all(|&d| d == 0)
    }

    /// True when the compositions vanish and every computed cohomology
    /// dimension matches the expected one.
    pub fn passes(&self) -> bool {
        if !self.compositions_zero() {
            return false;
        }
        match &self.expected_betti {
            Some(exp) => self.betti.iter().zip(exp).all(|(b, e)| b.map_or(true, |b| b == *e)),
            None => true,
        }
    }

    pub fn skipped(&self) -> bool {
        self.ranks.iter().any(|r| r.is_none())
    }

    pub fn summary(&self) -> String {
        let betti: Vec<String> = self
            .betti
            .iter()
            .map(|b| b.map_or("skipped, too large".to_string(), |b| b.to_string()))
            .collect();
        format!(
            "dims {:?}, composition defects {:?}, betti [{}]",
            self.dims,
            self.composition_defects,
            betti.join(", ")
        )
    }
}

/// Checks the (restricted) complex of a mesh.
///
/// The expected cohomology of a contractible domain depends on the boundary
/// regime: constants in degree 0 without flux faces, constants in the top
/// degree without pressure faces, nothing otherwise.
pub fn verify_exactness(mesh: &SimplicialMesh, restriction: &EssentialRestriction, regime: Regime) -> ExactnessReport {
    let ops: Vec<IncidenceMatrix> = (0..mesh.dim())
        .map(|k| restriction.restrict_differential(&build_differential(mesh, k).expect("valid degree"), k))
        .collect();
    let dim = mesh.dim();
    let mut expected = vec![0; dim + 1];
    match regime {
        Regime::Dirichlet => expected[0] = 1,
        Regime::Neumann => expected[dim] = 1,
        Regime::Mixed => {}
    }
    verify_sequence(&ops, Some(expected))
}

/// Checks an arbitrary sequence `ops[k]: C^k -> C^{k+1}`.
pub fn verify_sequence(ops: &[IncidenceMatrix], expected_betti: Option<Vec<usize>>) -> ExactnessReport {
    let mut dims: Vec<usize> = ops.iter().map(|b| b.cols()).collect();
    dims.push(ops.last().map_or(0, |b| b.rows()));
    let composition_defects = ops.windows(2).map(|w| composition_defect(&w[1], &w[0])).collect();
    let ranks: Vec<Option<usize>> = ops
        .iter()
        .map(|b| (b.rows() <= RANK_LIMIT && b.cols() <= RANK_LIMIT).then(|| rank_mod_p(b)))
        .collect();
    let betti = (0..dims.len())
        .map(|k| {
            let into = if k == 0 { Some(0) } else { ranks[k - 1] };
            let out = if k < ops.len() { ranks[k] } else { Some(0) };
            Some(dims[k] - into? - out?)
        })
        .collect();
    ExactnessReport { composition_defects, ranks, dims, betti, expected_betti }
}

/// Exact rank of an integer matrix over the field of integers modulo
/// 2^31 - 1, by sparse row elimination.
///
/// Incidence matrices of simplicial complexes have no torsion on the meshes
/// considered here, so this equals the rational rank.
pub fn rank_mod_p(a: &IncidenceMatrix) -> usize {
    let mut pivots: HashMap<usize, Vec<(usize, u64)>> = HashMap::new();
    let mut rank = 0;
    for row in a.outer_iterator() {
        let mut r: Vec<(usize, u64)> = row
            .iter()
            .filter(|(_, &v)| v != 0)
            .map(|(c, &v)| (c, (v as i64).rem_euclid(PRIME as i64) as u64))
            .collect();
        r.sort_unstable_by_key(|e| e.0);
        while let Some(&(lead, val)) = r.first() {
            match pivots.get(&lead) {
                Some(p) => r = axpy(&r, PRIME - val, p),
                None => {
                    let inv = pow_mod(val, PRIME - 2);
                    for e in r.iter_mut() {
                        e.1 = e.1 * inv % PRIME;
                    }
                    pivots.insert(lead, r);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

/// `x + s * y` modulo the prime, dropping zeros.
fn axpy(x: &[(usize, u64)], s: u64, y: &[(usize, u64)]) -> Vec<(usize, u64)> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = j == y.len() || (i < x.len() && x[i].0 < y[j].0);
        let take_y = i == x.len() || (j < y.len() && y[j].0 < x[i].0);
        let (c, v) = if take_x {
            i += 1;
            (x[i - 1].0, x[i - 1].1)
        } else if take_y {
            j += 1;
            (y[j - 1].0, s * y[j - 1].1 % PRIME)
        } else {
            i += 1;
            j += 1;
            (x[i - 1].0, (x[i - 1].1 + s * y[j - 1].1) % PRIME)
        };
        if v != 0 {
            out.push((c, v));
        }
    }
    out
}

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    b %= PRIME;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured, BoundaryTags};
    use crate::sparse::from_triplets;

    /// Dense Gaussian elimination with partial pivoting in floating point.
    fn dense_rank(a: &IncidenceMatrix) -> usize {
        let mut m: Vec<Vec<f64>> = (0..a.rows())
            .map(|r| {
                let mut row = vec![0.0; a.cols()];
                if let Some(v) = a.outer_view(r) {
                    for (c, &x) in v.iter() {
                        row[c] = x as f64;
                    }
                }
                row
            })
            .collect();
        let mut rank = 0;
        for col in 0..a.cols() {
            let Some(p) = (rank..m.len()).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())) else {
                break;
            };
            if m[p][col].abs() < 1e-9 {
                continue;
            }
            m.swap(rank, p);
            for r in rank + 1..m.len() {
                let f = m[r][col] / m[rank][col];
                if f != 0.0 {
                    for c in col..a.cols() {
                        m[r][c] -= f * m[rank][c];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn modular_rank_matches_dense_elimination() {
        for (dim, n) in [(2, 4), (3, 1), (3, 2)] {
            let m = build_structured(dim, n, [0.0; 3], [1.0; 3]).unwrap();
            for k in 0..dim {
                let b = build_differential(&m, k).unwrap();
                assert_eq!(rank_mod_p(&b), dense_rank(&b), "dim {dim} n {n} k {k}");
            }
        }
    }

    #[test]
    fn dirichlet_square_betti() {
        let m = build_structured(2, 4, [0.0; 3], [1.0; 3]).unwrap();
        let r = EssentialRestriction::identity(&m);
        let rep = verify_exactness(&m, &r, Regime::Dirichlet);
        assert_eq!(rep.betti, vec![Some(1), Some(0), Some(0)]);
        assert!(rep.passes());
    }

    #[test]
    fn neumann_cube_betti() {
        let m = build_structured(3, 2, [0.0; 3], [1.0; 3]).unwrap();
        let tags = BoundaryTags::uniform(&m, crate::mesh::BoundaryTag::Flux);
        let r = EssentialRestriction::new(&m, &tags);
        let rep = verify_exactness(&m, &r, Regime::Neumann);
        assert_eq!(rep.betti, vec![Some(0), Some(0), Some(0), Some(1)]);
        assert!(rep.passes());
    }

    #[test]
    fn corrupted_sign_fails() {
        let m = build_structured(2, 2, [0.0; 3], [1.0; 3]).unwrap();
        let b0 = build_differential(&m, 0).unwrap();
        let b1 = build_differential(&m, 1).unwrap();
        let mut trip: Vec<(usize, usize, i32)> = Vec::new();
        for (r, row) in b1.outer_iterator().enumerate() {
            for (c, &v) in row.iter() {
                trip.push((r, c, v));
            }
        }
        trip[0].2 = -trip[0].2;
        let bad = from_triplets(b1.rows(), b1.cols(), trip);
        let rep = verify_sequence(&[b0, bad], Some(vec![1, 0, 0]));
        assert!(!rep.compositions_zero());
        assert!(!rep.passes());
    }

    #[test]
    fn large_spaces_are_skipped() {
        let m = build_structured(3, 8, [0.0; 3], [1.0; 3]).unwrap();
        let r = EssentialRestriction::identity(&m);
        let rep = verify_exactness(&m, &r, Regime::Dirichlet);
        assert!(rep.compositions_zero());
        assert!(rep.skipped());
        assert!(rep.summary().contains("skipped, too large"));
    }

    #[test]
    fn modular_arithmetic() {
        assert_eq!(pow_mod(3, PRIME - 2) * 3 % PRIME, 1);
        let x = vec![(0, 1), (2, 5)];
        let y = vec![(0, 1), (1, 1)];
        assert_eq!(axpy(&x, PRIME - 1, &y), vec![(1, PRIME - 1), (2, 5)]);
    }
}
