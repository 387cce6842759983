//! Integer incidence matrices of the simplicial cochain complex.
//!
//! `build_differential(mesh, k)` maps degree-`k` cochains (values on
//! `k`-entities) to degree-`k+1` cochains. Entries are ±1; the sign of a
//! sub-entity is `(-1)^j` for the vertex `j` it omits, and top-dimensional
//! rows additionally carry the cell orientation so that +1 means the face
//! orientation points out of the cell.

mod exactness;
mod restrict;

pub use exactness::{rank_mod_p, verify_exactness, verify_sequence, ExactnessReport, RANK_LIMIT};
pub use restrict::{prolong, restrict, EssentialRestriction};

use sprs::CsMat;

use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;
use crate::sparse::from_triplets;

pub type IncidenceMatrix = CsMat<i32>;

pub fn build_differential(mesh: &SimplicialMesh, k: usize) -> Result<IncidenceMatrix> {
    let dim = mesh.dim();
    if k >= dim {
        return Err(Error::Operator(format!("no differential of degree {k} on a {dim}D mesh")));
    }
    let rows = mesh.n_entities(k + 1);
    let cols = mesh.n_entities(k);
    let mut trip = Vec::with_capacity(rows * (k + 2));
    if k + 1 == dim {
        for c in 0..rows {
            for (&f, &s) in mesh.cell_faces(c).iter().zip(mesh.cell_face_signs(c)) {
                trip.push((c, f, s as i32));
            }
        }
    } else {
        let sub = mesh.entities(k);
        let mut buf = Vec::with_capacity(k + 1);
        for (e, verts) in mesh.entities(k + 1).iter().enumerate() {
            for j in 0..verts.len() {
                buf.clear();
                buf.extend(verts.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v));
                let s = sub.find(&buf).expect("sub-entities are enumerated");
                trip.push((e, s, if j % 2 == 0 { 1 } else { -1 }));
            }
        }
    }
    Ok(from_triplets(rows, cols, trip))
}

/// Largest absolute entry of the product `b · a`, zero for an exact pair.
pub fn composition_defect(b: &IncidenceMatrix, a: &IncidenceMatrix) -> i64 {
    let p = (b * a).to_csr();
    p.data().iter().map(|&v| (v as i64).abs()).max().unwrap_or(0)
}

/// All differentials of the mesh, degree 0 first.
pub fn build_all(mesh: &SimplicialMesh) -> Vec<IncidenceMatrix> {
    (0..mesh.dim())
        .map(|k| build_differential(mesh, k).expect("degree below dimension"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured;

    fn tet() -> SimplicialMesh {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        SimplicialMesh::new(3, v, &[vec![0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn single_tet_shapes() {
        let m = tet();
        let b0 = build_differential(&m, 0).unwrap();
        let b2 = build_differential(&m, 2).unwrap();
        assert_eq!(b0.shape(), (6, 4));
        assert_eq!(b2.shape(), (1, 4));
        for row in b0.outer_iterator() {
            assert_eq!(row.nnz(), 2);
            let vals: Vec<i32> = row.iter().map(|(_, &v)| v).collect();
            assert_eq!(vals.iter().sum::<i32>(), 0);
        }
        assert!(b2.data().iter().all(|v| v.abs() == 1));
    }

    #[test]
    fn compositions_vanish() {
        for dim in [2, 3] {
            let m = build_structured(dim, 3, [0.0; 3], [1.0; 3]).unwrap();
            let b = build_all(&m);
            for k in 0..dim - 1 {
                assert_eq!(composition_defect(&b[k + 1], &b[k]), 0);
            }
        }
    }

    #[test]
    fn divergence_sign_matches_outward_normal() {
        let m = build_structured(3, 2, [0.0; 3], [1.0; 3]).unwrap();
        let b = build_differential(&m, 2).unwrap();
        for (c, row) in b.outer_iterator().enumerate() {
            assert_eq!(row.nnz(), 4);
            for (f, &s) in row.iter() {
                let verts = m.entity(2, f);
                let p: Vec<_> = verts.iter().map(|&v| m.vertex(v)).collect();
                let e1 = crate::mesh::sub(&p[1], &p[0]);
                let e2 = crate::mesh::sub(&p[2], &p[0]);
                let rh = [e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]];
                let out = m.outward_normal(c, f).unwrap();
                assert_eq!(crate::mesh::dot(&rh, &out).signum() as i32, s);
            }
        }
    }
}
