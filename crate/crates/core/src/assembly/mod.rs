//! Mass matrices of the Whitney spaces and their diagonal approximations.

mod local;
mod lumping;

pub use local::{edge_mass, flux_mass, nodal_mass, TET_EDGES};
pub use lumping::{lump, tpfa_lumping, LumpFlavor, LumpedMass};

use nalgebra::Matrix3;
use sprs::CsMat;

use crate::complex::build_differential;
use crate::error::{Error, Result};
use crate::mesh::{Point, SimplicialMesh};
use crate::sparse::{from_triplets, to_f64};

/// Hydraulic conductivity per cell.
#[derive(Debug, Clone, PartialEq)]
pub enum ConductivityField {
    Scalar(Vec<f64>),
    /// Symmetric positive definite tensors; 2D uses the upper-left block.
    Tensor(Vec<[[f64; 3]; 3]>),
}

impl ConductivityField {
    pub fn uniform(n_cells: usize, k: f64) -> Self {
        ConductivityField::Scalar(vec![k; n_cells])
    }

    pub fn len(&self) -> usize {
        match self {
            ConductivityField::Scalar(v) => v.len(),
            ConductivityField::Tensor(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, mesh: &SimplicialMesh) -> Result<()> {
        if self.len() != mesh.n_cells() {
            return Err(Error::Incompatible(format!(
                "conductivity has {} values for {} cells",
                self.len(),
                mesh.n_cells()
            )));
        }
        for c in 0..self.len() {
            let k = self.tensor(c, mesh.dim());
            let ok = match self {
                ConductivityField::Scalar(v) => v[c].is_finite() && v[c] > 0.0,
                ConductivityField::Tensor(_) => k.cholesky().is_some() && (k - k.transpose()).amax() <= 1e-12 * k.amax(),
            };
            if !ok {
                return Err(Error::Incompatible(format!("conductivity of cell {c} is not positive definite")));
            }
        }
        Ok(())
    }

    /// Full tensor of cell `c`; 2D pads the third axis with the identity.
    pub fn tensor(&self, c: usize, dim: usize) -> Matrix3<f64> {
        match self {
            ConductivityField::Scalar(v) => {
                let mut m = Matrix3::identity() * v[c];
                if dim == 2 {
                    m[(2, 2)] = 1.0;
                }
                m
            }
            ConductivityField::Tensor(v) => {
                let t = v[c];
                let mut m = Matrix3::from_fn(|i, j| t[i][j]);
                if dim == 2 {
                    for i in 0..2 {
                        m[(i, 2)] = 0.0;
                        m[(2, i)] = 0.0;
                    }
                    m[(2, 2)] = 1.0;
                }
                m
            }
        }
    }

    pub fn inverse(&self, c: usize, dim: usize) -> Matrix3<f64> {
        match self {
            ConductivityField::Scalar(v) => {
                let mut m = Matrix3::identity() / v[c];
                if dim == 2 {
                    m[(2, 2)] = 1.0;
                }
                m
            }
            ConductivityField::Tensor(_) => self.tensor(c, dim).try_inverse().expect("validated SPD tensor"),
        }
    }

    /// `nᵀ K n` for a unit normal.
    pub fn normal_component(&self, c: usize, n: &Point) -> f64 {
        match self {
            ConductivityField::Scalar(v) => v[c],
            ConductivityField::Tensor(_) => {
                let k = self.tensor(c, 3);
                let v = nalgebra::Vector3::new(n[0], n[1], n[2]);
                v.dot(&(k * v))
            }
        }
    }

    /// The same field multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            ConductivityField::Scalar(v) => ConductivityField::Scalar(v.iter().map(|k| k * s).collect()),
            ConductivityField::Tensor(v) => ConductivityField::Tensor(
                v.iter().map(|t| t.map(|row| row.map(|x| x * s))).collect(),
            ),
        }
    }
}

/// Mass matrix of degree-`k` cochains.
///
/// Degree 0 uses nodal basis functions, degree `dim - 1` the face-flux space
/// weighted by the inverse conductivity (identity when `weight` is `None`),
/// degree 1 in 3D the edge space, and degree `dim` piecewise constants whose
/// mass is `diag(1 / |T|)` because the unknowns are cell integrals.
pub fn assemble_mass(mesh: &SimplicialMesh, k: usize, weight: Option<&ConductivityField>) -> Result<CsMat<f64>> {
    let dim = mesh.dim();
    if k > dim {
        return Err(Error::Operator(format!("no degree {k} space on a {dim}D mesh")));
    }
    if let Some(w) = weight {
        if k != dim - 1 {
            return Err(Error::Operator("conductivity weights apply to the flux space only".into()));
        }
        w.validate(mesh)?;
    }
    let n = mesh.n_entities(k);
    if k == dim {
        return Ok(from_triplets(n, n, (0..n).map(|c| (c, c, 1.0 / mesh.cell_volume(c)))));
    }
    let mut trip = Vec::new();
    for c in 0..mesh.n_cells() {
        let vol = mesh.cell_volume(c);
        let cell = mesh.cell_sorted(c);
        if k == 0 {
            let m = nodal_mass(dim, vol);
            for (i, &vi) in cell.iter().enumerate() {
                for (j, &vj) in cell.iter().enumerate() {
                    trip.push((vi, vj, m[i][j]));
                }
            }
        } else if k == dim - 1 {
            let pts = mesh.cell_points(c);
            let kinv = match weight {
                Some(w) => w.inverse(c, dim),
                None => Matrix3::identity(),
            };
            let m = flux_mass(&pts, dim, vol, &kinv);
            let faces = mesh.cell_faces(c);
            let signs = mesh.cell_face_signs(c);
            for i in 0..=dim {
                for j in 0..=dim {
                    let s = (signs[i] * signs[j]) as f64;
                    trip.push((faces[i], faces[j], s * m[i][j]));
                }
            }
        } else {
            let pts = mesh.cell_points(c);
            let m = edge_mass(&pts, vol);
            let edges: Vec<usize> = TET_EDGES
                .iter()
                .map(|&[a, b]| mesh.entities(1).find(&[cell[a], cell[b]]).expect("edge of cell"))
                .collect();
            for i in 0..6 {
                for j in 0..6 {
                    trip.push((edges[i], edges[j], m[i][j]));
                }
            }
        }
    }
    Ok(from_triplets(n, n, trip))
}

/// Weak differential `M_{k+1} B_k`.
pub fn weak_differential(mesh: &SimplicialMesh, k: usize, weight: Option<&ConductivityField>) -> Result<CsMat<f64>> {
    let b = to_f64(&build_differential(mesh, k)?);
    let m = assemble_mass(mesh, k + 1, weight)?;
    Ok((&m * &b).to_csr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured, perturb_interior};
    use crate::sparse::{asymmetry, energy};

    fn meshes() -> Vec<SimplicialMesh> {
        let m2 = build_structured(2, 4, [0.0; 3], [1.0; 3]).unwrap();
        let m3 = build_structured(3, 2, [0.0; 3], [1.0; 3]).unwrap();
        vec![perturb_interior(&m2, 0.03, 1).unwrap(), perturb_interior(&m3, 0.05, 2).unwrap()]
    }

    #[test]
    fn masses_symmetric_positive() {
        for m in meshes() {
            for k in 0..=m.dim() {
                let a = assemble_mass(&m, k, None).unwrap();
                assert!(asymmetry(&a) < 1e-14);
                let x: Vec<f64> = (0..a.rows()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
                assert!(energy(&a, &x) > 0.0);
            }
        }
    }

    #[test]
    fn single_triangle_nodal_mass() {
        let m = build_structured(2, 1, [0.0; 3], [1.0; 3]).unwrap();
        let a = assemble_mass(&m, 0, None).unwrap();
        let total: f64 = a.data().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        let p0 = assemble_mass(&m, 2, None).unwrap();
        assert!((p0.get(0, 0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn conductivity_scaling_inverts_mass() {
        let m = build_structured(3, 2, [0.0; 3], [1.0; 3]).unwrap();
        let k = ConductivityField::Scalar((0..m.n_cells()).map(|c| 1.0 + (c % 5) as f64).collect());
        let a = assemble_mass(&m, 2, Some(&k)).unwrap();
        let b = assemble_mass(&m, 2, Some(&k.scaled(4.0))).unwrap();
        let d = &a - &b.map(|v| v * 4.0);
        assert!(d.data().iter().all(|v| v.abs() < 1e-12));
    }

    /// `∫ φ_i ψ_j` for the weak differential, computed by quadrature on each
    /// cell directly from the basis functions of both spaces.
    #[test]
    fn weak_gradient_matches_quadrature() {
        let m = meshes().remove(1);
        let bhat = weak_differential(&m, 0, None).unwrap();
        let mut trip = Vec::new();
        let a = 0.585_410_196_624_968_5;
        let b = 0.138_196_601_125_010_5;
        for c in 0..m.n_cells() {
            let pts = m.cell_points(c);
            let vol = m.cell_volume(c);
            let g = crate::mesh::barycentric_gradients(&pts, 3);
            let cell = m.cell_sorted(c);
            for (e, &[i, j]) in TET_EDGES.iter().enumerate() {
                let ge = m.entities(1).find(&[cell[i], cell[j]]).unwrap();
                for v in 0..4 {
                    let mut q = 0.0;
                    for p in 0..4 {
                        let l: Vec<f64> = (0..4).map(|r| if r == p { a } else { b }).collect();
                        let mut w = [0.0; 3];
                        for r in 0..3 {
                            w[r] = l[i] * g[j][r] - l[j] * g[i][r];
                        }
                        q += 0.25 * vol * crate::mesh::dot(&w, &g[v]);
                    }
                    trip.push((ge, cell[v], q));
                }
                let _ = e;
            }
        }
        let oracle = from_triplets(bhat.rows(), bhat.cols(), trip);
        let d = &bhat - &oracle;
        assert!(d.data().iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn weak_divergence_is_scaled_incidence() {
        let m = meshes().remove(0);
        let bhat = weak_differential(&m, 1, None).unwrap();
        let b = build_differential(&m, 1).unwrap();
        for (c, row) in bhat.outer_iterator().enumerate() {
            for (f, &v) in row.iter() {
                let s = *b.get(c, f).unwrap() as f64;
                assert!((v - s / m.cell_volume(c)).abs() < 1e-13);
            }
        }
    }
}
