use sprs::CsMat;

use super::ConductivityField;
use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;
use crate::sparse::{diagonal, row_sums};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LumpFlavor {
    Identity,
    RowSum,
    /// Two-point flux approximation; built from geometry by [`tpfa_lumping`].
    Tpfa,
}

/// Diagonal positive approximation `L` of a mass matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpedMass {
    pub diag: Vec<f64>,
    pub flavor: LumpFlavor,
}

impl LumpedMass {
    pub fn new(diag: Vec<f64>, flavor: LumpFlavor) -> Result<Self> {
        if let Some(i) = diag.iter().position(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(Error::Operator(format!("lumped entry {i} is {} (must be positive)", diag[i])));
        }
        Ok(Self { diag, flavor })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn inverse(&self) -> Vec<f64> {
        self.diag.iter().map(|d| 1.0 / d).collect()
    }

    /// Keeps the listed entries.
    pub fn restricted(&self, kept: &[usize]) -> Self {
        Self { diag: kept.iter().map(|&i| self.diag[i]).collect(), flavor: self.flavor }
    }
}

/// Row sums below this fraction of the diagonal are treated as vanishing.
const ROW_SUM_FLOOR: f64 = 1e-8;

/// Identity or row-sum lumping of an assembled mass matrix.
pub fn lump(m: &CsMat<f64>, flavor: LumpFlavor) -> Result<LumpedMass> {
    match flavor {
        LumpFlavor::Identity => LumpedMass::new(vec![1.0; m.rows()], flavor),
        LumpFlavor::RowSum => {
            let d = row_sums(m);
            // signed face-flux masses can have rows summing to (nearly) zero; fall back to the diagonal there
            let diag = diagonal(m);
            let d = d.into_iter().zip(diag).map(|(s, g)| if s > ROW_SUM_FLOOR * g { s } else { g }).collect();
            LumpedMass::new(d, flavor)
        }
        LumpFlavor::Tpfa => Err(Error::Operator("two-point lumping needs the mesh; use tpfa_lumping".into())),
    }
}

/// Two-point flux lumping of the weighted face-flux mass.
///
/// Each face collects `d / (nᵀKn |σ|)` from its adjacent cells, `d` being the
/// distance from the cell centroid to the face hyperplane. Boundary faces get
/// the single half-transmissibility of their cell.
pub fn tpfa_lumping(mesh: &SimplicialMesh, k: &ConductivityField) -> Result<LumpedMass> {
    k.validate(mesh)?;
    let dim = mesh.dim();
    let mut diag = vec![0.0; mesh.n_faces()];
    for c in 0..mesh.n_cells() {
        for &f in mesh.cell_faces(c) {
            let d = mesh.centroid_face_distance(c, f);
            if d <= 0.0 {
                return Err(Error::Operator(format!("zero centroid-to-face distance in cell {c}")));
            }
            let kn = match k {
                ConductivityField::Scalar(v) => v[c],
                ConductivityField::Tensor(_) => {
                    let n = mesh.outward_normal(c, f).expect("face of cell");
                    k.normal_component(c, &n)
                }
            };
            diag[f] += d / (kn * mesh.measure(dim - 1, f));
        }
    }
    LumpedMass::new(diag, LumpFlavor::Tpfa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured, SimplicialMesh};

    /// Two mirror-image triangles sharing the edge x = 0.
    fn pair() -> SimplicialMesh {
        let v = vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.5, 0.0], [-1.0, 0.5, 0.0]];
        SimplicialMesh::new(2, v, &[vec![0, 1, 2], vec![0, 1, 3]]).unwrap()
    }

    #[test]
    fn shared_face_transmissibility() {
        let m = pair();
        let f = m.find_entity(1, &[0, 1]).unwrap();
        // centroids sit at x = ±1/3, the shared face has length one
        let l = tpfa_lumping(&m, &ConductivityField::uniform(2, 1.0)).unwrap();
        assert!((l.diag[f] - 2.0 / 3.0).abs() < 1e-15);
        let c = 7.0;
        let het = tpfa_lumping(&m, &ConductivityField::Scalar(vec![1.0, c])).unwrap();
        let ratio = (1.0 / het.diag[f]) / (1.0 / l.diag[f]);
        assert!((ratio - 2.0 * c / (1.0 + c)).abs() < 1e-14);
    }

    #[test]
    fn constant_conductivity_scales_lumping() {
        let m = build_structured(3, 2, [0.0; 3], [1.0; 3]).unwrap();
        let a = tpfa_lumping(&m, &ConductivityField::uniform(m.n_cells(), 1.0)).unwrap();
        let b = tpfa_lumping(&m, &ConductivityField::uniform(m.n_cells(), 3.0)).unwrap();
        for (x, y) in a.diag.iter().zip(&b.diag) {
            assert!((x - 3.0 * y).abs() < 1e-14 * x);
        }
    }

    #[test]
    fn nonpositive_entries_rejected() {
        assert!(LumpedMass::new(vec![1.0, 0.0], LumpFlavor::Identity).is_err());
    }

    #[test]
    fn row_sum_of_nodal_mass_is_positive() {
        let m = build_structured(2, 3, [0.0; 3], [1.0; 3]).unwrap();
        let a = crate::assembly::assemble_mass(&m, 0, None).unwrap();
        let l = lump(&a, LumpFlavor::RowSum).unwrap();
        let total: f64 = l.diag.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
