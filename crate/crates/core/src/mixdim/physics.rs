//! Conductivities, inner products and right-hand sides on a
//! [`MixedDimMesh`].

use nalgebra::Matrix3;
use sprs::CsMat;

use super::topology::{FluxDof, MixedDimMesh};
use crate::assembly::{flux_mass, lump, ConductivityField, LumpFlavor, LumpedMass};
use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::solver::{DiscreteComplex, Lumping, Physics};
use crate::sparse::from_triplets;

/// Aperture-scaled conductivities of bulk, fractures and intersections.
///
/// A fracture of material conductivity `K` conducts `ε·K` along itself and
/// `(2/ε)·K` across its interface with the bulk. An intersection uses the
/// harmonic mean of the fractures meeting there in place of `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveConductivity {
    pub aperture: f64,
    pub bulk: ConductivityField,
    /// Material conductivity of each fracture.
    pub fracture: Vec<f64>,
}

impl EffectiveConductivity {
    pub fn new(aperture: f64, bulk: ConductivityField, fracture: Vec<f64>) -> Result<Self> {
        if !(aperture > 0.0 && aperture.is_finite()) {
            return Err(Error::Incompatible(format!("aperture {aperture} must be positive")));
        }
        if let Some(i) = fracture.iter().position(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::Incompatible(format!("fracture {i} has conductivity {}", fracture[i])));
        }
        Ok(Self { aperture, bulk, fracture })
    }

    /// Uniform bulk and the conductivities listed in the network file.
    pub fn from_network(mesh: &MixedDimMesh, aperture: f64, bulk: f64) -> Result<Self> {
        let fracture = mesh.network().fractures.iter().map(|f| f.conductivity).collect();
        Self::new(aperture, ConductivityField::uniform(mesh.n_triangles(), bulk), fracture)
    }

    /// Conductivity along fracture `i`.
    pub fn tangential(&self, i: usize) -> f64 {
        self.aperture * self.fracture[i]
    }

    /// Conductivity across the interface of fracture `i` with the bulk.
    pub fn normal(&self, i: usize) -> f64 {
        2.0 / self.aperture * self.fracture[i]
    }

    /// Interface conductivity between the listed fractures and their common
    /// intersection point.
    pub fn intersection(&self, fractures: &[usize]) -> f64 {
        let k: Vec<f64> = fractures.iter().map(|&i| self.fracture[i]).collect();
        2.0 / self.aperture * harmonic_mean(&k)
    }

    fn check(&self, mesh: &MixedDimMesh) -> Result<()> {
        self.bulk.validate(mesh.bulk())?;
        if self.fracture.len() != mesh.network().len() {
            return Err(Error::Incompatible(format!(
                "{} fracture conductivities for {} fractures",
                self.fracture.len(),
                mesh.network().len()
            )));
        }
        Ok(())
    }
}

pub fn harmonic_mean(values: &[f64]) -> f64 {
    values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>()
}

/// Inverse conductivities entering the flux inner product.
struct Resistivity {
    bulk: Vec<Matrix3<f64>>,
    bulk_normal: Vec<f64>,
    tangential: Vec<f64>,
    normal: Vec<f64>,
    point: Vec<f64>,
}

impl Resistivity {
    fn new(mesh: &MixedDimMesh, k: &EffectiveConductivity) -> Self {
        let nt = mesh.n_triangles();
        let nf = mesh.network().len();
        Self {
            bulk: (0..nt).map(|t| k.bulk.inverse(t, 2)).collect(),
            // scalar fields only; tensors use the face normal in `tpfa`
            bulk_normal: match &k.bulk {
                ConductivityField::Scalar(v) => v.iter().map(|k| 1.0 / k).collect(),
                ConductivityField::Tensor(_) => Vec::new(),
            },
            tangential: (0..nf).map(|i| 1.0 / k.tangential(i)).collect(),
            normal: (0..nf).map(|i| 1.0 / k.normal(i)).collect(),
            point: mesh.intersections().iter().map(|p| 1.0 / k.intersection(&p.fractures)).collect(),
        }
    }

    fn unit(mesh: &MixedDimMesh) -> Self {
        let nf = mesh.network().len();
        Self {
            bulk: vec![Matrix3::identity(); mesh.n_triangles()],
            bulk_normal: vec![1.0; mesh.n_triangles()],
            tangential: vec![1.0; nf],
            normal: vec![1.0; nf],
            point: vec![1.0; mesh.intersections().len()],
        }
    }
}

impl MixedDimMesh {
    /// Conductivity-independent operators with cells measured as
    /// `ε^(2−d)·|cell|`.
    pub fn complex(&self, aperture: f64) -> Result<DiscreteComplex> {
        let flux_norm = self.assemble(&Resistivity::unit(self));
        DiscreteComplex::new(2, self.div().clone(), self.curl().clone(), None, self.cell_measure(aperture), flux_norm, false, true)
    }

    /// Measure of each cell: area, `ε·length` or `ε²`.
    pub fn cell_measure(&self, aperture: f64) -> Vec<f64> {
        let bulk = self.bulk();
        let mut m: Vec<f64> = (0..bulk.n_cells()).map(|t| bulk.cell_volume(t)).collect();
        m.extend(self.fracture_cells().iter().map(|c| aperture * bulk.measure(1, c.edge)));
        m.extend(self.intersections().iter().map(|_| aperture * aperture));
        m
    }

    /// Source integrals `∫ f` over every cell, with the aperture scaling of
    /// [`cell_measure`](Self::cell_measure) and `f` taken at the centroid.
    pub fn source(&self, f: &dyn Fn(&Point) -> f64, aperture: f64) -> Vec<f64> {
        let bulk = self.bulk();
        let measure = self.cell_measure(aperture);
        let mut x: Vec<Point> = (0..bulk.n_cells()).map(|t| bulk.centroid(2, t)).collect();
        x.extend(self.fracture_cells().iter().map(|c| bulk.centroid(1, c.edge)));
        x.extend(self.intersections().iter().map(|p| bulk.vertex(p.vertex)));
        x.iter().zip(measure).map(|(x, m)| f(x) * m).collect()
    }

    /// Pressure data on the outer boundary tested against each flux dof:
    /// bulk boundary edges and fracture ends on the boundary.
    pub fn boundary_rhs(&self, g: &dyn Fn(&Point) -> f64) -> Vec<f64> {
        let bulk = self.bulk();
        self.flux_dofs()
            .iter()
            .map(|dof| match *dof {
                FluxDof::Bulk { edge } if bulk.is_boundary_face(edge) => {
                    let t = bulk.face_cells(edge).0;
                    f64::from(self.edge_sign(t, edge)) * g(&bulk.centroid(1, edge))
                }
                FluxDof::BoundaryEnd { vertex, .. } => g(&bulk.vertex(vertex)),
                _ => 0.0,
            })
            .collect()
    }

    /// Flux inner product weighted by the inverse effective conductivities.
    pub fn flux_mass(&self, k: &EffectiveConductivity) -> Result<CsMat<f64>> {
        k.check(self)?;
        Ok(self.assemble(&Resistivity::new(self, k)))
    }

    /// Two-point diagonal of [`flux_mass`](Self::flux_mass).
    pub fn tpfa_lumping(&self, k: &EffectiveConductivity) -> Result<LumpedMass> {
        k.check(self)?;
        let r = Resistivity::new(self, k);
        let bulk = self.bulk();
        let normal_resistivity = |t: usize, e: usize| -> f64 {
            match &k.bulk {
                ConductivityField::Scalar(_) => r.bulk_normal[t],
                ConductivityField::Tensor(_) => {
                    1.0 / k.bulk.normal_component(t, &bulk.outward_normal(t, e).expect("edge of triangle"))
                }
            }
        };
        self.tpfa(&r, &normal_resistivity)
    }

    /// Physics of one instance with the chosen diagonal for steps 1 and 3.
    /// [`Lumping::TpfaReference`] lumps with unit material conductivities.
    pub fn physics(
        &self,
        k: &EffectiveConductivity,
        source: &dyn Fn(&Point) -> f64,
        pressure: &dyn Fn(&Point) -> f64,
        lumping: Lumping,
    ) -> Result<Physics> {
        let flux_mass = self.flux_mass(k)?;
        let lumped = match lumping {
            Lumping::Tpfa => self.tpfa_lumping(k)?,
            Lumping::TpfaReference => self.tpfa_lumping(&self.reference_conductivity(k.aperture)?)?,
            Lumping::RowSum => lump(&flux_mass, LumpFlavor::RowSum)?,
            Lumping::Identity => lump(&flux_mass, LumpFlavor::Identity)?,
        };
        Ok(Physics {
            flux_mass,
            lumped,
            boundary_rhs: self.boundary_rhs(pressure),
            source: self.source(source, k.aperture),
        })
    }

    /// Unit bulk and fracture conductivity at the given aperture.
    pub fn reference_conductivity(&self, aperture: f64) -> Result<EffectiveConductivity> {
        EffectiveConductivity::new(
            aperture,
            ConductivityField::uniform(self.n_triangles(), 1.0),
            vec![1.0; self.network().len()],
        )
    }

    fn assemble(&self, r: &Resistivity) -> CsMat<f64> {
        let bulk = self.bulk();
        let mut trip = Vec::new();
        for t in 0..bulk.n_cells() {
            let m = flux_mass(&bulk.cell_points(t), 2, bulk.cell_volume(t), &r.bulk[t]);
            let local: Vec<(usize, f64)> = (0..3).map(|j| self.face_dof(t, j)).map(|(d, s)| (d, f64::from(s))).collect();
            for (i, &(di, si)) in local.iter().enumerate() {
                for (j, &(dj, sj)) in local.iter().enumerate() {
                    trip.push((di, dj, si * sj * m[i][j]));
                }
            }
        }
        for (c, fc) in self.fracture_cells().iter().enumerate() {
            let len = bulk.measure(1, fc.edge);
            for d in self.mortar_dofs()[c] {
                trip.push((d, d, r.normal[fc.fracture] / len));
            }
        }
        // fracture cells: P1 tangential flux between (tail, head) values
        let mut ends: Vec<[Option<(usize, f64)>; 2]> = vec![[None, None]; self.fracture_cells().len()];
        for (d, dof) in self.flux_dofs().iter().enumerate() {
            match *dof {
                FluxDof::Node { prev, next, .. } => {
                    ends[prev][1] = Some((d, 1.0));
                    ends[next][0] = Some((d, 1.0));
                }
                FluxDof::PointEnd { cell, point, at_head } => {
                    ends[cell][usize::from(at_head)] = Some((d, if at_head { 1.0 } else { -1.0 }));
                    trip.push((d, d, r.point[point]));
                }
                FluxDof::BoundaryEnd { cell, at_head, .. } => {
                    ends[cell][usize::from(at_head)] = Some((d, if at_head { 1.0 } else { -1.0 }));
                }
                _ => {}
            }
        }
        for (c, fc) in self.fracture_cells().iter().enumerate() {
            let w = bulk.measure(1, fc.edge) * r.tangential[fc.fracture] / 6.0;
            let local = [[2.0 * w, w], [w, 2.0 * w]];
            for (i, a) in ends[c].iter().enumerate() {
                for (j, b) in ends[c].iter().enumerate() {
                    if let (Some((da, sa)), Some((db, sb))) = (a, b) {
                        trip.push((*da, *db, sa * sb * local[i][j]));
                    }
                }
            }
        }
        from_triplets(self.n_flux(), self.n_flux(), trip)
    }

    fn tpfa(&self, r: &Resistivity, normal_resistivity: &dyn Fn(usize, usize) -> f64) -> Result<LumpedMass> {
        let bulk = self.bulk();
        let mut diag = vec![0.0; self.n_flux()];
        for t in 0..bulk.n_cells() {
            for (j, &e) in bulk.cell_faces(t).iter().enumerate() {
                let (d, _) = self.face_dof(t, j);
                diag[d] += bulk.centroid_face_distance(t, e) * normal_resistivity(t, e) / bulk.measure(1, e);
            }
        }
        for (c, fc) in self.fracture_cells().iter().enumerate() {
            let len = bulk.measure(1, fc.edge);
            for d in self.mortar_dofs()[c] {
                diag[d] += r.normal[fc.fracture] / len;
            }
        }
        let half = |c: usize| {
            let fc = &self.fracture_cells()[c];
            0.5 * bulk.measure(1, fc.edge) * r.tangential[fc.fracture]
        };
        for (d, dof) in self.flux_dofs().iter().enumerate() {
            match *dof {
                FluxDof::Node { prev, next, .. } => diag[d] += half(prev) + half(next),
                FluxDof::PointEnd { cell, point, .. } => diag[d] += half(cell) + r.point[point],
                FluxDof::BoundaryEnd { cell, .. } => diag[d] += half(cell),
                _ => {}
            }
        }
        LumpedMass::new(diag, LumpFlavor::Tpfa)
    }

    /// Velocity of the lowest-order flux field of triangle `t` at `x`, from
    /// the dof vector `q`.
    pub fn velocity_at(&self, t: usize, x: &Point, q: &[f64]) -> [f64; 2] {
        let bulk = self.bulk();
        let area = bulk.cell_volume(t);
        let mut u = [0.0; 2];
        // local face j is opposite vertex j
        for (j, p) in bulk.cell_points(t).iter().enumerate() {
            let (d, s) = self.face_dof(t, j);
            let flux = f64::from(s) * q[d];
            for k in 0..2 {
                u[k] += flux * (x[k] - p[k]) / (2.0 * area);
            }
        }
        u
    }

    pub fn cell_velocity(&self, t: usize, q: &[f64]) -> [f64; 2] {
        self.velocity_at(t, &self.bulk().centroid(2, t), q)
    }

    /// Length-averaged normal and tangential bulk velocity on both sides of
    /// the fractures selected by `pick`, taken at fracture edge midpoints.
    /// The normal part is the mortar flux density.
    pub fn interface_flow(&self, q: &[f64], pick: &dyn Fn(usize) -> bool) -> InterfaceFlow {
        let bulk = self.bulk();
        let mut normal = 0.0;
        let mut tangential = 0.0;
        let mut total = 0.0;
        for (c, fc) in self.fracture_cells().iter().enumerate() {
            if !pick(fc.fracture) {
                continue;
            }
            let len = bulk.measure(1, fc.edge);
            let (a, b) = (bulk.vertex(fc.tail), bulk.vertex(fc.head));
            let tau = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
            for (side, t) in [fc.left, fc.right].into_iter().enumerate() {
                normal += q[self.mortar_dofs()[c][side]].abs();
                let u = self.velocity_at(t, &bulk.centroid(1, fc.edge), q);
                tangential += (u[0] * tau[0] + u[1] * tau[1]).abs() * len;
                total += len;
            }
        }
        let total = if total > 0.0 { total } else { 1.0 };
        InterfaceFlow { normal: normal / total, tangential: tangential / total }
    }
}

/// Averaged flow magnitudes at fracture interfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceFlow {
    pub normal: f64,
    pub tangential: f64,
}
