use super::{Point, SimplicialMesh};
use crate::error::{Error, Result};

/// Boundary condition type of a boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// Pressure prescribed; the normal flux is free.
    Pressure,
    /// Normal flux prescribed (homogeneous); eliminated from the flux space.
    Flux,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Pressure => "pressure",
            BoundaryTag::Flux => "flux",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pressure" | "p" | "dirichlet" => Some(BoundaryTag::Pressure),
            "flux" | "q" | "neumann" => Some(BoundaryTag::Flux),
            _ => None,
        }
    }
}

/// Which combination of boundary conditions a tagging produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Pressure on the whole boundary.
    Dirichlet,
    /// Flux on the whole boundary; pressure is defined up to a constant.
    Neumann,
    /// Both tags present.
    Mixed,
}

/// One tag per mesh face; interior faces carry `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTags {
    tags: Vec<Option<BoundaryTag>>,
}

impl BoundaryTags {
    /// Tags every boundary face with the same condition.
    pub fn uniform(mesh: &SimplicialMesh, tag: BoundaryTag) -> Self {
        let tags = (0..mesh.n_faces())
            .map(|f| mesh.is_boundary_face(f).then_some(tag))
            .collect();
        Self { tags }
    }

    /// Builds tags from explicit `(face, tag)` pairs covering the boundary.
    pub fn from_pairs(mesh: &SimplicialMesh, pairs: &[(usize, BoundaryTag)]) -> Result<Self> {
        let mut tags = vec![None; mesh.n_faces()];
        for &(f, t) in pairs {
            if f >= mesh.n_faces() || !mesh.is_boundary_face(f) {
                return Err(Error::Boundary(format!("face {f} is not a boundary face")));
            }
            tags[f] = Some(t);
        }
        let out = Self { tags };
        out.check_complete(mesh)?;
        Ok(out)
    }

    fn check_complete(&self, mesh: &SimplicialMesh) -> Result<()> {
        match mesh.boundary_faces().into_iter().find(|&f| self.tags[f].is_none()) {
            Some(f) => Err(Error::Boundary(format!(
                "boundary face {:?} has no tag",
                mesh.entity(mesh.dim() - 1, f)
            ))),
            None => Ok(()),
        }
    }

    pub fn tag(&self, f: usize) -> Option<BoundaryTag> {
        self.tags[f]
    }

    pub fn n_faces(&self) -> usize {
        self.tags.len()
    }

    pub fn faces_with(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.tags.len()).filter(|&f| self.tags[f] == Some(tag)).collect()
    }

    pub fn regime(&self) -> Regime {
        let p = self.tags.iter().any(|t| *t == Some(BoundaryTag::Pressure));
        let q = self.tags.iter().any(|t| *t == Some(BoundaryTag::Flux));
        match (p, q) {
            (true, false) => Regime::Dirichlet,
            (false, true) => Regime::Neumann,
            _ => Regime::Mixed,
        }
    }
}

/// Tags boundary faces with `rule(face_centroid, outward_normal)`.
///
/// Every boundary face must receive a tag.
pub fn tag_boundary<F>(mesh: &SimplicialMesh, rule: F) -> Result<BoundaryTags>
where
    F: Fn(&Point, &Point) -> Option<BoundaryTag>,
{
    let faces: Vec<(usize, Point, Point)> = mesh
        .boundary_faces()
        .into_iter()
        .map(|f| {
            let (c, _) = mesh.face_cells(f);
            let n = mesh.outward_normal(c, f).expect("face belongs to its cell");
            (f, mesh.centroid(mesh.dim() - 1, f), n)
        })
        .collect();
    let tags = tag_faces(mesh.n_faces(), &faces, rule)?;
    Ok(BoundaryTags { tags })
}

fn tag_faces<F>(n_faces: usize, boundary: &[(usize, Point, Point)], rule: F) -> Result<Vec<Option<BoundaryTag>>>
where
    F: Fn(&Point, &Point) -> Option<BoundaryTag>,
{
    if boundary.is_empty() {
        return Err(Error::Boundary("mesh has no boundary faces".into()));
    }
    let mut tags = vec![None; n_faces];
    for (f, x, n) in boundary {
        match rule(x, n) {
            Some(t) => tags[*f] = Some(t),
            None => {
                return Err(Error::Boundary(format!(
                    "rule left the boundary face at {:?} untagged",
                    x
                )))
            }
        }
    }
    Ok(tags)
}
