//! Bulk triangulations that conform to a fracture network.

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::network::{segment_intersection, FractureNetwork};
use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;

/// Vertices closer than this fraction of the domain size are merged.
const MERGE_TOL: f64 = 1e-9;

/// Constrained Delaunay triangulation of the box `[lo, hi]` in which every
/// fracture is a chain of edges and every intersection a vertex, refined to
/// triangles of area at most `max_area` and angles of at least 25 degrees
/// where the constraints allow it.
pub fn conforming_mesh(network: &FractureNetwork, lo: [f64; 2], hi: [f64; 2], max_area: f64) -> Result<SimplicialMesh> {
    if !(hi[0] > lo[0] && hi[1] > lo[1]) {
        return Err(Error::InvalidMesh("empty domain box".into()));
    }
    if !(max_area > 0.0) {
        return Err(Error::InvalidMesh(format!("maximum triangle area {max_area} must be positive")));
    }
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let tol = MERGE_TOL * scale;
    for (i, f) in network.fractures.iter().enumerate() {
        for p in [f.start, f.end] {
            let inside = p[0] >= lo[0] - tol && p[0] <= hi[0] + tol && p[1] >= lo[1] - tol && p[1] <= hi[1] + tol;
            if !inside {
                return Err(Error::Fracture(format!("fracture {i} leaves the domain")));
            }
        }
    }

    let mut points: Vec<[f64; 2]> = vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
    let intern = |p: [f64; 2], points: &mut Vec<[f64; 2]>| -> usize {
        match points.iter().position(|q| (p[0] - q[0]).hypot(p[1] - q[1]) <= tol) {
            Some(i) => i,
            None => {
                points.push(p);
                points.len() - 1
            }
        }
    };
    let mut edges: Vec<[usize; 2]> = vec![[0, 1], [1, 2], [2, 3], [3, 0]];
    let fr = &network.fractures;
    for (i, f) in fr.iter().enumerate() {
        // split each fracture at its intersections with the others
        let mut cuts = vec![(0.0, f.start), (1.0, f.end)];
        for (j, g) in fr.iter().enumerate() {
            if i != j {
                if let Some(p) = segment_intersection(f, g, tol) {
                    cuts.push((f.locate(p).0, p));
                }
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ids: Vec<usize> = cuts.iter().map(|&(_, p)| intern(p, &mut points)).collect();
        for w in ids.windows(2) {
            if w[0] != w[1] {
                edges.push([w[0], w[1]]);
            }
        }
    }

    let verts: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let mut conflicts = 0usize;
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::try_bulk_load_cdt(verts, edges, |_| conflicts += 1)
        .map_err(|e| Error::InvalidMesh(format!("triangulation failed: {e:?}")))?;
    if conflicts > 0 {
        return Err(Error::Fracture("fractures overlap each other or the domain boundary".into()));
    }
    let params = RefinementParameters::new()
        .with_max_allowed_area(max_area)
        .with_angle_limit(AngleLimit::from_deg(25.0))
        .with_max_additional_vertices(100_000);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::InvalidMesh("mesh refinement hit the vertex limit".into()));
    }

    let coords: Vec<[f64; 3]> = cdt.vertices().map(|v| [v.position().x, v.position().y, 0.0]).collect();
    let cells: Vec<Vec<usize>> =
        cdt.inner_faces().map(|f| f.vertices().iter().map(|v| v.fix().index()).collect()).collect();
    SimplicialMesh::new(2, coords, &cells)
}
