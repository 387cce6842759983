//! Mixed-dimensional mesh: a triangulated bulk cut open along fracture
//! chains, the fracture segments as 1D cells and the intersection points as
//! 0D cells.
//!
//! Flux unknowns, in this order:
//! - bulk edges off the fractures (oriented like the mesh edge),
//! - one mortar per fracture cell and side, positive from the bulk into the
//!   fracture,
//! - fracture nodes between two cells of one fracture, positive along the
//!   fracture direction `start → end`,
//! - fracture ends at an intersection point or on the outer boundary,
//!   positive out of the fracture cell.
//!
//! Fracture tips carry no unknown, which imposes zero flux there.
//!
//! Potentials live on bulk nodes only. A node on a fracture has one value
//! per side ("sector"); elsewhere a node has a single value.

use std::collections::BTreeMap;

use sprs::CsMat;

use super::network::{segment_intersection, FractureNetwork};
use crate::complex::{composition_defect, IncidenceMatrix};
use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;
use crate::sparse::from_triplets;

/// Relative tolerance for locating vertices on fracture lines.
const GEOM_TOL: f64 = 1e-9;

/// One segment of a fracture, a bulk edge seen from both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FractureCell {
    pub fracture: usize,
    pub edge: usize,
    /// Vertex nearer to the fracture start.
    pub tail: usize,
    pub head: usize,
    /// Triangle to the left of `tail → head`.
    pub left: usize,
    pub right: usize,
}

/// Intersection of two or more fractures, a 0D cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionPoint {
    pub vertex: usize,
    /// Fractures meeting here, ascending.
    pub fractures: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxDof {
    Bulk { edge: usize },
    Mortar { cell: usize, triangle: usize },
    Node { vertex: usize, prev: usize, next: usize },
    PointEnd { cell: usize, point: usize, at_head: bool },
    BoundaryEnd { cell: usize, vertex: usize, at_head: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tip {
    pub fracture: usize,
    pub vertex: usize,
}

#[derive(Debug, Clone)]
pub struct MixedDimMesh {
    bulk: SimplicialMesh,
    network: FractureNetwork,
    cells: Vec<FractureCell>,
    points: Vec<IntersectionPoint>,
    tips: Vec<Tip>,
    /// Sector of each (triangle, local vertex), flattened.
    sectors: Vec<usize>,
    n_sectors: usize,
    dofs: Vec<FluxDof>,
    /// Flux dof of each bulk edge; fracture edges map to `None`.
    edge_dof: Vec<Option<usize>>,
    edge_cell: Vec<Option<usize>>,
    /// Mortar dofs of each fracture cell, left side first.
    mortar_dofs: Vec<[usize; 2]>,
    div: IncidenceMatrix,
    curl: IncidenceMatrix,
}

impl MixedDimMesh {
    /// Pairs a bulk triangulation with a fracture network whose segments are
    /// unions of bulk edges and whose intersections are bulk vertices.
    pub fn new(bulk: SimplicialMesh, network: FractureNetwork) -> Result<Self> {
        if bulk.dim() != 2 {
            return Err(Error::Fracture("mixed-dimensional meshes need a 2D bulk".into()));
        }
        let scale = bounding_size(&bulk);
        let tol = GEOM_TOL * scale;

        let chains = network
            .fractures
            .iter()
            .enumerate()
            .map(|(i, _)| fracture_chain(&bulk, &network, i, tol))
            .collect::<Result<Vec<_>>>()?;

        let mut edge_cell: Vec<Option<usize>> = vec![None; bulk.n_faces()];
        let mut cells: Vec<FractureCell> = Vec::new();
        let mut chain_cells: Vec<Vec<usize>> = Vec::with_capacity(chains.len());
        for (i, chain) in chains.iter().enumerate() {
            let mut ids = Vec::with_capacity(chain.len() - 1);
            for w in chain.windows(2) {
                let (tail, head) = (w[0], w[1]);
                let mut key = [tail, head];
                key.sort_unstable();
                let edge = bulk.find_entity(1, &key).ok_or_else(|| {
                    Error::Fracture(format!("non-conforming fracture {i}: vertices {tail} and {head} share no edge"))
                })?;
                let (t0, t1) = bulk.face_cells(edge);
                let t1 = t1.ok_or_else(|| Error::Fracture(format!("fracture {i} runs along the outer boundary")))?;
                if let Some(other) = edge_cell[edge] {
                    return Err(Error::Fracture(format!(
                        "fractures {} and {i} overlap",
                        cells[other].fracture
                    )));
                }
                let (left, right) = if is_left(&bulk, tail, head, t0) { (t0, t1) } else { (t1, t0) };
                edge_cell[edge] = Some(cells.len());
                ids.push(cells.len());
                cells.push(FractureCell { fracture: i, edge, tail, head, left, right });
            }
            chain_cells.push(ids);
        }

        // intersection points, grouped by vertex
        let mut at_vertex: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let fr = &network.fractures;
        for i in 0..fr.len() {
            for j in i + 1..fr.len() {
                let Some(p) = segment_intersection(&fr[i], &fr[j], tol) else { continue };
                let v = chains[i]
                    .iter()
                    .copied()
                    .find(|&v| dist(&bulk, v, p) <= tol)
                    .filter(|&v| chains[j].contains(&v))
                    .ok_or_else(|| {
                        Error::Fracture(format!("dangling intersection of fractures {i} and {j} at {p:?}"))
                    })?;
                let e = at_vertex.entry(v).or_default();
                e.extend([i, j]);
            }
        }
        let points: Vec<IntersectionPoint> = at_vertex
            .into_iter()
            .map(|(vertex, mut fractures)| {
                fractures.sort_unstable();
                fractures.dedup();
                IntersectionPoint { vertex, fractures }
            })
            .collect();
        let point_of = |v: usize| points.iter().position(|p| p.vertex == v);

        let (sectors, n_sectors) = build_sectors(&bulk, &edge_cell);

        let mut dofs = Vec::new();
        let mut edge_dof = vec![None; bulk.n_faces()];
        for e in 0..bulk.n_faces() {
            if edge_cell[e].is_none() {
                edge_dof[e] = Some(dofs.len());
                dofs.push(FluxDof::Bulk { edge: e });
            }
        }
        let mut mortar_dofs = Vec::with_capacity(cells.len());
        for (c, fc) in cells.iter().enumerate() {
            mortar_dofs.push([dofs.len(), dofs.len() + 1]);
            dofs.push(FluxDof::Mortar { cell: c, triangle: fc.left });
            dofs.push(FluxDof::Mortar { cell: c, triangle: fc.right });
        }
        let on_boundary = bulk.boundary_vertices();
        let mut ends = Vec::new();
        let mut tips = Vec::new();
        for (i, ids) in chain_cells.iter().enumerate() {
            for w in ids.windows(2) {
                let vertex = cells[w[0]].head;
                match point_of(vertex) {
                    Some(p) => {
                        ends.push(FluxDof::PointEnd { cell: w[0], point: p, at_head: true });
                        ends.push(FluxDof::PointEnd { cell: w[1], point: p, at_head: false });
                    }
                    None => dofs.push(FluxDof::Node { vertex, prev: w[0], next: w[1] }),
                }
            }
            let first = ids[0];
            let last = *ids.last().expect("chains have a cell");
            for (cell, vertex, at_head) in [(first, cells[first].tail, false), (last, cells[last].head, true)] {
                if let Some(point) = point_of(vertex) {
                    ends.push(FluxDof::PointEnd { cell, point, at_head });
                } else if on_boundary[vertex] {
                    ends.push(FluxDof::BoundaryEnd { cell, vertex, at_head });
                } else {
                    tips.push(Tip { fracture: i, vertex });
                }
            }
        }
        dofs.extend(ends);

        let mut mesh = Self {
            bulk,
            network,
            cells,
            points,
            tips,
            sectors,
            n_sectors,
            dofs,
            edge_dof,
            edge_cell,
            mortar_dofs,
            div: CsMat::zero((0, 0)),
            curl: CsMat::zero((0, 0)),
        };
        mesh.div = mesh.build_div();
        mesh.curl = mesh.build_curl();
        let defect = composition_defect(&mesh.div, &mesh.curl);
        if defect != 0 {
            return Err(Error::Operator(format!("mixed-dimensional divergence of curl has entry {defect}")));
        }
        Ok(mesh)
    }

    pub fn bulk(&self) -> &SimplicialMesh {
        &self.bulk
    }

    pub fn network(&self) -> &FractureNetwork {
        &self.network
    }

    pub fn fracture_cells(&self) -> &[FractureCell] {
        &self.cells
    }

    pub fn intersections(&self) -> &[IntersectionPoint] {
        &self.points
    }

    pub fn tips(&self) -> &[Tip] {
        &self.tips
    }

    pub fn flux_dofs(&self) -> &[FluxDof] {
        &self.dofs
    }

    /// Mortar dofs `[left, right]` of each fracture cell.
    pub fn mortar_dofs(&self) -> &[[usize; 2]] {
        &self.mortar_dofs
    }

    /// Fracture cell lying on a bulk edge.
    pub fn edge_fracture_cell(&self, edge: usize) -> Option<usize> {
        self.edge_cell[edge]
    }

    /// Flux dof of a bulk edge, `None` on fracture edges.
    pub fn edge_dof(&self, edge: usize) -> Option<usize> {
        self.edge_dof[edge]
    }

    /// Number of subdomains of dimension `d`: one bulk, one per fracture,
    /// one per intersection.
    pub fn n_subdomains(&self, d: usize) -> usize {
        match d {
            2 => 1,
            1 => self.network.len(),
            0 => self.points.len(),
            _ => 0,
        }
    }

    pub fn n_triangles(&self) -> usize {
        self.bulk.n_cells()
    }

    /// Triangles, then fracture cells, then intersection points.
    pub fn n_cells(&self) -> usize {
        self.bulk.n_cells() + self.cells.len() + self.points.len()
    }

    pub fn n_flux(&self) -> usize {
        self.dofs.len()
    }

    pub fn n_potential(&self) -> usize {
        self.n_sectors
    }

    /// Row of fracture cell `c` in the cell numbering.
    pub fn fracture_row(&self, c: usize) -> usize {
        self.bulk.n_cells() + c
    }

    pub fn point_row(&self, p: usize) -> usize {
        self.bulk.n_cells() + self.cells.len() + p
    }

    /// Potential dof of bulk vertex `v` as seen from triangle `t`.
    pub fn sector(&self, t: usize, v: usize) -> usize {
        let j = self.bulk.cell_sorted(t).iter().position(|&w| w == v).expect("vertex of triangle");
        self.sectors[3 * t + j]
    }

    pub fn div(&self) -> &IncidenceMatrix {
        &self.div
    }

    pub fn curl(&self) -> &IncidenceMatrix {
        &self.curl
    }

    /// Outward sign of bulk edge `e` in triangle `t`.
    pub(crate) fn edge_sign(&self, t: usize, e: usize) -> i32 {
        let j = self.bulk.local_face(t, e).expect("edge of triangle");
        i32::from(self.bulk.cell_face_signs(t)[j])
    }

    /// Flux dof and sign carrying the outward flux of local face `j` of `t`.
    pub(crate) fn face_dof(&self, t: usize, j: usize) -> (usize, i32) {
        let e = self.bulk.cell_faces(t)[j];
        match self.edge_dof[e] {
            Some(d) => (d, i32::from(self.bulk.cell_face_signs(t)[j])),
            None => {
                let c = self.edge_cell[e].expect("fracture edge");
                let side = if self.cells[c].left == t { 0 } else { 1 };
                (self.mortar_dofs[c][side], 1)
            }
        }
    }

    fn build_div(&self) -> IncidenceMatrix {
        let mut trip = Vec::new();
        for (d, dof) in self.dofs.iter().enumerate() {
            match *dof {
                FluxDof::Bulk { edge } => {
                    let (t0, t1) = self.bulk.face_cells(edge);
                    for t in std::iter::once(t0).chain(t1) {
                        trip.push((t, d, self.edge_sign(t, edge)));
                    }
                }
                FluxDof::Mortar { cell, triangle } => {
                    trip.push((triangle, d, 1));
                    trip.push((self.fracture_row(cell), d, -1));
                }
                FluxDof::Node { prev, next, .. } => {
                    trip.push((self.fracture_row(prev), d, 1));
                    trip.push((self.fracture_row(next), d, -1));
                }
                FluxDof::PointEnd { cell, point, .. } => {
                    trip.push((self.fracture_row(cell), d, 1));
                    trip.push((self.point_row(point), d, -1));
                }
                FluxDof::BoundaryEnd { cell, .. } => trip.push((self.fracture_row(cell), d, 1)),
            }
        }
        from_triplets(self.n_cells(), self.n_flux(), trip)
    }

    fn build_curl(&self) -> IncidenceMatrix {
        let mut trip = Vec::new();
        for (d, dof) in self.dofs.iter().enumerate() {
            match *dof {
                FluxDof::Bulk { edge } => {
                    let t = self.bulk.face_cells(edge).0;
                    let ab = self.bulk.entity(1, edge);
                    trip.push((d, self.sector(t, ab[1]), 1));
                    trip.push((d, self.sector(t, ab[0]), -1));
                }
                FluxDof::Mortar { cell, triangle } => {
                    let edge = self.cells[cell].edge;
                    let s = self.edge_sign(triangle, edge);
                    let ab = self.bulk.entity(1, edge);
                    trip.push((d, self.sector(triangle, ab[1]), s));
                    trip.push((d, self.sector(triangle, ab[0]), -s));
                }
                FluxDof::Node { vertex, prev, .. } => self.jump(&mut trip, d, prev, vertex, 1),
                FluxDof::PointEnd { cell, at_head, .. } | FluxDof::BoundaryEnd { cell, at_head, .. } => {
                    let c = &self.cells[cell];
                    let (v, s) = if at_head { (c.head, 1) } else { (c.tail, -1) };
                    self.jump(&mut trip, d, cell, v, s);
                }
            }
        }
        from_triplets(self.n_flux(), self.n_sectors, trip)
    }

    /// `s · (left − right)` potential jump across fracture cell `c` at `v`.
    fn jump(&self, trip: &mut Vec<(usize, usize, i32)>, row: usize, c: usize, v: usize, s: i32) {
        let fc = &self.cells[c];
        trip.push((row, self.sector(fc.left, v), s));
        trip.push((row, self.sector(fc.right, v), -s));
    }
}

/// Vertices on fracture `i`, ordered from its start to its end.
fn fracture_chain(bulk: &SimplicialMesh, network: &FractureNetwork, i: usize, tol: f64) -> Result<Vec<usize>> {
    let f = &network.fractures[i];
    let len = f.length();
    let mut on: Vec<(f64, usize)> = bulk
        .vertices()
        .iter()
        .enumerate()
        .filter_map(|(v, x)| {
            let (t, d) = f.locate([x[0], x[1]]);
            (d <= tol && t * len >= -tol && t * len <= len + tol).then_some((t, v))
        })
        .collect();
    on.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ends_match = on.len() >= 2
        && dist(bulk, on[0].1, f.start) <= tol
        && dist(bulk, on[on.len() - 1].1, f.end) <= tol;
    if !ends_match {
        return Err(Error::Fracture(format!("non-conforming fracture {i}: its end points are not mesh vertices")));
    }
    Ok(on.into_iter().map(|(_, v)| v).collect())
}

fn dist(bulk: &SimplicialMesh, v: usize, p: [f64; 2]) -> f64 {
    let x = bulk.vertex(v);
    (x[0] - p[0]).hypot(x[1] - p[1])
}

fn bounding_size(mesh: &SimplicialMesh) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for x in mesh.vertices() {
        for k in 0..2 {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    (hi[0] - lo[0]).max(hi[1] - lo[1])
}

/// Whether triangle `t` lies to the left of the directed edge `a → b`.
fn is_left(bulk: &SimplicialMesh, a: usize, b: usize, t: usize) -> bool {
    let opp = *bulk.cell_sorted(t).iter().find(|&&v| v != a && v != b).expect("triangle has a third vertex");
    let (pa, pb, po) = (bulk.vertex(a), bulk.vertex(b), bulk.vertex(opp));
    (pb[0] - pa[0]) * (po[1] - pa[1]) - (pb[1] - pa[1]) * (po[0] - pa[0]) > 0.0
}

/// Merges (triangle, vertex) corners across every non-fracture edge.
fn build_sectors(bulk: &SimplicialMesh, edge_cell: &[Option<usize>]) -> (Vec<usize>, usize) {
    let n = 3 * bulk.n_cells();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let corner = |t: usize, v: usize| 3 * t + bulk.cell_sorted(t).iter().position(|&w| w == v).expect("corner");
    for e in 0..bulk.n_faces() {
        if edge_cell[e].is_some() {
            continue;
        }
        let (t0, Some(t1)) = bulk.face_cells(e) else { continue };
        for &v in bulk.entity(1, e) {
            let a = find(&mut parent, corner(t0, v));
            let b = find(&mut parent, corner(t1, v));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut id = vec![usize::MAX; n];
    let mut sectors = vec![0; n];
    let mut next = 0;
    for k in 0..n {
        let r = find(&mut parent, k);
        if id[r] == usize::MAX {
            id[r] = next;
            next += 1;
        }
        sectors[k] = id[r];
    }
    (sectors, next)
}
