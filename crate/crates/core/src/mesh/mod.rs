//! Simplicial meshes in 2D and 3D with every sub-entity enumerated.
//!
//! Entities of dimension `k` are stored as sorted vertex tuples in
//! lexicographic order. Cells keep their input order in the entity table but
//! are stored with a positive orientation for geometry.

mod io;
mod tags;

pub use io::{read_mesh, write_mesh, MeshFile};
pub use tags::{tag_boundary, BoundaryTag, BoundaryTags, Regime};

use std::collections::HashMap;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Spatial point. 2D meshes leave the last coordinate at zero.
pub type Point = [f64; 3];

pub(crate) const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct EntityTable {
    arity: usize,
    verts: Vec<usize>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl EntityTable {
    fn new(arity: usize, verts: Vec<usize>) -> Self {
        let lookup = verts
            .chunks(arity)
            .enumerate()
            .map(|(i, t)| (t.to_vec(), i))
            .collect();
        Self { arity, verts, lookup }
    }

    pub fn len(&self) -> usize {
        self.verts.len() / self.arity
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.verts[i * self.arity..(i + 1) * self.arity]
    }

    /// Index of a sorted vertex tuple.
    pub fn find(&self, sorted: &[usize]) -> Option<usize> {
        self.lookup.get(sorted).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.verts.chunks(self.arity)
    }
}

#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    orientation: Vec<i8>,
    entities: Vec<EntityTable>,
    cell_faces: Vec<usize>,
    cell_face_signs: Vec<i8>,
    face_cells: Vec<[usize; 2]>,
    measures: Vec<Vec<f64>>,
    centroids: Vec<Vec<Point>>,
}

impl SimplicialMesh {
    /// Builds a mesh from vertex coordinates and cell connectivity.
    ///
    /// Cells may be given in any vertex order. Fails on out-of-range indices,
    /// repeated or degenerate cells, unreferenced vertices and faces shared by
    /// more than two cells.
    pub fn new(dim: usize, vertices: Vec<Point>, cells: &[Vec<usize>]) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidMesh(format!("dimension {dim} is not 2 or 3")));
        }
        if cells.is_empty() {
            return Err(Error::InvalidMesh("no cells".into()));
        }
        let nv = vertices.len();
        let arity = dim + 1;
        let mut used = vec![false; nv];
        let mut sorted_cells = Vec::with_capacity(cells.len() * arity);
        let mut stored = Vec::with_capacity(cells.len() * arity);
        let mut orientation = Vec::with_capacity(cells.len());
        let scale = bounding_scale(&vertices);

        for (c, cell) in cells.iter().enumerate() {
            if cell.len() != arity {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} has {} vertices, expected {arity}",
                    cell.len()
                )));
            }
            let mut s = cell.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh(format!("cell {c} repeats a vertex")));
            }
            if let Some(&bad) = s.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} references vertex {bad} but only {nv} vertices exist"
                )));
            }
            for &v in &s {
                used[v] = true;
            }
            let pts: Vec<Point> = s.iter().map(|&v| vertices[v]).collect();
            let vol = signed_volume(&pts, dim);
            if vol.abs() <= 1e-14 * scale.powi(dim as i32) {
                return Err(Error::InvalidMesh(format!("cell {c} is degenerate")));
            }
            let sign: i8 = if vol > 0.0 { 1 } else { -1 };
            orientation.push(sign);
            sorted_cells.extend_from_slice(&s);
            let mut o = s.clone();
            if sign < 0 {
                o.swap(dim - 1, dim);
            }
            stored.extend_from_slice(&o);
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any cell")));
        }

        let mut entities = Vec::with_capacity(dim + 1);
        entities.push(EntityTable::new(1, (0..nv).collect()));
        for k in 1..dim {
            let mut subs: Vec<Vec<usize>> = Vec::new();
            for cell in sorted_cells.chunks(arity) {
                for_each_subset(cell, k + 1, |t| subs.push(t.to_vec()));
            }
            subs.sort_unstable();
            subs.dedup();
            entities.push(EntityTable::new(k + 1, subs.concat()));
        }
        let cell_table = EntityTable::new(arity, sorted_cells);
        if cell_table.lookup.len() != cells.len() {
            return Err(Error::InvalidMesh("duplicate cells".into()));
        }
        entities.push(cell_table);

        let faces = &entities[dim - 1];
        let mut cell_faces = Vec::with_capacity(cells.len() * arity);
        let mut cell_face_signs = Vec::with_capacity(cells.len() * arity);
        let mut face_cells = vec![[NONE; 2]; faces.len()];
        let mut buf = Vec::with_capacity(dim);
        for (c, cell) in entities[dim].iter().enumerate() {
            for j in 0..arity {
                buf.clear();
                buf.extend(cell.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v));
                let f = faces.find(&buf).expect("face enumerated from cells");
                cell_faces.push(f);
                let parity: i8 = if j % 2 == 0 { 1 } else { -1 };
                cell_face_signs.push(parity * orientation[c]);
                let slot = &mut face_cells[f];
                if slot[0] == NONE {
                    slot[0] = c;
                } else if slot[1] == NONE {
                    slot[1] = c;
                } else {
                    return Err(Error::InvalidMesh(format!(
                        "non-manifold connectivity: face {:?} is shared by more than two cells",
                        faces.get(f)
                    )));
                }
            }
        }

        let mut measures = Vec::with_capacity(dim + 1);
        let mut centroids = Vec::with_capacity(dim + 1);
        for (k, table) in entities.iter().enumerate() {
            let mut m = Vec::with_capacity(table.len());
            let mut x = Vec::with_capacity(table.len());
            for t in table.iter() {
                let pts: Vec<Point> = t.iter().map(|&v| vertices[v]).collect();
                m.push(if k == 0 { 1.0 } else { simplex_measure(&pts) });
                x.push(centroid(&pts));
            }
            measures.push(m);
            centroids.push(x);
        }

        Ok(Self {
            dim,
            vertices,
            cells: stored,
            orientation,
            entities,
            cell_faces,
            cell_face_signs,
            face_cells,
            measures,
            centroids,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.orientation.len()
    }

    pub fn n_faces(&self) -> usize {
        self.entities[self.dim - 1].len()
    }

    pub fn n_entities(&self, k: usize) -> usize {
        self.entities[k].len()
    }

    pub fn entities(&self, k: usize) -> &EntityTable {
        &self.entities[k]
    }

    /// Vertices of entity `i` of dimension `k`, sorted ascending.
    pub fn entity(&self, k: usize, i: usize) -> &[usize] {
        self.entities[k].get(i)
    }

    /// Looks up an entity by its vertices in any order.
    pub fn find_entity(&self, k: usize, verts: &[usize]) -> Option<usize> {
        let mut s = verts.to_vec();
        s.sort_unstable();
        self.entities.get(k)?.find(&s)
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Cell vertices in positive orientation.
    pub fn cell(&self, c: usize) -> &[usize] {
        let a = self.dim + 1;
        &self.cells[c * a..(c + 1) * a]
    }

    /// Cell vertices sorted ascending; local face `j` is opposite entry `j`.
    pub fn cell_sorted(&self, c: usize) -> &[usize] {
        self.entities[self.dim].get(c)
    }

    /// Sign of the sorted vertex order relative to the positive orientation.
    pub fn cell_orientation(&self, c: usize) -> i8 {
        self.orientation[c]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cell_sorted(c).iter().map(|&v| self.vertices[v]).collect()
    }

    /// Global faces of a cell, local face `j` opposite sorted vertex `j`.
    pub fn cell_faces(&self, c: usize) -> &[usize] {
        let a = self.dim + 1;
        &self.cell_faces[c * a..(c + 1) * a]
    }

    /// +1 where the global face orientation points out of the cell.
    pub fn cell_face_signs(&self, c: usize) -> &[i8] {
        let a = self.dim + 1;
        &self.cell_face_signs[c * a..(c + 1) * a]
    }

    /// The one or two cells sharing face `f`.
    pub fn face_cells(&self, f: usize) -> (usize, Option<usize>) {
        let [a, b] = self.face_cells[f];
        (a, (b != NONE).then_some(b))
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_cells[f][1] == NONE
    }

    pub fn boundary_faces(&self) -> Vec<usize> {
        (0..self.n_faces()).filter(|&f| self.is_boundary_face(f)).collect()
    }

    pub fn measure(&self, k: usize, i: usize) -> f64 {
        self.measures[k][i]
    }

    pub fn measures(&self, k: usize) -> &[f64] {
        &self.measures[k]
    }

    pub fn centroid(&self, k: usize, i: usize) -> Point {
        self.centroids[k][i]
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        self.measures[self.dim][c]
    }

    /// Local index of face `f` within cell `c`.
    pub fn local_face(&self, c: usize, f: usize) -> Option<usize> {
        self.cell_faces(c).iter().position(|&g| g == f)
    }

    /// Unit normal of face `f` pointing out of cell `c`.
    pub fn outward_normal(&self, c: usize, f: usize) -> Option<Point> {
        let j = self.local_face(c, f)?;
        let g = barycentric_gradients(&self.cell_points(c), self.dim)[j];
        let n = norm(&g);
        Some([-g[0] / n, -g[1] / n, -g[2] / n])
    }

    /// Distance from the cell centroid to the hyperplane of one of its faces.
    pub fn centroid_face_distance(&self, c: usize, f: usize) -> f64 {
        let n = self.dim as f64;
        n * self.cell_volume(c) / ((n + 1.0) * self.measure(self.dim - 1, f))
    }

    /// Vertices lying on at least one boundary face.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.n_vertices()];
        for f in self.boundary_faces() {
            for &v in self.entity(self.dim - 1, f) {
                on[v] = true;
            }
        }
        on
    }

    /// Smallest edge length, a mesh-size proxy for perturbations.
    pub fn min_edge_length(&self) -> f64 {
        self.measures[1].iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.measures[1].iter().copied().fold(0.0, f64::max)
    }

    /// SHA-256 over dimension, coordinates and connectivity.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        self.hash_into(&mut h);
        h.finalize().into()
    }

    pub(crate) fn hash_into(&self, h: &mut Sha256) {
        h.update((self.dim as u64).to_le_bytes());
        h.update((self.vertices.len() as u64).to_le_bytes());
        for p in &self.vertices {
            for x in p {
                h.update(x.to_le_bytes());
            }
        }
        h.update((self.n_cells() as u64).to_le_bytes());
        for &v in &self.cells {
            h.update((v as u64).to_le_bytes());
        }
    }
}

/// Structured simplicial mesh of a box with `divisions` intervals per axis.
///
/// 2D splits each square along the diagonal through its lower-left corner;
/// 3D uses the six-tetrahedron Kuhn split of each cube. Vertices are numbered
/// with the first coordinate running fastest.
pub fn build_structured(dim: usize, divisions: usize, lo: Point, hi: Point) -> Result<SimplicialMesh> {
    build_box(dim, &vec![divisions; dim], lo, hi)
}

/// Like [`build_structured`] with a separate division count per axis.
pub fn build_box(dim: usize, divisions: &[usize], lo: Point, hi: Point) -> Result<SimplicialMesh> {
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidMesh(format!("dimension {dim} is not 2 or 3")));
    }
    if divisions.len() != dim || divisions.iter().any(|&d| d == 0) {
        return Err(Error::InvalidMesh("need one positive division count per axis".into()));
    }
    if (0..dim).any(|a| hi[a] <= lo[a]) {
        return Err(Error::InvalidMesh("empty extent".into()));
    }
    let n: Vec<usize> = divisions.to_vec();
    let np: Vec<usize> = n.iter().map(|d| d + 1).collect();
    let nz = if dim == 3 { np[2] } else { 1 };
    let idx = |i: usize, j: usize, k: usize| i + np[0] * (j + np[1] * k);
    let mut vertices = Vec::with_capacity(np[0] * np[1] * nz);
    for k in 0..nz {
        for j in 0..np[1] {
            for i in 0..np[0] {
                let t = [i as f64 / n[0] as f64, j as f64 / n[1] as f64, if dim == 3 { k as f64 / n[2] as f64 } else { 0.0 }];
                let mut p = [0.0; 3];
                for a in 0..dim {
                    p[a] = lo[a] + t[a] * (hi[a] - lo[a]);
                }
                vertices.push(p);
            }
        }
    }
    let mut cells = Vec::new();
    if dim == 2 {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let (v00, v10, v01, v11) = (idx(i, j, 0), idx(i + 1, j, 0), idx(i, j + 1, 0), idx(i + 1, j + 1, 0));
                cells.push(vec![v00, v10, v11]);
                cells.push(vec![v00, v11, v01]);
            }
        }
    } else {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    for perm in PERMS {
                        let mut c = [i, j, k];
                        let mut tet = vec![idx(c[0], c[1], c[2])];
                        for axis in perm {
                            c[axis] += 1;
                            tet.push(idx(c[0], c[1], c[2]));
                        }
                        cells.push(tet);
                    }
                }
            }
        }
    }
    SimplicialMesh::new(dim, vertices, &cells)
}

/// Moves every interior vertex by a random offset of at most `amplitude` per
/// coordinate. Fails if any cell loses its orientation.
pub fn perturb_interior(mesh: &SimplicialMesh, amplitude: f64, seed: u64) -> Result<SimplicialMesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let on_boundary = mesh.boundary_vertices();
    let mut vertices = mesh.vertices().to_vec();
    for (v, p) in vertices.iter_mut().enumerate() {
        if on_boundary[v] {
            continue;
        }
        for x in p.iter_mut().take(mesh.dim()) {
            *x += rng.random_range(-amplitude..=amplitude);
        }
    }
    let cells: Vec<Vec<usize>> = (0..mesh.n_cells()).map(|c| mesh.cell(c).to_vec()).collect();
    let moved = SimplicialMesh::new(mesh.dim(), vertices, &cells)?;
    for c in 0..moved.n_cells() {
        if moved.cell_orientation(c) != mesh.cell_orientation(c) {
            return Err(Error::InvalidMesh(format!("perturbation inverted cell {c}")));
        }
    }
    Ok(moved)
}

fn for_each_subset(set: &[usize], size: usize, mut f: impl FnMut(&[usize])) {
    let n = set.len();
    let mut idx: Vec<usize> = (0..size).collect();
    let mut buf = vec![0; size];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = set[i];
        }
        f(&buf);
        let mut i = size;
        while i > 0 && idx[i - 1] == i - 1 + n - size {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn bounding_scale(vertices: &[Point]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in vertices {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn centroid(pts: &[Point]) -> Point {
    let mut c = [0.0; 3];
    for p in pts {
        for a in 0..3 {
            c[a] += p[a];
        }
    }
    let n = pts.len() as f64;
    [c[0] / n, c[1] / n, c[2] / n]
}

/// Signed volume of a full-dimensional simplex.
pub(crate) fn signed_volume(pts: &[Point], dim: usize) -> f64 {
    let j = jacobian(pts, dim);
    let fact = if dim == 2 { 2.0 } else { 6.0 };
    j.determinant() / fact
}

/// Unsigned measure of a k-simplex embedded in 3-space.
pub(crate) fn simplex_measure(pts: &[Point]) -> f64 {
    let k = pts.len() - 1;
    let e: Vec<Point> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
    let mut g = nalgebra::DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            g[(a, b)] = dot(&e[a], &e[b]);
        }
    }
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    g.determinant().max(0.0).sqrt() / fact
}

/// Columns are the edge vectors from the first vertex; 2D pads with e_z.
fn jacobian(pts: &[Point], dim: usize) -> Matrix3<f64> {
    let mut j = Matrix3::zeros();
    for a in 0..dim {
        let e = sub(&pts[a + 1], &pts[0]);
        for r in 0..3 {
            j[(r, a)] = e[r];
        }
    }
    if dim == 2 {
        j[(2, 2)] = 1.0;
    }
    j
}

/// Gradients of the barycentric coordinates of a full-dimensional simplex.
pub(crate) fn barycentric_gradients(pts: &[Point], dim: usize) -> Vec<Point> {
    let inv = jacobian(pts, dim)
        .try_inverse()
        .expect("non-degenerate cells are checked at construction");
    let mut grads = vec![[0.0; 3]; dim + 1];
    for a in 0..dim {
        for r in 0..dim {
            grads[a + 1][r] = inv[(a, r)];
        }
    }
    for a in 1..=dim {
        for r in 0..3 {
            grads[0][r] -= grads[a][r];
        }
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dim: usize, n: usize) -> SimplicialMesh {
        build_structured(dim, n, [0.0; 3], [1.0; 3]).unwrap()
    }

    #[test]
    fn single_square_counts() {
        let m = unit(2, 1);
        assert_eq!((m.n_vertices(), m.n_entities(1), m.n_cells()), (4, 5, 2));
    }

    #[test]
    fn eight_by_eight_counts_and_area() {
        let m = unit(2, 8);
        assert_eq!(m.n_cells(), 128);
        assert_eq!(m.n_vertices(), 81);
        let area: f64 = m.measures(2).iter().sum();
        assert!((area - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kuhn_cube_entities() {
        let m = unit(3, 1);
        let counts: Vec<usize> = (0..=3).map(|k| m.n_entities(k)).collect();
        assert_eq!(counts, vec![8, 19, 18, 6]);
        let vol: f64 = m.measures(3).iter().sum();
        assert!((vol - 1.0).abs() < 1e-14);
    }

    #[test]
    fn volumes_positive_under_stored_orientation() {
        for dim in [2, 3] {
            let m = unit(dim, 3);
            for c in 0..m.n_cells() {
                let pts: Vec<Point> = m.cell(c).iter().map(|&v| m.vertex(v)).collect();
                assert!(signed_volume(&pts, dim) > 0.0);
            }
        }
    }

    #[test]
    fn subsets_enumerated_in_order() {
        let mut out = Vec::new();
        for_each_subset(&[1, 4, 6, 9], 2, |s| out.push(s.to_vec()));
        assert_eq!(out, vec![vec![1, 4], vec![1, 6], vec![1, 9], vec![4, 6], vec![4, 9], vec![6, 9]]);
        let mut all = Vec::new();
        for_each_subset(&[2, 3, 5], 3, |s| all.push(s.to_vec()));
        assert_eq!(all, vec![vec![2, 3, 5]]);
    }

    #[test]
    fn outward_normals_point_away() {
        let m = unit(3, 2);
        for c in 0..m.n_cells() {
            let xc = m.centroid(3, c);
            for &f in m.cell_faces(c) {
                let n = m.outward_normal(c, f).unwrap();
                let d = sub(&m.centroid(2, f), &xc);
                assert!(dot(&n, &d) > 0.0);
                let dist = dot(&n, &d);
                assert!((dist - m.centroid_face_distance(c, f)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn non_manifold_rejected() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [-1.0, 0.5, 0.0]];
        let cells = vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]];
        let err = SimplicialMesh::new(2, v, &cells).unwrap_err();
        assert!(err.to_string().contains("non-manifold"));
    }

    #[test]
    fn out_of_range_rejected() {
        let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(SimplicialMesh::new(2, v, &[vec![0, 1, 7]]).is_err());
    }

    #[test]
    fn perturbation_keeps_boundary() {
        let m = unit(2, 6);
        let p = perturb_interior(&m, 0.1 / 6.0, 3).unwrap();
        let on = m.boundary_vertices();
        for v in 0..m.n_vertices() {
            if on[v] {
                assert_eq!(m.vertex(v), p.vertex(v));
            }
        }
        let area: f64 = p.measures(2).iter().sum();
        assert!((area - 1.0).abs() < 1e-13);
    }
}
