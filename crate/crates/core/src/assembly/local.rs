//! Element matrices of the lowest-order Whitney forms on one simplex.
//!
//! Degrees of freedom are integrals over entities, so every basis function
//! has unit integral over its own entity. Local entity `j` of a face family
//! is the face opposite local vertex `j`; edges are listed in lexicographic
//! order of local vertex pairs.

use nalgebra::Matrix3;

use crate::mesh::{barycentric_gradients, sub, Point};

/// `∫ λ_k λ_l` over a simplex of measure `vol` in dimension `dim`.
fn bary_moment(dim: usize, vol: f64, k: usize, l: usize) -> f64 {
    let n = dim as f64;
    let base = vol / ((n + 1.0) * (n + 2.0));
    if k == l {
        2.0 * base
    } else {
        base
    }
}

/// Nodal (continuous piecewise linear) mass.
pub fn nodal_mass(dim: usize, vol: f64) -> Vec<Vec<f64>> {
    (0..=dim).map(|i| (0..=dim).map(|j| bary_moment(dim, vol, i, j)).collect()).collect()
}

/// Face-flux (lowest-order Raviart–Thomas) mass weighted by `kinv`, for
/// outward-oriented local basis functions.
pub fn flux_mass(pts: &[Point], dim: usize, vol: f64, kinv: &Matrix3<f64>) -> Vec<Vec<f64>> {
    let n = dim as f64;
    let scale = 1.0 / (n * vol).powi(2) * vol / ((n + 1.0) * (n + 2.0));
    let form = |a: &Point, b: &Point| -> f64 {
        let va = nalgebra::Vector3::new(a[0], a[1], a[2]);
        let vb = nalgebra::Vector3::new(b[0], b[1], b[2]);
        va.dot(&(kinv * vb))
    };
    let mut m = vec![vec![0.0; dim + 1]; dim + 1];
    for i in 0..=dim {
        for j in 0..=dim {
            let a: Vec<Point> = pts.iter().map(|p| sub(p, &pts[i])).collect();
            let b: Vec<Point> = pts.iter().map(|p| sub(p, &pts[j])).collect();
            let mut sa = [0.0; 3];
            let mut sb = [0.0; 3];
            for k in 0..=dim {
                for r in 0..3 {
                    sa[r] += a[k][r];
                    sb[r] += b[k][r];
                }
            }
            let mut v = form(&sa, &sb);
            for k in 0..=dim {
                v += form(&a[k], &b[k]);
            }
            m[i][j] = scale * v;
        }
    }
    m
}

/// Local vertex pairs of the edges of a tetrahedron.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Edge (lowest-order Nédélec) mass on a tetrahedron, edges oriented from the
/// lower to the higher local vertex.
pub fn edge_mass(pts: &[Point], vol: f64) -> Vec<Vec<f64>> {
    let g = barycentric_gradients(pts, 3);
    let gd = |a: usize, b: usize| crate::mesh::dot(&g[a], &g[b]);
    let im = |a: usize, b: usize| bary_moment(3, vol, a, b);
    let mut m = vec![vec![0.0; 6]; 6];
    for (e, &[a, b]) in TET_EDGES.iter().enumerate() {
        for (f, &[c, d]) in TET_EDGES.iter().enumerate() {
            m[e][f] = im(a, c) * gd(b, d) - im(a, d) * gd(b, c) - im(b, c) * gd(a, d) + im(b, d) * gd(a, c);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{dot, signed_volume};

    /// Degree-2 exact rules: edge midpoints on triangles, the symmetric
    /// four-point rule on tetrahedra. Returns barycentric points and weights
    /// relative to the simplex measure.
    fn quadrature(dim: usize) -> Vec<(Vec<f64>, f64)> {
        if dim == 2 {
            vec![
                (vec![0.5, 0.5, 0.0], 1.0 / 3.0),
                (vec![0.0, 0.5, 0.5], 1.0 / 3.0),
                (vec![0.5, 0.0, 0.5], 1.0 / 3.0),
            ]
        } else {
            let a = 0.585_410_196_624_968_5;
            let b = 0.138_196_601_125_010_5;
            (0..4)
                .map(|i| ((0..4).map(|j| if i == j { a } else { b }).collect(), 0.25))
                .collect()
        }
    }

    fn at(pts: &[Point], bary: &[f64]) -> Point {
        let mut x = [0.0; 3];
        for (p, &l) in pts.iter().zip(bary) {
            for r in 0..3 {
                x[r] += l * p[r];
            }
        }
        x
    }

    fn tri() -> Vec<Point> {
        vec![[0.1, 0.2, 0.0], [1.3, 0.1, 0.0], [0.4, 0.9, 0.0]]
    }

    fn tet() -> Vec<Point> {
        vec![[0.0, 0.1, 0.0], [1.1, 0.0, 0.2], [0.2, 0.9, 0.1], [0.3, 0.2, 1.2]]
    }

    #[test]
    fn flux_mass_matches_quadrature() {
        for (dim, pts) in [(2, tri()), (3, tet())] {
            let vol = signed_volume(&pts, dim).abs();
            let kinv = Matrix3::new(2.0, 0.3, 0.1, 0.3, 1.5, 0.2, 0.1, 0.2, 1.0);
            let m = flux_mass(&pts, dim, vol, &kinv);
            let n = dim as f64;
            for i in 0..=dim {
                for j in 0..=dim {
                    let mut q = 0.0;
                    for (bary, w) in quadrature(dim) {
                        let x = at(&pts, &bary);
                        let pi = sub(&x, &pts[i]);
                        let pj = sub(&x, &pts[j]);
                        let vi = nalgebra::Vector3::new(pi[0], pi[1], pi[2]) / (n * vol);
                        let vj = nalgebra::Vector3::new(pj[0], pj[1], pj[2]) / (n * vol);
                        q += w * vol * vi.dot(&(kinv * vj));
                    }
                    assert!((m[i][j] - q).abs() < 1e-12, "dim {dim} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn edge_mass_matches_quadrature() {
        let pts = tet();
        let vol = signed_volume(&pts, 3).abs();
        let g = barycentric_gradients(&pts, 3);
        let m = edge_mass(&pts, vol);
        let basis = |bary: &[f64], e: usize| -> Point {
            let [a, b] = TET_EDGES[e];
            let mut w = [0.0; 3];
            for r in 0..3 {
                w[r] = bary[a] * g[b][r] - bary[b] * g[a][r];
            }
            w
        };
        for e in 0..6 {
            for f in 0..6 {
                let q: f64 = quadrature(3).iter().map(|(bary, w)| w * vol * dot(&basis(bary, e), &basis(bary, f))).sum();
                assert!((m[e][f] - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flux_basis_has_unit_outward_flux() {
        // the normal component of (x - x_i)/(n|T|) on face i integrates to one
        let pts = tet();
        let vol = signed_volume(&pts, 3).abs();
        let g = barycentric_gradients(&pts, 3);
        for i in 0..4 {
            let gi = g[i];
            let h = 1.0 / dot(&gi, &gi).sqrt();
            let others: Vec<Point> = (0..4).filter(|&j| j != i).map(|j| pts[j]).collect();
            let area = crate::mesh::simplex_measure(&others);
            assert!((area * h / (3.0 * vol) - 1.0).abs() < 1e-12);
        }
    }
}
