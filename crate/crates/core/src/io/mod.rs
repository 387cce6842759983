//! Result files: legacy VTK for viewing and a dof-level CSV that is the
//! authoritative record of a solution.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Point, SimplicialMesh};
use crate::solver::{DiscreteComplex, MassResidual};

/// Velocity of the lowest-order flux field at each cell centroid, from
/// fluxes on all mesh faces.
pub fn cell_velocities(mesh: &SimplicialMesh, face_flux: &[f64]) -> Vec<Point> {
    let dim = mesh.dim();
    (0..mesh.n_cells())
        .map(|c| {
            let x = mesh.centroid(dim, c);
            let scale = 1.0 / (dim as f64 * mesh.cell_volume(c));
            let mut u = [0.0; 3];
            // local face j is opposite sorted vertex j
            for (j, p) in mesh.cell_points(c).iter().enumerate() {
                let flux = f64::from(mesh.cell_face_signs(c)[j]) * face_flux[mesh.cell_faces(c)[j]];
                for k in 0..dim {
                    u[k] += flux * (x[k] - p[k]) * scale;
                }
            }
            u
        })
        .collect()
}

/// Legacy VTK unstructured grid with cell pressure and cell velocity.
pub fn format_vtk(mesh: &SimplicialMesh, pressure: &[f64], velocity: &[Point]) -> Result<String> {
    let n = mesh.n_cells();
    if pressure.len() != n || velocity.len() != n {
        return Err(Error::Incompatible(format!("VTK output needs {n} cell values")));
    }
    let dim = mesh.dim();
    let (cell_type, arity) = if dim == 2 { (5, 3) } else { (10, 4) };
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nexactflux solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:e} {:e} {:e}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "CELLS {n} {}", n * (arity + 1));
    for c in 0..n {
        let _ = write!(s, "{arity}");
        for v in mesh.cell(c) {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {n}");
    for _ in 0..n {
        let _ = writeln!(s, "{cell_type}");
    }
    let _ = writeln!(s, "CELL_DATA {n}\nSCALARS pressure double 1\nLOOKUP_TABLE default");
    for p in pressure {
        let _ = writeln!(s, "{p:e}");
    }
    s.push_str("VECTORS velocity double\n");
    for u in velocity {
        let _ = writeln!(s, "{:e} {:e} {:e}", u[0], u[1], u[2]);
    }
    Ok(s)
}

pub fn write_vtk(path: &Path, mesh: &SimplicialMesh, pressure: &[f64], velocity: &[Point]) -> Result<()> {
    fs::write(path, format_vtk(mesh, pressure, velocity)?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Flux,
    Pressure,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    kind: Kind,
    index: usize,
    value: f64,
}

/// Flux and pressure unknowns as `kind,index,value` rows. Values are written
/// in shortest round-trip form, so reading back is exact.
pub fn write_dofs(path: &Path, flux: &[f64], pressure: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let rows = flux.iter().enumerate().map(|(index, &value)| Row { kind: Kind::Flux, index, value });
    let rows = rows.chain(pressure.iter().enumerate().map(|(index, &value)| Row { kind: Kind::Pressure, index, value }));
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `(flux, pressure)` written by [`write_dofs`].
pub fn read_dofs(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let mut flux = Vec::new();
    let mut pressure = Vec::new();
    for (line, row) in r.deserialize::<Row>().enumerate() {
        let row = row.map_err(csv_error)?;
        let target = match row.kind {
            Kind::Flux => &mut flux,
            Kind::Pressure => &mut pressure,
        };
        if row.index != target.len() {
            return Err(Error::Incompatible(format!(
                "{}: row {} has index {} out of sequence",
                path.display(),
                line + 2,
                row.index
            )));
        }
        target.push(row.value);
    }
    Ok((flux, pressure))
}

/// Re-reads a dof file and recomputes the cell balance against `source`.
pub fn recheck_conservation(path: &Path, complex: &DiscreteComplex, source: &[f64]) -> Result<MassResidual> {
    let (flux, pressure) = read_dofs(path)?;
    if flux.len() != complex.n_flux() || pressure.len() != complex.n_cells() {
        return Err(Error::Incompatible(format!("{} does not match the problem size", path.display())));
    }
    Ok(complex.mass_residual(&flux, source))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Incompatible(format!("malformed dof file: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured;

    #[test]
    fn dofs_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dofs.csv");
        let flux = vec![0.1, -1.0 / 3.0, 1e-300, 7.0];
        let pressure = vec![std::f64::consts::PI, -0.0];
        write_dofs(&p, &flux, &pressure).unwrap();
        let (f, q) = read_dofs(&p).unwrap();
        assert_eq!(f, flux);
        assert_eq!(q, pressure);
        assert!(fs::read_to_string(&p).unwrap().starts_with("kind,index,value\n"));
    }

    #[test]
    fn constant_velocity_is_recovered() {
        let m = build_structured(2, 3, [0.0; 3], [1.0; 3]).unwrap();
        let u = [0.3, -1.2];
        let flux: Vec<f64> = (0..m.n_faces())
            .map(|f| {
                // flux of u through face f in its global orientation
                let (c, _) = m.face_cells(f);
                let n = m.outward_normal(c, f).unwrap();
                let j = m.local_face(c, f).unwrap();
                f64::from(m.cell_face_signs(c)[j]) * (u[0] * n[0] + u[1] * n[1]) * m.measure(1, f)
            })
            .collect();
        for v in cell_velocities(&m, &flux) {
            assert!((v[0] - u[0]).abs() < 1e-13 && (v[1] - u[1]).abs() < 1e-13);
        }
        let vtk = format_vtk(&m, &vec![0.0; m.n_cells()], &cell_velocities(&m, &flux)).unwrap();
        assert!(vtk.contains("CELL_TYPES 18"));
    }
}
