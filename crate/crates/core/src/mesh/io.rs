//! Plain-text mesh format.
//!
//! ```text
//! dim 2
//! vertices 4
//! 0 0
//! 1 0
//! 1 1
//! 0 1
//! cells 2
//! 0 1 2
//! 0 2 3
//! tags 4
//! 0 1 pressure
//! ...
//! ```
//!
//! Indices are zero-based. The `tags` section is optional and lists each
//! boundary face by its vertices followed by `pressure` or `flux`. Lines
//! starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryTag, BoundaryTags, Point, SimplicialMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MeshFile {
    pub mesh: SimplicialMesh,
    pub tags: Option<BoundaryTags>,
}

pub fn read_mesh(path: &Path) -> Result<MeshFile> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

pub fn write_mesh(path: &Path, mesh: &SimplicialMesh, tags: Option<&BoundaryTags>) -> Result<()> {
    std::fs::write(path, format_mesh(mesh, tags))?;
    Ok(())
}

pub fn format_mesh(mesh: &SimplicialMesh, tags: Option<&BoundaryTags>) -> String {
    let dim = mesh.dim();
    let mut s = String::new();
    let _ = writeln!(s, "dim {dim}");
    let _ = writeln!(s, "vertices {}", mesh.n_vertices());
    for p in mesh.vertices() {
        let coords: Vec<String> = p[..dim].iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(s, "{}", coords.join(" "));
    }
    let _ = writeln!(s, "cells {}", mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let v: Vec<String> = mesh.cell(c).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", v.join(" "));
    }
    if let Some(tags) = tags {
        let faces = mesh.boundary_faces();
        let _ = writeln!(s, "tags {}", faces.len());
        for f in faces {
            let v: Vec<String> = mesh.entity(dim - 1, f).iter().map(|v| v.to_string()).collect();
            let name = tags.tag(f).map(|t| t.name()).unwrap_or("untagged");
            let _ = writeln!(s, "{} {name}", v.join(" "));
        }
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.last = i + 1;
            return Some((i + 1, line.split_whitespace().collect()));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next_tokens().ok_or_else(|| Error::MeshParse {
            line: self.last + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn header(&mut self, key: &str) -> Result<usize> {
        let (line, t) = self.expect(key)?;
        if t.len() != 2 || t[0] != key {
            return Err(Error::MeshParse { line, msg: format!("expected `{key} <count>`") });
        }
        t[1].parse().map_err(|_| Error::MeshParse { line, msg: format!("bad {key} count `{}`", t[1]) })
    }
}

pub fn parse_mesh(text: &str) -> Result<MeshFile> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let dim = lines.header("dim")?;
    if !(2..=3).contains(&dim) {
        return Err(Error::MeshParse { line: lines.last, msg: format!("dimension {dim} is not 2 or 3") });
    }
    let nv = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, t) = lines.expect("vertex coordinates")?;
        if t.len() != dim {
            return Err(Error::MeshParse { line, msg: format!("expected {dim} coordinates") });
        }
        let mut p: Point = [0.0; 3];
        for (a, tok) in t.iter().enumerate() {
            p[a] = tok
                .parse()
                .map_err(|_| Error::MeshParse { line, msg: format!("bad coordinate `{tok}`") })?;
        }
        vertices.push(p);
    }
    let nc = lines.header("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (line, t) = lines.expect("cell connectivity")?;
        cells.push(parse_indices(line, &t, dim + 1, nv)?);
    }
    let mut tag_lines = Vec::new();
    if let Some((line, t)) = lines.next_tokens() {
        if t.len() != 2 || t[0] != "tags" {
            return Err(Error::MeshParse { line, msg: "expected `tags <count>` or end of file".into() });
        }
        let nt: usize = t[1]
            .parse()
            .map_err(|_| Error::MeshParse { line, msg: format!("bad tags count `{}`", t[1]) })?;
        for _ in 0..nt {
            let (line, t) = lines.expect("face tag")?;
            if t.len() != dim + 1 {
                return Err(Error::MeshParse { line, msg: format!("expected {dim} vertices and a tag") });
            }
            let face = parse_indices(line, &t[..dim], dim, nv)?;
            let tag = BoundaryTag::parse(t[dim])
                .ok_or_else(|| Error::MeshParse { line, msg: format!("unknown tag `{}`", t[dim]) })?;
            tag_lines.push((line, face, tag));
        }
    }
    if let Some((line, _)) = lines.next_tokens() {
        return Err(Error::MeshParse { line, msg: "trailing content".into() });
    }
    let mesh = SimplicialMesh::new(dim, vertices, &cells)?;
    let tags = if tag_lines.is_empty() {
        None
    } else {
        let mut pairs = Vec::with_capacity(tag_lines.len());
        for (line, face, tag) in tag_lines {
            let f = mesh
                .find_entity(dim - 1, &face)
                .ok_or_else(|| Error::MeshParse { line, msg: format!("{face:?} is not a face of the mesh") })?;
            pairs.push((f, tag));
        }
        Some(BoundaryTags::from_pairs(&mesh, &pairs)?)
    };
    Ok(MeshFile { mesh, tags })
}

fn parse_indices(line: usize, t: &[&str], expected: usize, nv: usize) -> Result<Vec<usize>> {
    if t.len() != expected {
        return Err(Error::MeshParse { line, msg: format!("expected {expected} vertex indices") });
    }
    t.iter()
        .map(|tok| {
            let v: usize = tok
                .parse()
                .map_err(|_| Error::MeshParse { line, msg: format!("bad index `{tok}`") })?;
            if v >= nv {
                return Err(Error::MeshParse {
                    line,
                    msg: format!("vertex index {v} out of range (have {nv})"),
                });
            }
            Ok(v)
        })
        .collect()
}
