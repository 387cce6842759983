//! Fracture networks in the plane and their text format.
//!
//! One fracture per line: `fracture x0 y0 x1 y1 K tag`. `#` starts a
//! comment, blank lines are ignored. The tag is free text without spaces;
//! `blocking` and `conductive` are used by the parametrized models.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Fracture {
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// Conductivity of the fracture material before aperture scaling.
    pub conductivity: f64,
    pub tag: String,
}

impl Fracture {
    pub fn new(start: [f64; 2], end: [f64; 2], conductivity: f64, tag: &str) -> Self {
        Self { start, end, conductivity, tag: tag.into() }
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    /// Parameter `t` of the projection of `p` onto the fracture line and the
    /// distance to it.
    pub(crate) fn locate(&self, p: [f64; 2]) -> (f64, f64) {
        let d = [self.end[0] - self.start[0], self.end[1] - self.start[1]];
        let l2 = d[0] * d[0] + d[1] * d[1];
        let w = [p[0] - self.start[0], p[1] - self.start[1]];
        let t = (w[0] * d[0] + w[1] * d[1]) / l2;
        let dist = (w[0] * d[1] - w[1] * d[0]).abs() / l2.sqrt();
        (t, dist)
    }

    pub(crate) fn at(&self, t: f64) -> [f64; 2] {
        [
            self.start[0] + t * (self.end[0] - self.start[0]),
            self.start[1] + t * (self.end[1] - self.start[1]),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FractureNetwork {
    pub fractures: Vec<Fracture>,
}

impl FractureNetwork {
    pub fn new(fractures: Vec<Fracture>) -> Result<Self> {
        for (i, f) in fractures.iter().enumerate() {
            let finite = f.start.iter().chain(&f.end).all(|x| x.is_finite());
            if !finite || f.length() <= 0.0 {
                return Err(Error::Fracture(format!("fracture {i} is degenerate")));
            }
            if !(f.conductivity > 0.0 && f.conductivity.is_finite()) {
                return Err(Error::Fracture(format!("fracture {i} has conductivity {}", f.conductivity)));
            }
        }
        Ok(Self { fractures })
    }

    pub fn len(&self) -> usize {
        self.fractures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractures.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::FractureParse { line: n + 1, msg };
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok[0] != "fracture" {
                return Err(bad(format!("expected `fracture`, found `{}`", tok[0])));
            }
            if tok.len() != 7 {
                return Err(bad(format!("expected 6 fields after `fracture`, found {}", tok.len() - 1)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
            out.push(Fracture {
                start: [num(tok[1])?, num(tok[2])?],
                end: [num(tok[3])?, num(tok[4])?],
                conductivity: num(tok[5])?,
                tag: tok[6].to_string(),
            });
        }
        Self::new(out)
    }

    pub fn format(&self) -> String {
        let mut s = String::new();
        for f in &self.fractures {
            s.push_str(&format!(
                "fracture {:?} {:?} {:?} {:?} {:?} {}\n",
                f.start[0], f.start[1], f.end[0], f.end[1], f.conductivity, f.tag
            ));
        }
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.format())?;
        Ok(())
    }

    /// Ten-fracture network in the unit square, two of them blocking.
    /// Geometry of the well-known benchmark with a complex network.
    pub fn benchmark(k_blocking: f64, k_conductive: f64) -> Self {
        const SEGMENTS: [([f64; 4], bool); 10] = [
            ([0.0500, 0.4160, 0.2200, 0.0624], false),
            ([0.0500, 0.2750, 0.2500, 0.1350], false),
            ([0.1500, 0.6300, 0.4500, 0.0900], false),
            ([0.1500, 0.9167, 0.4000, 0.5000], true),
            ([0.6500, 0.8333, 0.849723, 0.167625], true),
            ([0.7000, 0.2350, 0.849723, 0.167625], false),
            ([0.6000, 0.3800, 0.8500, 0.2675], false),
            ([0.3500, 0.9714, 0.8000, 0.7143], false),
            ([0.7500, 0.9574, 0.9500, 0.8155], false),
            ([0.1500, 0.8363, 0.4000, 0.9727], false),
        ];
        let fractures = SEGMENTS
            .iter()
            .map(|&([x0, y0, x1, y1], blocking)| {
                let (k, tag) = if blocking { (k_blocking, "blocking") } else { (k_conductive, "conductive") };
                Fracture::new([x0, y0], [x1, y1], k, tag)
            })
            .collect();
        Self { fractures }
    }
}

/// Intersection of two closed segments, if they meet in a single point.
/// Touching within `tol` (endpoint on the other segment) counts.
pub(crate) fn segment_intersection(a: &Fracture, b: &Fracture, tol: f64) -> Option<[f64; 2]> {
    let d1 = [a.end[0] - a.start[0], a.end[1] - a.start[1]];
    let d2 = [b.end[0] - b.start[0], b.end[1] - b.start[1]];
    let den = d1[0] * d2[1] - d1[1] * d2[0];
    let la = a.length();
    let lb = b.length();
    if den.abs() <= 1e-14 * la * lb {
        // parallel: only shared endpoints matter
        for p in [a.start, a.end] {
            for q in [b.start, b.end] {
                if (p[0] - q[0]).hypot(p[1] - q[1]) <= tol {
                    return Some(p);
                }
            }
        }
        return None;
    }
    let w = [b.start[0] - a.start[0], b.start[1] - a.start[1]];
    let t = (w[0] * d2[1] - w[1] * d2[0]) / den;
    let s = (w[0] * d1[1] - w[1] * d1[0]) / den;
    let ta = tol / la;
    let tb = tol / lb;
    if t < -ta || t > 1.0 + ta || s < -tb || s > 1.0 + tb {
        return None;
    }
    // snap to an endpoint when close, so shared endpoints stay bitwise equal
    for p in [a.start, a.end, b.start, b.end] {
        let q = a.at(t);
        if (p[0] - q[0]).hypot(p[1] - q[1]) <= tol {
            return Some(p);
        }
    }
    Some(a.at(t.clamp(0.0, 1.0)))
}
