//! Binary container for an offline basis.
//!
//! Layout, all little-endian: magic `RBM1`; `u64` n_r, n_m, n_S; n_S
//! singular values; U column-major; then the metadata block: 32-byte model
//! fingerprint, threshold, `u64` range count and per range a `u64` scale
//! code (0 uniform, 1 log), lower and upper bound, `u64` name length and
//! the UTF-8 name.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{ParamRange, ReducedBasis, Scale};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"RBM1";

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactMeta {
    pub fingerprint: [u8; 32],
    pub ranges: Vec<ParamRange>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub basis: ReducedBasis,
    pub meta: ArtifactMeta,
}

impl Artifact {
    pub fn to_bytes(&self) -> Vec<u8> {
        let b = &self.basis;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        for n in [b.n_full(), b.n_modes(), b.singular_values().len()] {
            out.extend_from_slice(&(n as u64).to_le_bytes());
        }
        for s in b.singular_values() {
            out.extend_from_slice(&s.to_le_bytes());
        }
        // nalgebra stores column-major already
        for v in b.modes().iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.meta.fingerprint);
        out.extend_from_slice(&b.threshold().to_le_bytes());
        out.extend_from_slice(&(self.meta.ranges.len() as u64).to_le_bytes());
        for r in &self.meta.ranges {
            let code: u64 = match r.scale {
                Scale::Uniform => 0,
                Scale::Log => 1,
            };
            out.extend_from_slice(&code.to_le_bytes());
            out.extend_from_slice(&r.lo.to_le_bytes());
            out.extend_from_slice(&r.hi.to_le_bytes());
            out.extend_from_slice(&(r.name.len() as u64).to_le_bytes());
            out.extend_from_slice(r.name.as_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Artifact("missing RBM1 magic".into()));
        }
        let n_r = cur.size()?;
        let n_m = cur.size()?;
        let n_s = cur.size()?;
        if n_m > n_s {
            return Err(Error::Artifact(format!("{n_m} modes but only {n_s} singular values")));
        }
        let sigma = (0..n_s).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let len = n_r.checked_mul(n_m).ok_or_else(|| Error::Artifact("basis size overflows".into()))?;
        if len.saturating_mul(8) > bytes.len() {
            return Err(Error::Artifact("truncated basis".into()));
        }
        let data = (0..len).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let modes = DMatrix::from_column_slice(n_r, n_m, &data);
        let mut fingerprint = [0u8; 32];
        fingerprint.copy_from_slice(cur.take(32)?);
        let threshold = cur.f64()?;
        let n_ranges = cur.size()?;
        let mut ranges = Vec::new();
        for _ in 0..n_ranges {
            let scale = match cur.size()? {
                0 => Scale::Uniform,
                1 => Scale::Log,
                c => return Err(Error::Artifact(format!("unknown range scale code {c}"))),
            };
            let lo = cur.f64()?;
            let hi = cur.f64()?;
            let n = cur.size()?;
            let name = String::from_utf8(cur.take(n)?.to_vec())
                .map_err(|_| Error::Artifact("range name is not UTF-8".into()))?;
            ranges.push(ParamRange { name, lo, hi, scale });
        }
        if cur.pos != bytes.len() {
            return Err(Error::Artifact(format!("{} trailing bytes", bytes.len() - cur.pos)));
        }
        let basis = ReducedBasis::new(modes, sigma, threshold).map_err(|e| Error::Artifact(e.to_string()))?;
        Ok(Self { basis, meta: ArtifactMeta { fingerprint, ranges } })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Artifact("unexpected end of artifact".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn size(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::Artifact("size does not fit in memory".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn write_artifact(path: &Path, artifact: &Artifact) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&artifact.to_bytes())?;
    Ok(())
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    Artifact::from_bytes(&bytes)
}
