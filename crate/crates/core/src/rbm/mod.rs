//! Reduced basis for the correction step: parameter sampling, snapshots,
//! POD truncation and the online Galerkin solve.

mod artifact;
mod model;
mod svd;

pub use artifact::{read_artifact, write_artifact, Artifact, ArtifactMeta};
pub use model::{collect_snapshots, LayeredModel, OnlineSolver, ParametricModel, Snapshots};
pub use svd::jacobi_svd;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default POD threshold.
pub const DEFAULT_THRESHOLD: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Uniform,
    /// Uniform in `log10`.
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRange {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
}

impl ParamRange {
    pub fn uniform(name: &str, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), lo, hi, scale: Scale::Uniform }
    }

    pub fn log(name: &str, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), lo, hi, scale: Scale::Log }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi;
        if !ok || (self.scale == Scale::Log && self.lo <= 0.0) {
            return Err(Error::Incompatible(format!(
                "invalid range {} = [{}, {}] ({:?})",
                self.name, self.lo, self.hi, self.scale
            )));
        }
        Ok(())
    }

    /// Maps `u ∈ [0, 1]` into the range.
    pub fn at(&self, u: f64) -> f64 {
        match self.scale {
            Scale::Uniform => self.lo + u * (self.hi - self.lo),
            Scale::Log => {
                let (a, b) = (self.lo.log10(), self.hi.log10());
                10f64.powf(a + u * (b - a))
            }
        }
    }

    /// Inverse of [`ParamRange::at`].
    pub fn unit(&self, x: f64) -> f64 {
        match self.scale {
            Scale::Uniform if self.hi > self.lo => (x - self.lo) / (self.hi - self.lo),
            Scale::Log if self.hi > self.lo => (x.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10()),
            _ => 0.0,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Latin hypercube design: every coordinate visits each of the `n` equal
/// strata (in the range's own scale) exactly once.
pub fn sample_latin_hypercube(n: usize, ranges: &[ParamRange], seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::Incompatible("at least one sample is required".into()));
    }
    for r in ranges {
        r.validate()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![Vec::with_capacity(ranges.len()); n];
    for r in ranges {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        for (sample, &k) in samples.iter_mut().zip(&strata) {
            let u = (k as f64 + rng.random::<f64>()) / n as f64;
            sample.push(r.at(u.min(1.0)));
        }
    }
    Ok(samples)
}

/// Orthonormal POD modes with the singular values they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    modes: DMatrix<f64>,
    singular_values: Vec<f64>,
    threshold: f64,
}

impl ReducedBasis {
    /// `modes` must have orthonormal columns; `singular_values` lists every
    /// singular value of the snapshot matrix, largest first.
    pub fn new(modes: DMatrix<f64>, singular_values: Vec<f64>, threshold: f64) -> Result<Self> {
        if modes.ncols() > singular_values.len() {
            return Err(Error::Basis("more modes than singular values".into()));
        }
        let defect = orthonormality_defect(&modes);
        if defect > 1e-10 {
            return Err(Error::Basis(format!("modes are not orthonormal (defect {defect:.2e})")));
        }
        Ok(Self { modes, singular_values, threshold })
    }

    /// Empty basis on a space of dimension `n`.
    pub fn empty(n: usize) -> Self {
        Self { modes: DMatrix::zeros(n, 0), singular_values: Vec::new(), threshold: f64::INFINITY }
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.ncols()
    }

    pub fn n_full(&self) -> usize {
        self.modes.nrows()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// The leading `m` modes.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.min(self.n_modes());
        Self {
            modes: self.modes.columns(0, m).into_owned(),
            singular_values: self.singular_values.clone(),
            threshold: self.threshold,
        }
    }
}

/// `max |UᵀU − I|`.
pub fn orthonormality_defect(u: &DMatrix<f64>) -> f64 {
    if u.ncols() == 0 {
        return 0.0;
    }
    (u.transpose() * u - DMatrix::identity(u.ncols(), u.ncols())).amax()
}

/// POD of the snapshot matrix, keeping modes with `σ ≥ threshold`.
pub fn pod_truncate(snapshots: &DMatrix<f64>, threshold: f64) -> Result<ReducedBasis> {
    if !(threshold > 0.0) {
        return Err(Error::Basis(format!("threshold must be positive, got {threshold}")));
    }
    let (u, sigma) = jacobi_svd(snapshots);
    let keep = sigma.iter().take_while(|&&s| s >= threshold && s > 0.0).count();
    let mut modes = u.columns(0, keep).into_owned();
    // a modified Gram-Schmidt pass removes the last rounding from the rotations
    for j in 0..keep {
        for i in 0..j {
            let d = modes.column(i).dot(&modes.column(j));
            let ci = modes.column(i).into_owned();
            modes.column_mut(j).axpy(-d, &ci, 1.0);
        }
        let n = modes.column(j).norm();
        modes.column_mut(j).scale_mut(1.0 / n);
    }
    ReducedBasis::new(modes, sigma, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lhs_one_per_stratum() {
        let s = sample_latin_hypercube(4, &[ParamRange::uniform("x", 0.0, 1.0)], 11).unwrap();
        let mut bins: Vec<usize> = s.iter().map(|v| (v[0] * 4.0).floor() as usize).collect();
        bins.sort();
        assert_eq!(bins, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lhs_log_strata() {
        let s = sample_latin_hypercube(10, &[ParamRange::log("k", 1e-5, 1e5)], 5).unwrap();
        let mut bins: Vec<i32> = s.iter().map(|v| (v[0].log10() + 5.0).floor() as i32).collect();
        bins.sort();
        assert_eq!(bins, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn lhs_deterministic_and_validated() {
        let r = [ParamRange::uniform("a", -1.0, 1.0), ParamRange::log("b", 1.0, 10.0)];
        assert_eq!(sample_latin_hypercube(7, &r, 1).unwrap(), sample_latin_hypercube(7, &r, 1).unwrap());
        assert_ne!(sample_latin_hypercube(7, &r, 1).unwrap(), sample_latin_hypercube(7, &r, 2).unwrap());
        assert!(sample_latin_hypercube(3, &[ParamRange::log("b", 0.0, 1.0)], 1).is_err());
        assert!(sample_latin_hypercube(0, &r, 1).is_err());
    }

    #[test]
    fn threshold_rule() {
        let mut s = DMatrix::zeros(5, 3);
        s[(0, 0)] = 1.0;
        s[(1, 1)] = 1e-3;
        s[(2, 2)] = 1e-9;
        let b = pod_truncate(&s, 1e-7).unwrap();
        assert_eq!(b.n_modes(), 2);
    }

    #[test]
    fn duplicate_column() {
        let v = [1.0, 2.0, -2.0];
        let s = DMatrix::from_fn(3, 2, |i, _| v[i]);
        let b = pod_truncate(&s, 1e-7).unwrap();
        assert_eq!(b.n_modes(), 1);
        assert!((b.singular_values()[0] - 2f64.sqrt() * 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_snapshots_give_empty_basis() {
        let b = pod_truncate(&DMatrix::zeros(4, 2), 1e-7).unwrap();
        assert_eq!(b.n_modes(), 0);
        assert!(pod_truncate(&DMatrix::zeros(4, 2), 0.0).is_err());
    }
}
