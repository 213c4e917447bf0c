use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stl::{robustness_many, Formula, Trajectory};

/// Robustness of one formula at time 0 over a fixed trajectory set.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature(pub Vec<f64>);

pub fn signature(f: &Formula, trajs: &[Trajectory]) -> Result<Signature> {
    robustness_many(f, trajs).map(Signature)
}

/// Norms below this count as zero when comparing signatures.
const ZERO_NORM: f64 = 1e-12;

/// Greedy redundancy filter: a signature is kept iff its cosine similarity to
/// every kept signature is below `tau`.
#[derive(Debug, Clone)]
pub struct SignatureFilter {
    tau: f64,
    len: usize,
    kept: Vec<f64>,
    kept_zero: bool,
}

impl SignatureFilter {
    pub fn new(tau: f64, len: usize) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Config(format!("similarity threshold must lie in (0, 1], got {tau}")));
        }
        Ok(Self { tau, len, kept: Vec::new(), kept_zero: false })
    }

    /// Number of signatures kept so far.
    pub fn len(&self) -> usize {
        self.kept.len() / self.len.max(1) + self.kept_zero as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offers a signature; returns whether it was kept.
    pub fn offer(&mut self, sig: &[f64]) -> Result<bool> {
        if sig.len() != self.len {
            return Err(Error::DimensionMismatch { expected: self.len, got: sig.len() });
        }
        let norm = sig.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > ZERO_NORM) {
            let keep = !self.kept_zero;
            self.kept_zero = true;
            return Ok(keep);
        }
        // recent signatures tend to be the close ones, so scan backwards
        for row in self.kept.chunks_exact(self.len).rev() {
            let dot: f64 = row.iter().zip(sig).map(|(a, b)| a * b).sum();
            if dot / norm >= self.tau {
                return Ok(false);
            }
        }
        self.kept.extend(sig.iter().map(|v| v / norm));
        Ok(true)
    }
}

/// Runs the greedy filter over `candidates` in order.
pub fn signature_filter<I>(candidates: I, trajs: &[Trajectory], tau: f64) -> Result<Vec<Formula>>
where
    I: IntoIterator<Item = Formula>,
{
    let mut filter = SignatureFilter::new(tau, trajs.len())?;
    let mut out = Vec::new();
    for f in candidates {
        let sig = signature(&f, trajs)?;
        if filter.offer(&sig.0)? {
            out.push(f);
        }
    }
    Ok(out)
}

/// Same result as [`signature_filter`], with signatures computed in parallel.
pub fn signature_filter_par(candidates: Vec<Formula>, trajs: &[Trajectory], tau: f64) -> Result<Vec<Formula>> {
    let mut filter = SignatureFilter::new(tau, trajs.len())?;
    let sigs: Vec<Signature> = candidates.par_iter().map(|f| signature(f, trajs)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (f, s) in candidates.into_iter().zip(sigs) {
        if filter.offer(&s.0)? {
            out.push(f);
        }
    }
    Ok(out)
}
