use std::collections::{BTreeMap, HashSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gp::{ucb, GpModel};
use crate::error::{Error, Result};
use crate::vecdb::{EntryRef, QueryOptions, SemanticDb, ShardKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcquisitionStrategy {
    /// Score UCB over stored embeddings.
    CandidateSet,
    /// Ascend the UCB surface in embedding space from the best observations.
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquireConfig {
    pub strategy: AcquisitionStrategy,
    pub n_candidates: usize,
    /// Neighbours of each evaluated formula added to the candidate set.
    pub neighbors: usize,
    pub gradient_steps: usize,
    /// Step length as a fraction of the GP lengthscale.
    pub gradient_lr: f64,
}

impl Default for AcquireConfig {
    fn default() -> Self {
        Self {
            strategy: AcquisitionStrategy::CandidateSet,
            n_candidates: 4096,
            neighbors: 10,
            gradient_steps: 30,
            gradient_lr: 0.1,
        }
    }
}

/// Stored formulae eligible for one mining run, with cached neighbourhoods of
/// evaluated formulae.
pub struct CandidatePool<'a> {
    db: &'a SemanticDb,
    keys: Vec<ShardKey>,
    max_dim: Option<usize>,
    eligible: Vec<EntryRef>,
    neighbors: BTreeMap<String, Vec<EntryRef>>,
}

impl<'a> CandidatePool<'a> {
    pub fn new(db: &'a SemanticDb, keys: Vec<ShardKey>, max_dim: Option<usize>) -> Result<Self> {
        let eligible = db.entries(&keys, max_dim);
        if eligible.is_empty() {
            return Err(Error::NoCandidates(format!("no stored formula in shards {keys:?} fits the data")));
        }
        Ok(Self { db, keys, max_dim, eligible, neighbors: BTreeMap::new() })
    }

    pub fn db(&self) -> &'a SemanticDb {
        self.db
    }

    pub fn eligible(&self) -> &[EntryRef] {
        &self.eligible
    }

    pub fn embedding(&self, e: EntryRef) -> Vec<f64> {
        self.db.embedding(e).iter().map(|v| *v as f64).collect()
    }

    /// Nearest stored formulae to `e`, best first.
    pub fn nearest(&self, e: &[f64], k: usize) -> Result<Vec<EntryRef>> {
        let opts = QueryOptions { max_dim: self.max_dim, ..QueryOptions::exact(k, self.keys.clone()) };
        Ok(self.db.query_with(e, &opts)?.into_iter().map(|r| r.entry).collect())
    }

    /// Caches the neighbourhood of an evaluated formula.
    pub fn add_neighbors(&mut self, e: EntryRef, k: usize) -> Result<()> {
        let text = self.db.text(e).to_string();
        if k == 0 || self.neighbors.contains_key(&text) {
            return Ok(());
        }
        let n = self.nearest(&self.embedding(e), k + 1)?;
        self.neighbors.insert(text, n);
        Ok(())
    }
}

/// Proposes up to `q` embeddings maximizing `mean + sqrt(beta) * std`.
///
/// `evaluated` holds texts that must not be proposed again (candidate-set
/// mode) and `best` the embeddings the gradient mode starts from.
pub fn acquire(
    m: &GpModel,
    pool: &CandidatePool,
    beta: f64,
    q: usize,
    cfg: &AcquireConfig,
    evaluated: &HashSet<String>,
    best: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    match cfg.strategy {
        AcquisitionStrategy::CandidateSet => {
            let scored = score_candidates(m, pool, beta, cfg, evaluated, seed)?;
            Ok(scored.into_iter().take(q).map(|(e, _)| pool.embedding(e)).collect())
        }
        AcquisitionStrategy::Gradient => gradient_ascent(m, beta, q, cfg, best, seed),
    }
}

/// Unevaluated candidates with their UCB values, best first.
pub fn score_candidates(
    m: &GpModel,
    pool: &CandidatePool,
    beta: f64,
    cfg: &AcquireConfig,
    evaluated: &HashSet<String>,
    seed: u64,
) -> Result<Vec<(EntryRef, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pool.eligible.len();
    let mut picked: Vec<EntryRef> = sample(&mut rng, n, cfg.n_candidates.min(n)).into_iter().map(|i| pool.eligible[i]).collect();
    picked.extend(pool.neighbors.values().flatten().copied());
    let mut seen = HashSet::new();
    picked.retain(|e| {
        let t = pool.db.text(*e);
        !evaluated.contains(t) && seen.insert(t)
    });
    let mut scored = picked
        .par_iter()
        .map(|e| {
            let (mu, var) = m.posterior(&pool.embedding(*e))?;
            Ok((*e, ucb(mu, var, beta)))
        })
        .collect::<Result<Vec<_>>>()?;
    // stable: ties keep candidate order
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scored)
}

fn gradient_ascent(m: &GpModel, beta: f64, q: usize, cfg: &AcquireConfig, starts: &[Vec<f64>], seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = cfg.gradient_lr * m.hyper().lengthscale;
    let sb = beta.max(0.0).sqrt();
    let mut out = Vec::new();
    for x0 in starts.iter().take(q) {
        let mut x = x0.clone();
        for s in 0..cfg.gradient_steps {
            let (_, var, gm, gv) = m.posterior_grad(&x)?;
            let sd = var.sqrt();
            let mut g: Vec<f64> = gm
                .iter()
                .zip(&gv)
                .map(|(a, b)| a + if sd > 1e-12 { sb * b / (2.0 * sd) } else { 0.0 })
                .collect();
            // a small random kick keeps starts at a stationary point moving
            for v in g.iter_mut() {
                *v += rng.random_range(-1.0..1.0) * 1e-3;
            }
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let lr = step / (1.0 + s as f64).sqrt();
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi += lr * gi / norm;
            }
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::gp::GpHyper;

    #[test]
    fn ucb_is_monotone_in_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mu = rng.random_range(-5.0..5.0);
            let var = rng.random_range(0.0..4.0);
            let mut prev = f64::NEG_INFINITY;
            for beta in [0.0, 0.1, 1.0, 4.0, 16.0, 100.0] {
                let u = ucb(mu, var, beta);
                assert!(u >= prev);
                prev = u;
            }
        }
    }

    #[test]
    fn gradient_mode_climbs_the_mean() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.25]).collect();
        let y: Vec<f64> = x.iter().map(|v| -(v[0] - 1.2) * (v[0] - 1.2)).collect();
        let m = GpModel::with_hyper(&x, &y, GpHyper { lengthscale: 0.7, signal_var: 1.0, noise_var: 1e-8 }, true).unwrap();
        let cfg = AcquireConfig { gradient_steps: 200, gradient_lr: 0.05, ..Default::default() };
        let got = gradient_ascent(&m, 0.0, 1, &cfg, &[vec![0.25]], 1).unwrap();
        assert!((got[0][0] - 1.2).abs() < 0.1, "{:?}", got);
    }
}
