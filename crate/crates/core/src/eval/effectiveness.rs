use std::fmt::Write as _;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::retrieval::{ap_at_k, ndcg_at_k, relevant};
use crate::embed::{sample_formula_with, FDistParams, ReferenceSet};
use crate::error::{Error, Result};
use crate::stl::Formula;
use crate::traj::{sample_mu0_batch, Mu0Params};
use crate::vecdb::{SemanticDb, ShardKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffectivenessConfig {
    pub n_queries: usize,
    /// Distribution the query formulae are drawn from.
    pub fdist: FDistParams,
    /// Queries larger than this are redrawn.
    pub max_query_nodes: Option<usize>,
    pub omega: f64,
    pub k: usize,
    /// Trajectories used by the relevance predicate.
    pub n_traj: usize,
    /// Search only shards with this node budget; the largest budget present by default.
    pub shard_budget: Option<usize>,
    /// Edges of the node-count buckets, `(e0, e1], (e1, e2], ...`.
    pub buckets: Vec<usize>,
    pub mu0: Mu0Params,
    pub seed: u64,
}

impl Default for EffectivenessConfig {
    fn default() -> Self {
        Self {
            n_queries: 1000,
            fdist: FDistParams::default(),
            max_query_nodes: None,
            omega: 0.9,
            k: 5,
            n_traj: 10_000,
            shard_budget: None,
            buckets: vec![0, 5, 10, 15, 20],
            mu0: Mu0Params::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub index: usize,
    pub query: String,
    pub nodes: usize,
    pub top_hit: String,
    pub distance: f64,
    pub ap: f64,
    pub ndcg: f64,
    pub kernel_similarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub p99: f64,
}

/// Linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self { q1: quantile(&v, 0.25), median: quantile(&v, 0.5), q3: quantile(&v, 0.75), p99: quantile(&v, 0.99) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    /// Node counts in `(lo, hi]`.
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
    pub ap: Quantiles,
    pub ndcg: Quantiles,
    pub kernel: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessReport {
    pub config: EffectivenessConfig,
    pub rows: Vec<QueryRow>,
    pub buckets: Vec<BucketSummary>,
    pub overall: BucketSummary,
}

fn summarize(rows: &[&QueryRow], lo: usize, hi: usize) -> BucketSummary {
    let col = |f: fn(&QueryRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
    BucketSummary {
        lo,
        hi,
        count: rows.len(),
        ap: Quantiles::of(&col(|r| r.ap)),
        ndcg: Quantiles::of(&col(|r| r.ndcg)),
        kernel: Quantiles::of(&col(|r| r.kernel_similarity)),
    }
}

impl EffectivenessReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Quantile table with one line per node bucket and a final line over all queries.
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<10} {:>5} | {:^31} | {:^31} | {:^31}",
            "n_nodes", "count", format!("AP@{}", self.config.k), format!("NDCG@{}", self.config.k), "k(phi, phi_hat)"
        );
        let head = format!("{:>7}{:>8}{:>8}{:>8}", "1quart", "median", "3quart", "99perc");
        let _ = writeln!(s, "{:<10} {:>5} | {head} | {head} | {head}", "", "");
        let q = |q: &Quantiles| format!("{:>7.3}{:>8.3}{:>8.3}{:>8.3}", q.q1, q.median, q.q3, q.p99);
        for b in self.buckets.iter().chain(std::iter::once(&self.overall)) {
            let label = if std::ptr::eq(b, &self.overall) { "all".to_string() } else { format!("({}, {}]", b.lo, b.hi) };
            let _ = writeln!(s, "{label:<10} {:>5} | {} | {} | {}", b.count, q(&b.ap), q(&b.ndcg), q(&b.kernel));
        }
        s
    }
}

/// Draws queries from the formula distribution, retrieves the top `k` for
/// each, and scores the ranking by Boolean agreement and kernel similarity.
pub fn retrieval_effectiveness(db: &SemanticDb, r: &ReferenceSet, cfg: &EffectivenessConfig) -> Result<EffectivenessReport> {
    cfg.fdist.validate()?;
    if cfg.n_queries == 0 || cfg.k == 0 || cfg.n_traj == 0 {
        return Err(Error::Config("n_queries, k and n_traj must be positive".into()));
    }
    if cfg.buckets.len() < 2 || cfg.buckets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("bucket edges must be increasing with at least two entries".into()));
    }
    db.check_reference(r)?;
    let budget = match cfg.shard_budget {
        Some(b) => b,
        None => db.keys().iter().map(|k| k.max_nodes).max().ok_or_else(|| Error::NoCandidates("empty database".into()))?,
    };
    let keys: Vec<ShardKey> = db.keys().into_iter().filter(|k| k.max_nodes == budget).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut queries: Vec<(Formula, Vec<f64>)> = Vec::with_capacity(cfg.n_queries);
    while queries.len() < cfg.n_queries {
        let need = cfg.n_queries - queries.len();
        let mut batch = Vec::with_capacity(need);
        while batch.len() < need {
            let f = sample_formula_with(&cfg.fdist, &mut rng);
            if cfg.max_query_nodes.is_none_or(|m| f.node_count() <= m) {
                batch.push(f);
            }
        }
        let embedded = r.try_embed_batch(&batch)?;
        queries.extend(batch.into_iter().zip(embedded).filter_map(|(f, e)| e.map(|e| (f, e))));
    }
    let trajs = sample_mu0_batch(&cfg.mu0, cfg.fdist.max_vars, cfg.n_traj, cfg.seed ^ 0x5eed_0f_7a1e)?;

    let rows: Vec<QueryRow> = queries
        .par_iter()
        .enumerate()
        .map(|(index, (q, e))| {
            let hits = db.query(e, cfg.k, &keys)?;
            let top = hits.first().ok_or_else(|| Error::NoCandidates("no shard matched the query".into()))?;
            let rels: Vec<bool> =
                hits.iter().map(|h| relevant(q, &h.formula, &trajs, cfg.omega)).collect::<Result<_>>()?;
            let k = hits.len();
            let gains: Vec<f64> = rels.iter().map(|&b| b as u8 as f64).collect();
            Ok(QueryRow {
                index,
                query: q.to_string(),
                nodes: q.node_count(),
                top_hit: top.text.clone(),
                distance: top.distance,
                ap: ap_at_k(&rels, k)?,
                ndcg: ndcg_at_k(&gains, k)?,
                kernel_similarity: r.kernel(q, &top.formula)?,
            })
        })
        .collect::<Result<_>>()?;

    let buckets = cfg
        .buckets
        .windows(2)
        .map(|w| {
            let sel: Vec<&QueryRow> = rows.iter().filter(|r| r.nodes > w[0] && r.nodes <= w[1]).collect();
            summarize(&sel, w[0], w[1])
        })
        .filter(|b| b.count > 0)
        .collect();
    let all: Vec<&QueryRow> = rows.iter().collect();
    let overall = summarize(&all, 0, rows.iter().map(|r| r.nodes).max().unwrap_or(0));
    Ok(EffectivenessReport { config: cfg.clone(), rows, buckets, overall })
}
