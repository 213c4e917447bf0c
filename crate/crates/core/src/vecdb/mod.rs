//! Sharded store of (formula, embedding) pairs with L2 nearest-neighbour search.

mod build;
mod io;
mod ivf;

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::ReferenceSet;
use crate::error::{Error, Result};
use crate::stl::Formula;

pub use build::{build_db, BuildConfig};
pub use ivf::Ivf;

/// Node budgets that get their own shards.
pub const SHARD_NODE_BUDGETS: [usize; 2] = [4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShardKey {
    /// Exact number of distinct variables.
    pub n_vars: usize,
    /// Upper bound on node count.
    pub max_nodes: usize,
}

impl ShardKey {
    pub fn new(n_vars: usize, max_nodes: usize) -> Self {
        Self { n_vars, max_nodes }
    }

    pub fn admits(&self, f: &Formula) -> bool {
        f.var_count() == self.n_vars && f.node_count() <= self.max_nodes
    }
}

impl std::fmt::Display for ShardKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.n_vars, self.max_nodes)
    }
}

#[derive(Debug, Clone)]
pub struct Shard {
    key: ShardKey,
    formulas: Vec<Formula>,
    texts: Vec<String>,
    node_counts: Vec<usize>,
    /// Largest variable index used, for filtering by dataset dimension.
    max_vars: Vec<usize>,
    /// Row-major `len x dim` embeddings.
    data: Vec<f32>,
    ivf: Option<Ivf>,
}

impl Shard {
    fn new(key: ShardKey, dim: usize, rows: Vec<(Formula, Vec<f32>)>) -> Self {
        let mut s = Shard {
            key,
            formulas: Vec::with_capacity(rows.len()),
            texts: Vec::with_capacity(rows.len()),
            node_counts: Vec::with_capacity(rows.len()),
            max_vars: Vec::with_capacity(rows.len()),
            data: Vec::with_capacity(rows.len() * dim),
            ivf: None,
        };
        for (f, e) in rows {
            debug_assert_eq!(e.len(), dim);
            s.texts.push(f.to_string());
            s.node_counts.push(f.node_count());
            s.max_vars.push(f.max_var().unwrap_or(0));
            s.formulas.push(f);
            s.data.extend(e);
        }
        s
    }

    pub fn key(&self) -> ShardKey {
        self.key
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn text(&self, row: usize) -> &str {
        &self.texts[row]
    }

    pub fn embedding(&self, row: usize) -> &[f32] {
        let dim = self.data.len() / self.len().max(1);
        &self.data[row * dim..(row + 1) * dim]
    }

    pub fn ivf(&self) -> Option<&Ivf> {
        self.ivf.as_ref()
    }
}

/// Summary stored at the head of a database file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub dim: usize,
    /// Length of the trace domain the stored time bounds refer to.
    pub n_points: usize,
    pub reference_seed: u64,
    pub reference_n_mc: usize,
    pub shards: Vec<ShardInfo>,
    pub build: Option<BuildConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShardInfo {
    pub key: ShardKey,
    pub count: usize,
}

/// What a database needs to know about the reference set behind its embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceInfo {
    pub dim: usize,
    pub n_points: usize,
    pub seed: u64,
    pub n_mc: usize,
}

impl ReferenceInfo {
    pub fn of(r: &ReferenceSet) -> Self {
        Self { dim: r.n_train(), n_points: r.n_points(), seed: r.seed(), n_mc: r.n_mc() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    #[default]
    Exact,
    /// Scan the `nprobe` nearest inverted-file cells of shards that have an
    /// index; shards without one are scanned exhaustively.
    Ivf { nprobe: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOptions {
    pub k: usize,
    pub keys: Vec<ShardKey>,
    /// Skip formulae using variable indices `>= max_dim`.
    pub max_dim: Option<usize>,
    pub mode: SearchMode,
}

impl QueryOptions {
    pub fn exact(k: usize, keys: Vec<ShardKey>) -> Self {
        Self { k, keys, max_dim: None, mode: SearchMode::Exact }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub formula: Formula,
    pub text: String,
    pub distance: f64,
    /// 1-based.
    pub rank: usize,
    pub key: ShardKey,
    pub entry: EntryRef,
}

/// A stored entry addressed by shard index and row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryRef {
    pub shard: usize,
    pub row: usize,
}

#[derive(Debug, Clone)]
pub struct SemanticDb {
    manifest: Manifest,
    shards: Vec<Shard>,
}

/// Candidate during search, ordered by distance, then node count, then text.
#[derive(Clone, Copy)]
struct Hit<'a> {
    distance: f64,
    nodes: usize,
    text: &'a str,
    entry: EntryRef,
}

fn hit_order(a: &Hit, b: &Hit) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then(a.nodes.cmp(&b.nodes))
        .then_with(|| a.text.cmp(b.text))
}

fn hash_row(e: &[f32]) -> u64 {
    e.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| (h ^ v.to_bits() as u64).wrapping_mul(0x0100_0000_01b3))
}

pub(crate) fn l2(q: &[f32], x: &[f32]) -> f64 {
    q.iter()
        .zip(x)
        .map(|(a, b)| {
            let d = *a as f64 - *b as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

impl SemanticDb {
    /// Groups embedded formulae into shards. A formula lands in every shard
    /// whose node budget it fits; budgets above `max_nodes` are not created
    /// except that the smallest budget always exists. Within a shard, rows are
    /// ordered by node count then text, and rows whose stored embedding equals
    /// an earlier row's bit for bit are dropped.
    pub fn from_embedded(entries: Vec<(Formula, Vec<f64>)>, max_nodes: usize, reference: ReferenceInfo) -> Result<Self> {
        let dim = reference.dim;
        if let Some((_, e)) = entries.iter().find(|(_, e)| e.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: e.len() });
        }
        if max_nodes > *SHARD_NODE_BUDGETS.last().expect("non-empty") {
            return Err(Error::Config(format!("formulae with {max_nodes} nodes exceed every shard budget")));
        }
        let budgets: Vec<usize> = SHARD_NODE_BUDGETS
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, b)| *i == 0 || *b <= max_nodes)
            .map(|(_, b)| b)
            .collect();
        let mut rows: Vec<(Formula, Vec<f32>, String)> = entries
            .into_iter()
            .filter(|(f, _)| f.node_count() <= max_nodes)
            .map(|(f, e)| {
                let t = f.to_string();
                (f, e.into_iter().map(|v| v as f32).collect(), t)
            })
            .collect();
        rows.sort_by(|a, b| a.0.node_count().cmp(&b.0.node_count()).then_with(|| a.2.cmp(&b.2)));
        rows.dedup_by(|a, b| a.2 == b.2);

        let max_vars = rows.iter().map(|(f, _, _)| f.var_count()).max().unwrap_or(0);
        let mut shards = Vec::new();
        for n_vars in 1..=max_vars {
            for &budget in &budgets {
                let key = ShardKey::new(n_vars, budget);
                let mut seen: std::collections::HashMap<u64, Vec<usize>> = Default::default();
                let mut kept: Vec<(Formula, Vec<f32>)> = Vec::new();
                for (f, e, _) in rows.iter().filter(|(f, _, _)| key.admits(f)) {
                    let h = hash_row(e);
                    let bucket = seen.entry(h).or_default();
                    if bucket.iter().any(|&i| kept[i].1 == *e) {
                        continue;
                    }
                    bucket.push(kept.len());
                    kept.push((f.clone(), e.clone()));
                }
                if kept.is_empty() {
                    log::warn!("shard {key} is empty");
                }
                shards.push(Shard::new(key, dim, kept));
            }
        }
        let manifest = Manifest {
            dim,
            n_points: reference.n_points,
            reference_seed: reference.seed,
            reference_n_mc: reference.n_mc,
            shards: shards.iter().map(|s| ShardInfo { key: s.key, count: s.len() }).collect(),
            build: None,
        };
        Ok(Self { manifest, shards })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn dim(&self) -> usize {
        self.manifest.dim
    }

    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }

    pub fn shard(&self, key: ShardKey) -> Option<&Shard> {
        self.shards.iter().find(|s| s.key == key)
    }

    pub fn keys(&self) -> Vec<ShardKey> {
        self.shards.iter().map(|s| s.key).collect()
    }

    /// Total stored rows, counting formulae held by several shards once per shard.
    pub fn len(&self) -> usize {
        self.shards.iter().map(Shard::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn formula(&self, e: EntryRef) -> &Formula {
        &self.shards[e.shard].formulas[e.row]
    }

    pub fn text(&self, e: EntryRef) -> &str {
        &self.shards[e.shard].texts[e.row]
    }

    pub fn embedding(&self, e: EntryRef) -> &[f32] {
        self.shards[e.shard].embedding(e.row)
    }

    /// Entries of the selected shards, one per distinct formula text, in shard
    /// then row order.
    pub fn entries(&self, keys: &[ShardKey], max_dim: Option<usize>) -> Vec<EntryRef> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (si, s) in self.shards.iter().enumerate() {
            if !keys.contains(&s.key) {
                continue;
            }
            for row in 0..s.len() {
                if max_dim.is_some_and(|d| s.max_vars[row] >= d) {
                    continue;
                }
                if seen.insert(s.texts[row].as_str()) {
                    out.push(EntryRef { shard: si, row });
                }
            }
        }
        out
    }

    pub fn query(&self, e: &[f64], k: usize, keys: &[ShardKey]) -> Result<Vec<QueryResult>> {
        self.query_with(e, &QueryOptions::exact(k, keys.to_vec()))
    }

    pub fn query_with(&self, e: &[f64], opts: &QueryOptions) -> Result<Vec<QueryResult>> {
        if e.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: e.len() });
        }
        if opts.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if opts.keys.is_empty() {
            return Err(Error::Config("at least one shard key is required".into()));
        }
        let q: Vec<f32> = e.iter().map(|v| *v as f32).collect();
        let mut hits: Vec<Hit> = Vec::new();
        let mut n_shards = 0;
        for (si, s) in self.shards.iter().enumerate() {
            if !opts.keys.contains(&s.key) || s.is_empty() {
                continue;
            }
            n_shards += 1;
            let rows: Vec<usize> = match (opts.mode, &s.ivf) {
                (SearchMode::Ivf { nprobe }, Some(ivf)) => ivf.probe(&q, nprobe),
                _ => (0..s.len()).collect(),
            };
            let shard_hits = rows
                .par_iter()
                .filter(|&&row| !opts.max_dim.is_some_and(|d| s.max_vars[row] >= d))
                .map(|&row| Hit {
                    distance: l2(&q, s.embedding(row)),
                    nodes: s.node_counts[row],
                    text: &s.texts[row],
                    entry: EntryRef { shard: si, row },
                })
                .collect::<Vec<_>>();
            hits.extend(shard_hits);
        }
        // a text occurs at most once per shard, so the first k distinct texts
        // lie within the best k * n_shards hits
        let keep = opts.k.saturating_mul(n_shards.max(1));
        if hits.len() > keep {
            hits.select_nth_unstable_by(keep - 1, hit_order);
            hits.truncate(keep);
        }
        hits.sort_by(hit_order);
        let mut seen = HashSet::new();
        Ok(hits
            .into_iter()
            .filter(|h| seen.insert(h.text))
            .take(opts.k)
            .enumerate()
            .map(|(i, h)| QueryResult {
                formula: self.formula(h.entry).clone(),
                text: h.text.to_string(),
                distance: h.distance,
                rank: i + 1,
                key: self.shards[h.entry.shard].key,
                entry: h.entry,
            })
            .collect())
    }

    /// Trains an inverted-file index on every shard holding at least `nlist` rows.
    pub fn train_ivf(&mut self, nlist: usize, iterations: usize, seed: u64) -> Result<()> {
        if nlist == 0 {
            return Err(Error::Config("nlist must be positive".into()));
        }
        let dim = self.dim();
        let mut trained = 0;
        for s in &mut self.shards {
            if s.len() >= nlist {
                s.ivf = Some(Ivf::train(&s.data, dim, nlist, iterations, seed)?);
                trained += 1;
            }
        }
        if trained == 0 {
            return Err(Error::Config(format!("no shard holds at least nlist = {nlist} rows")));
        }
        Ok(())
    }

    /// Trains an inverted-file index on one shard.
    pub fn train_ivf_shard(&mut self, key: ShardKey, nlist: usize, iterations: usize, seed: u64) -> Result<()> {
        let dim = self.dim();
        let s = self
            .shards
            .iter_mut()
            .find(|s| s.key == key)
            .ok_or_else(|| Error::Config(format!("no shard {key}")))?;
        if nlist == 0 || nlist > s.len() {
            return Err(Error::Config(format!("nlist = {nlist} must lie in 1..={}", s.len())));
        }
        s.ivf = Some(Ivf::train(&s.data, dim, nlist, iterations, seed)?);
        Ok(())
    }

    pub fn set_build_config(&mut self, cfg: BuildConfig) {
        self.manifest.build = Some(cfg);
    }

    /// Checks that embeddings from `r` are comparable with the stored ones.
    pub fn check_reference(&self, r: &ReferenceSet) -> Result<()> {
        let info = ReferenceInfo::of(r);
        let m = &self.manifest;
        if info.dim != m.dim || info.seed != m.reference_seed || info.n_mc != m.reference_n_mc {
            return Err(Error::Config(format!(
                "reference set (n_train {}, n_mc {}, seed {}) does not match the database (dim {}, n_mc {}, seed {})",
                info.dim, info.n_mc, info.seed, m.dim, m.reference_n_mc, m.reference_seed
            )));
        }
        Ok(())
    }
}
