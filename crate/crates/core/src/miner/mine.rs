use std::collections::HashSet;

use log::{debug, info, warn};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::acquire::{acquire, AcquireConfig, CandidatePool};
use super::gp::{beta_schedule, GpConfig, GpHyper, GpModel};
use super::objective::objective_g;
use crate::error::{Error, Result};
use crate::eval::{classify_metrics, ClassMetrics};
use crate::stl::{is_evaluable, Formula, LabeledDataset};
use crate::traj::{denormalize_thresholds, normalize, rescale_time_bounds, DatasetStats};
use crate::vecdb::{EntryRef, SemanticDb, ShardKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BetaConfig {
    pub cap: f64,
    /// Overrides the schedule with a fixed value.
    pub constant: Option<f64>,
}

impl Default for BetaConfig {
    fn default() -> Self {
        Self { cap: 16.0, constant: None }
    }
}

impl BetaConfig {
    pub fn at(&self, t: usize) -> f64 {
        self.constant.unwrap_or_else(|| beta_schedule(t, self.cap))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoConfig {
    pub maxiter: usize,
    pub epsilon: f64,
    pub patience: usize,
    pub burn_in: usize,
    pub initial: usize,
    /// Candidates proposed per iteration.
    pub batch: usize,
    pub beta: BetaConfig,
    pub acquisition: AcquireConfig,
    pub retrieval_depth: usize,
    /// Retrieval depth is doubled up to this bound when every hit was already evaluated.
    pub max_retrieval_depth: usize,
    /// Node budget of the shards searched.
    pub shard_budget: usize,
    pub normalize: bool,
    pub gp: GpConfig,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            maxiter: 50,
            epsilon: 1e-3,
            patience: 5,
            burn_in: 10,
            initial: 10,
            batch: 1,
            beta: BetaConfig::default(),
            acquisition: AcquireConfig::default(),
            retrieval_depth: 10,
            max_retrieval_depth: 160,
            shard_budget: 4,
            normalize: true,
            gp: GpConfig::default(),
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.maxiter < 1 {
            return bad("maxiter must be at least 1");
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be non-negative");
        }
        if self.initial < 2 {
            return bad("the initial batch needs at least two formulae");
        }
        if self.batch < 1 || self.retrieval_depth < 1 || self.patience < 1 {
            return bad("batch, retrieval_depth and patience must be at least 1");
        }
        if self.max_retrieval_depth < self.retrieval_depth {
            return bad("max_retrieval_depth must be at least retrieval_depth");
        }
        if self.acquisition.n_candidates < 1 {
            return bad("n_candidates must be at least 1");
        }
        if let Some(b) = self.beta.constant {
            if !(b >= 0.0 && b.is_finite()) {
                return bad("constant beta must be finite and non-negative");
            }
        }
        if !(self.gp.noise_floor > 0.0) || self.gp.restarts < 1 {
            return bad("gp noise_floor must be positive and restarts at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// 0 for the initial batch.
    pub iteration: usize,
    pub formula: String,
    pub g: f64,
    #[serde(skip)]
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Maxiter,
    Plateau,
    Exhausted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiningResult {
    /// On the data's own scale and length.
    pub formula: String,
    /// As stored: normalized thresholds, reference time domain.
    pub stored_formula: String,
    pub best_g: f64,
    pub trace: Vec<TraceEntry>,
    /// Best G after each iteration, starting with the initial batch.
    pub opt: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
    pub stats: DatasetStats,
    pub hyper: Option<GpHyper>,
    pub train_metrics: ClassMetrics,
    #[serde(skip)]
    pub best: Option<Formula>,
}

impl MiningResult {
    pub fn best_formula(&self) -> &Formula {
        self.best.as_ref().expect("set by mine")
    }
}

struct State<'a, 'p> {
    pool: &'p mut CandidatePool<'a>,
    data: LabeledDataset,
    n_points: usize,
    evaluated: HashSet<String>,
    trace: Vec<TraceEntry>,
    /// Stored entry of each trace element.
    entries: Vec<EntryRef>,
    neighbors: usize,
}

impl State<'_, '_> {
    /// Evaluates a stored formula once; returns whether it entered the trace.
    fn evaluate(&mut self, e: EntryRef, iteration: usize) -> Result<bool> {
        let db = self.pool.db();
        let text = db.text(e).to_string();
        if !self.evaluated.insert(text.clone()) {
            return Ok(false);
        }
        let f = rescale_time_bounds(db.formula(e), self.n_points);
        if !is_evaluable(&f, self.n_points, 1.0) {
            debug!("skipping {text}: not evaluable on {} samples", self.n_points);
            return Ok(false);
        }
        let g = objective_g(&f, &self.data)?;
        if !g.is_finite() {
            return Ok(false);
        }
        self.pool.add_neighbors(e, self.neighbors)?;
        debug!("iter {iteration}: G = {g:.4} for {text}");
        self.trace.push(TraceEntry { iteration, formula: text, g, embedding: self.pool.embedding(e) });
        self.entries.push(e);
        Ok(true)
    }

    /// Index of the first maximum of G.
    fn best(&self) -> Option<usize> {
        (0..self.trace.len()).fold(None, |b, i| match b {
            Some(b) if self.trace[b].g >= self.trace[i].g => Some(b),
            _ => Some(i),
        })
    }
}

/// Relative tolerance under which two values of G count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

/// Trace index of the returned formula. G is blind to thresholds whenever
/// robustness only shifts (single-atom formulae), so near-maximal entries are
/// ranked by training MCR, then node count, then trace order.
fn break_ties(st: &State, best_g: f64) -> Result<usize> {
    let floor = best_g - TIE_TOLERANCE * best_g.abs().max(1.0);
    let tied: Vec<usize> = (0..st.trace.len()).filter(|&i| st.trace[i].g >= floor).collect();
    if tied.len() == 1 {
        return Ok(tied[0]);
    }
    let mut scored = Vec::with_capacity(tied.len());
    for i in tied {
        let f = rescale_time_bounds(st.pool.db().formula(st.entries[i]), st.n_points);
        scored.push((classify_metrics(&f, &st.data)?.mcr, f.node_count(), i));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(scored[0].2)
}

/// Shards searched for a dataset of `dim` variables.
pub fn mining_keys(db: &SemanticDb, dim: usize, budget: usize) -> Vec<ShardKey> {
    db.keys().into_iter().filter(|k| k.max_nodes == budget && k.n_vars <= dim).collect()
}

/// Bayesian optimization over the stored formulae, inverting each proposed
/// embedding by nearest-neighbour retrieval.
pub fn mine(d: &LabeledDataset, db: &SemanticDb, cfg: &BoConfig, seed: u64) -> Result<MiningResult> {
    cfg.validate()?;
    d.require_both_classes()?;
    let (dim, n_points) = d.shape()?;
    let (data, stats) = if cfg.normalize { normalize(d)? } else { (d.clone(), DatasetStats::identity(dim)) };
    let keys = mining_keys(db, dim, cfg.shard_budget);
    if keys.is_empty() {
        return Err(Error::NoCandidates(format!("db has no shard with budget {} and at most {dim} variables", cfg.shard_budget)));
    }
    let mut pool = CandidatePool::new(db, keys, Some(dim))?;
    let mut st = State {
        pool: &mut pool,
        data,
        n_points,
        evaluated: HashSet::new(),
        trace: Vec::new(),
        entries: Vec::new(),
        neighbors: cfg.acquisition.neighbors,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_eligible = st.pool.eligible().len();
    let order = sample(&mut rng, n_eligible, n_eligible).into_vec();
    for i in order {
        if st.trace.len() >= cfg.initial {
            break;
        }
        let e = st.pool.eligible()[i];
        st.evaluate(e, 0)?;
    }
    if st.trace.len() < 2 {
        return Err(Error::NoCandidates("fewer than two stored formulae are evaluable on the data".into()));
    }

    let mut opt = vec![st.trace[st.best().expect("non-empty")].g];
    let mut hyper = None;
    let mut stop = StopReason::Maxiter;
    let mut iterations = 0;
    for it in 1..=cfg.maxiter {
        iterations = it;
        let x: Vec<Vec<f64>> = st.trace.iter().map(|t| t.embedding.clone()).collect();
        let y: Vec<f64> = st.trace.iter().map(|t| t.g).collect();
        let gp = GpModel::fit(&x, &y, &GpConfig { seed: cfg.gp.seed ^ it as u64, ..cfg.gp.clone() })?;
        hyper = Some(gp.hyper());
        let mut ranked: Vec<&TraceEntry> = st.trace.iter().collect();
        ranked.sort_by(|a, b| b.g.total_cmp(&a.g));
        let starts: Vec<Vec<f64>> = ranked.iter().take(cfg.batch).map(|t| t.embedding.clone()).collect();
        let acq_seed = seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(it as u64));
        let proposals = acquire(&gp, st.pool, cfg.beta.at(it), cfg.batch, &cfg.acquisition, &st.evaluated, &starts, acq_seed)?;

        let mut added = 0;
        for p in proposals {
            let mut depth = cfg.retrieval_depth;
            let mut done = false;
            while !done {
                let hits = st.pool.nearest(&p, depth)?;
                for e in &hits {
                    if st.evaluated.contains(st.pool.db().text(*e)) {
                        continue;
                    }
                    // non-evaluable hits are marked as seen and skipped
                    if st.evaluate(*e, it)? {
                        added += 1;
                        done = true;
                        break;
                    }
                }
                if done || depth >= cfg.max_retrieval_depth || hits.len() < depth {
                    break;
                }
                depth = (depth * 2).min(cfg.max_retrieval_depth);
            }
            if !done {
                warn!("iteration {it}: every retrieved formula was already evaluated");
            }
        }
        opt.push(st.trace[st.best().expect("non-empty")].g);
        if added == 0 {
            warn!("iteration {it}: no new formula, stopping");
            stop = StopReason::Exhausted;
            break;
        }
        if it > cfg.burn_in && opt[it] - opt[it - cfg.patience] < cfg.epsilon {
            stop = StopReason::Plateau;
            break;
        }
    }

    let best_g = st.trace[st.best().expect("non-empty")].g;
    let bi = break_ties(&st, best_g)?;
    let best = st.trace[bi].clone();
    let stored = db.formula(st.entries[bi]);
    let final_formula = denormalize_thresholds(&rescale_time_bounds(stored, n_points), &stats)?;
    let train_metrics = classify_metrics(&final_formula, d)?;
    info!(
        "mined {final_formula} (G = {:.4}) after {iterations} iterations and {} evaluations",
        best_g,
        st.trace.len()
    );
    Ok(MiningResult {
        formula: final_formula.to_string(),
        stored_formula: best.formula.clone(),
        best_g,
        trace: st.trace,
        opt,
        iterations,
        stop,
        stats,
        hyper,
        train_metrics,
        best: Some(final_formula),
    })
}
