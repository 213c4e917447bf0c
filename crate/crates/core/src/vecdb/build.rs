use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{ReferenceInfo, SemanticDb, SHARD_NODE_BUDGETS};
use crate::embed::ReferenceSet;
use crate::enumerate::{enumerate_templates, instantiate_grid, signature_filter_par, ParameterGrid};
use crate::error::{Error, Result};
use crate::stl::is_evaluable;
use crate::traj::{sample_mu0_batch, Mu0Params};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildConfig {
    /// Largest template size in nodes.
    pub max_nodes: usize,
    /// Templates range over variables `x0..x{max_vars-1}`.
    pub max_vars: usize,
    pub grid: ParameterGrid,
    /// Cosine-similarity threshold of the redundancy filter.
    pub tau_sim: f64,
    /// Per-template limit on grid instances; larger grids are subsampled.
    pub cap: Option<usize>,
    /// Number of base-measure trajectories used for signatures.
    pub n_signature: usize,
    pub mu0: Mu0Params,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            max_nodes: 5,
            max_vars: 3,
            grid: ParameterGrid::default(),
            tau_sim: 0.9,
            cap: Some(10_000),
            n_signature: 100,
            mu0: Mu0Params::default(),
            seed: 0,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self, r: &ReferenceSet) -> Result<()> {
        let budget = *SHARD_NODE_BUDGETS.last().expect("non-empty");
        if self.max_nodes == 0 || self.max_nodes > budget {
            return Err(Error::Config(format!("max_nodes must lie in 1..={budget}")));
        }
        if self.max_vars == 0 || self.max_vars > r.dim() {
            return Err(Error::Config(format!(
                "max_vars must lie in 1..={} (the reference trajectories' dimension)",
                r.dim()
            )));
        }
        if !(self.tau_sim > 0.0 && self.tau_sim <= 1.0) {
            return Err(Error::Config("tau_sim must lie in (0, 1]".into()));
        }
        if self.cap == Some(0) || self.n_signature == 0 {
            return Err(Error::Config("cap and n_signature must be positive".into()));
        }
        self.grid.validate()?;
        self.mu0.validate()?;
        if self.mu0.n_points() != r.n_points() {
            return Err(Error::Config("signature trajectories and reference set differ in length".into()));
        }
        Ok(())
    }
}

/// Enumerates templates, instantiates them on the grid, drops redundant
/// instances per template by signature, embeds the survivors and shards them.
pub fn build_db(cfg: &BuildConfig, r: &ReferenceSet) -> Result<SemanticDb> {
    cfg.validate(r)?;
    let started = Instant::now();
    let n_points = r.n_points();
    let dt = r.trajectories()[0].dt();
    let sig_trajs = sample_mu0_batch(&cfg.mu0, cfg.max_vars, cfg.n_signature, cfg.seed)?;
    let templates = enumerate_templates(cfg.max_nodes, cfg.max_vars);
    let mut kept = Vec::new();
    let mut n_candidates = 0usize;
    for (i, t) in templates.iter().enumerate() {
        let cands: Vec<_> = instantiate_grid(t, &cfg.grid, cfg.cap, cfg.seed)?
            .into_iter()
            .filter(|f| is_evaluable(f, n_points, dt))
            .collect();
        n_candidates += cands.len();
        kept.extend(signature_filter_par(cands, &sig_trajs, cfg.tau_sim)?);
        if (i + 1) % 50 == 0 {
            log::info!("template {}/{}: {} kept of {}", i + 1, templates.len(), kept.len(), n_candidates);
        }
    }
    log::info!(
        "{} templates, {} candidates, {} after filtering ({:.1?})",
        templates.len(),
        n_candidates,
        kept.len(),
        started.elapsed()
    );
    let embeddings = r.try_embed_batch(&kept)?;
    let entries: Vec<_> = kept
        .into_iter()
        .zip(embeddings)
        .filter_map(|(f, e)| e.map(|e| (f, e)))
        .collect();
    log::info!("embedded {} formulae ({:.1?})", entries.len(), started.elapsed());
    let mut db = SemanticDb::from_embedded(entries, cfg.max_nodes, ReferenceInfo::of(r))?;
    db.set_build_config(cfg.clone());
    Ok(db)
}
