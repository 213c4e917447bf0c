//! Run configuration: every tunable of the pipeline in one TOML document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embed::{FDistParams, ReferenceSet};
use crate::error::{Error, Result};
use crate::eval::EffectivenessConfig;
use crate::miner::{BoConfig, CvConfig};
use crate::traj::{LinearSystem, Mu0Params};
use crate::vecdb::BuildConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub n_train: usize,
    pub n_mc: usize,
    pub arctan: bool,
    pub fdist: FDistParams,
    pub mu0: Mu0Params,
    pub seed: u64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { n_train: 1000, n_mc: 10_000, arctan: false, fdist: FDistParams::default(), mu0: Mu0Params::default(), seed: 0 }
    }
}

impl ReferenceConfig {
    pub fn build(&self) -> Result<ReferenceSet> {
        ReferenceSet::build_with(self.n_train, self.n_mc, &self.fdist, &self.mu0, self.seed, self.arctan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IvfConfig {
    /// Train an inverted file with this many lists on every large enough shard.
    pub nlist: Option<usize>,
    pub iterations: usize,
    /// Lists probed at query time; exact search when unset.
    pub nprobe: Option<usize>,
}

impl Default for IvfConfig {
    fn default() -> Self {
        Self { nlist: None, iterations: 20, nprobe: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearConfig {
    pub system: LinearSystem,
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_points: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self { system: LinearSystem::default(), n_pos: 100, n_neg: 100, n_points: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub db: PathBuf,
    pub reference: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { db: "stl.db".into(), reference: "reference.bin".into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed of data generation, mining and retrieval evaluation. The database
    /// and reference set keep their own seeds so they can be rebuilt alone.
    pub seed: u64,
    pub reference: ReferenceConfig,
    pub build: BuildConfig,
    pub ivf: IvfConfig,
    pub linear: LinearConfig,
    pub bo: BoConfig,
    pub cv: CvConfig,
    pub retrieval: EffectivenessConfig,
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything that does not need a built reference set.
    pub fn validate(&self) -> Result<()> {
        let r = &self.reference;
        if r.n_train == 0 || r.n_mc == 0 {
            return Err(Error::Config("reference n_train and n_mc must be positive".into()));
        }
        r.fdist.validate()?;
        r.mu0.validate()?;
        self.build.mu0.validate()?;
        self.build.grid.validate()?;
        if self.build.max_vars > r.fdist.max_vars {
            return Err(Error::Config("build.max_vars exceeds the reference trajectories' dimension".into()));
        }
        if !(self.build.tau_sim > 0.0 && self.build.tau_sim <= 1.0) {
            return Err(Error::Config("tau_sim must lie in (0, 1]".into()));
        }
        if self.ivf.nlist == Some(0) || self.ivf.nprobe == Some(0) || self.ivf.iterations == 0 {
            return Err(Error::Config("ivf nlist, nprobe and iterations must be positive".into()));
        }
        if self.linear.n_points < 2 {
            return Err(Error::Config("linear.n_points must be at least 2".into()));
        }
        self.bo.validate()?;
        if self.cv.folds < 2 {
            return Err(Error::Config("cv.folds must be at least 2".into()));
        }
        let q = &self.retrieval;
        q.fdist.validate()?;
        if q.n_queries == 0 || q.k == 0 || q.n_traj == 0 || !(0.0..=1.0).contains(&q.omega) {
            return Err(Error::Config("retrieval needs positive n_queries, k, n_traj and omega in [0, 1]".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg = RunConfig::from_toml("seed = 3\n[bo]\nmaxiter = 5\n[build]\ntau_sim = 0.99\n").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.bo.maxiter, 5);
        assert_eq!(cfg.bo.initial, 10);
        assert_eq!(cfg.build.tau_sim, 0.99);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml("sed = 3").is_err());
        assert!(RunConfig::from_toml("[bo]\nmax_iter = 5").is_err());
        assert!(RunConfig::from_toml("[bo]\ninitial = 1").is_err());
        assert!(RunConfig::from_toml("[build]\ntau_sim = 1.5").is_err());
        assert!(RunConfig::from_toml("[reference]\nn_mc = 0").is_err());
    }
}
