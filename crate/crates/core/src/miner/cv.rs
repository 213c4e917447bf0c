use std::fmt::Write as _;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mine::{mine, BoConfig, StopReason};
use crate::error::{Error, Result};
use crate::eval::{classify_metrics, ClassMetrics};
use crate::stl::LabeledDataset;
use crate::vecdb::SemanticDb;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub folds: usize,
    /// One stratified 80/20 split instead of the full rotation.
    pub single_split: bool,
    pub fold_seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { folds: 5, single_split: false, fold_seed: 0 }
    }
}

/// Fold index of every positive and every negative trajectory. Each class is
/// shuffled with `seed` and dealt round-robin.
pub fn stratified_folds(n_pos: usize, n_neg: usize, k: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if k < 2 {
        return Err(Error::Config("cross-validation needs at least two folds".into()));
    }
    if n_pos < k || n_neg < k {
        return Err(Error::InvalidDataset(format!("{k} folds need at least {k} trajectories per class")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deal = |n: usize| {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut fold = vec![0; n];
        for (pos, i) in idx.into_iter().enumerate() {
            fold[i] = pos % k;
        }
        fold
    };
    let p = deal(n_pos);
    let n = deal(n_neg);
    Ok((p, n))
}

fn split(d: &LabeledDataset, pf: &[usize], nf: &[usize], fold: usize) -> (LabeledDataset, LabeledDataset) {
    let pick = |src: &[crate::stl::Trajectory], folds: &[usize], test: bool| {
        src.iter().zip(folds).filter(|(_, f)| (**f == fold) == test).map(|(t, _)| t.clone()).collect::<Vec<_>>()
    };
    let train = LabeledDataset { positives: pick(&d.positives, pf, false), negatives: pick(&d.negatives, nf, false) };
    let test = LabeledDataset { positives: pick(&d.positives, pf, true), negatives: pick(&d.negatives, nf, true) };
    (train, test)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub formula: String,
    pub stored_formula: String,
    pub nodes: usize,
    pub best_g: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub stop: StopReason,
    pub train: ClassMetrics,
    pub test: ClassMetrics,
    pub g_trace: Vec<f64>,
}

/// Mean and population standard deviation over the folds where a metric is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub defined: usize,
}

impl MetricSummary {
    fn of(v: impl Iterator<Item = Option<f64>>) -> Self {
        let xs: Vec<f64> = v.flatten().collect();
        if xs.is_empty() {
            return Self { mean: None, std: None, defined: 0 };
        }
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let s = (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
        Self { mean: Some(m), std: Some(s), defined: xs.len() }
    }

    fn show(&self) -> String {
        match (self.mean, self.std) {
            (Some(m), Some(s)) => format!("{m:.2} ± {s:.2}"),
            _ => "n/a".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub seed: u64,
    pub cv: CvConfig,
    pub bo: BoConfig,
    pub folds: Vec<FoldReport>,
    pub mcr: MetricSummary,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    /// Formula of the fold with the lowest test MCR, fewer nodes on ties.
    pub best_formula: String,
}

impl CvReport {
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for f in &self.folds {
            let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
            let _ = writeln!(
                s,
                "fold {}: MCR {:.3}  Prec {}  Rec {}  G {:.3}  evals {}  {}",
                f.fold,
                f.test.mcr,
                opt(f.test.precision),
                opt(f.test.recall),
                f.best_g,
                f.evaluations,
                f.formula
            );
        }
        let _ = writeln!(s, "MCR {}  Prec {}  Rec {}", self.mcr.show(), self.precision.show(), self.recall.show());
        let _ = writeln!(s, "best formula: {}", self.best_formula);
        s
    }
}

/// Stratified k-fold cross-validation of [`mine`]. Fold `i` is mined with seed `seed + i`.
pub fn cross_validate(d: &LabeledDataset, db: &SemanticDb, bo: &BoConfig, cv: &CvConfig, seed: u64) -> Result<CvReport> {
    bo.validate()?;
    d.require_both_classes()?;
    let k = if cv.single_split { 5 } else { cv.folds };
    let (pf, nf) = stratified_folds(d.positives.len(), d.negatives.len(), k, cv.fold_seed)?;
    let n_runs = if cv.single_split { 1 } else { k };
    let mut folds = Vec::with_capacity(n_runs);
    for fold in 0..n_runs {
        let (train, test) = split(d, &pf, &nf, fold);
        let r = mine(&train, db, bo, seed.wrapping_add(fold as u64))?;
        let test_metrics = classify_metrics(r.best_formula(), &test)?;
        info!("fold {fold}: test MCR {:.3} with {}", test_metrics.mcr, r.formula);
        folds.push(FoldReport {
            fold,
            n_train: train.len(),
            n_test: test.len(),
            formula: r.formula.clone(),
            stored_formula: r.stored_formula.clone(),
            nodes: r.best_formula().node_count(),
            best_g: r.best_g,
            evaluations: r.trace.len(),
            iterations: r.iterations,
            stop: r.stop,
            train: r.train_metrics,
            test: test_metrics,
            g_trace: r.trace.iter().map(|t| t.g).collect(),
        });
    }
    let best = folds
        .iter()
        .min_by(|a, b| a.test.mcr.total_cmp(&b.test.mcr).then(a.nodes.cmp(&b.nodes)))
        .expect("at least one fold");
    Ok(CvReport {
        seed,
        cv: cv.clone(),
        bo: bo.clone(),
        mcr: MetricSummary::of(folds.iter().map(|f| Some(f.test.mcr))),
        precision: MetricSummary::of(folds.iter().map(|f| f.test.precision)),
        recall: MetricSummary::of(folds.iter().map(|f| f.test.recall)),
        best_formula: best.formula.clone(),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified_and_balanced() {
        let (p, n) = stratified_folds(100, 37, 5, 9).unwrap();
        for f in 0..5 {
            assert_eq!(p.iter().filter(|x| **x == f).count(), 20);
            let c = n.iter().filter(|x| **x == f).count();
            assert!(c == 7 || c == 8);
        }
        assert_eq!(stratified_folds(100, 37, 5, 9).unwrap(), (p, n));
        assert!(stratified_folds(3, 10, 5, 0).is_err());
    }

    #[test]
    fn summary_skips_undefined() {
        let s = MetricSummary::of([Some(1.0), None, Some(0.0)].into_iter());
        assert_eq!((s.mean, s.std, s.defined), (Some(0.5), Some(0.5), 2));
        assert_eq!(MetricSummary::of([None].into_iter()).mean, None);
    }
}
