use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stl::{robustness, Formula, LabeledDataset};

/// Counts by robustness sign. Trajectories with zero robustness are not
/// assigned to any cell and are tallied in `zero`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub zero: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    /// Misclassification rate; zero-robustness cases count as errors.
    pub mcr: f64,
    /// `None` when no trajectory is classified positive.
    pub precision: Option<f64>,
    /// `None` when no positive trajectory is classified.
    pub recall: Option<f64>,
    pub counts: ConfusionCounts,
}

pub fn classify_metrics(f: &Formula, d: &LabeledDataset) -> Result<ClassMetrics> {
    let mut c = ConfusionCounts::default();
    for (positive, traj) in d.iter() {
        let rho = robustness(f, traj, 0)?;
        match (positive, rho > 0.0, rho < 0.0) {
            (_, false, false) => c.zero += 1,
            (true, true, _) => c.tp += 1,
            (true, _, true) => c.fn_ += 1,
            (false, true, _) => c.fp += 1,
            (false, _, true) => c.tn += 1,
        }
    }
    Ok(metrics_from_counts(c))
}

pub fn metrics_from_counts(c: ConfusionCounts) -> ClassMetrics {
    let total = c.tp + c.tn + c.fp + c.fn_ + c.zero;
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    ClassMetrics {
        mcr: if total == 0 { 0.0 } else { (c.fp + c.fn_ + c.zero) as f64 / total as f64 },
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
        counts: c,
    }
}
