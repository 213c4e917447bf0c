//! Classification and retrieval metrics, and the retrieval-effectiveness experiment.

mod classify;
mod effectiveness;
mod retrieval;

pub use classify::{classify_metrics, metrics_from_counts, ClassMetrics, ConfusionCounts};
pub use effectiveness::{
    quantile, retrieval_effectiveness, BucketSummary, EffectivenessConfig, EffectivenessReport, Quantiles, QueryRow,
};
pub use retrieval::{agreement, ap_at_k, ndcg_at_k, relevant};
