use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stl::{LabeledDataset, Trajectory};

/// Scalar system `x' = +rate*x + w` (regular) or `x' = -rate*x + w` (anomalous),
/// integrated with unit Euler steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSystem {
    pub rate: f64,
    /// Variance of the white noise term.
    pub noise_variance: f64,
    pub x0: f64,
}

impl Default for LinearSystem {
    fn default() -> Self {
        Self { rate: 0.03, noise_variance: 0.04, x0: 1.0 }
    }
}

impl LinearSystem {
    pub fn generate(&self, n_pos: usize, n_neg: usize, n_points: usize, seed: u64) -> Result<LabeledDataset> {
        if n_points < 2 {
            return Err(Error::Config("linear system needs at least two points".into()));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::Config("noise variance must be non-negative".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, self.noise_variance.sqrt()).expect("finite std");
        let mut run = |growth: f64| {
            let mut x = Vec::with_capacity(n_points);
            x.push(self.x0);
            for k in 0..n_points - 1 {
                let w = if self.noise_variance > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                x.push(x[k] + growth * x[k] + w);
            }
            Trajectory::univariate(x).expect("non-empty")
        };
        let positives = (0..n_pos).map(|_| run(self.rate)).collect();
        let negatives = (0..n_neg).map(|_| run(-self.rate)).collect();
        Ok(LabeledDataset { positives, negatives })
    }
}

pub fn gen_linear_dataset(n_pos: usize, n_neg: usize, n_points: usize, seed: u64) -> Result<LabeledDataset> {
    LinearSystem::default().generate(n_pos, n_neg, n_points, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_per_class_dataset() {
        let d = gen_linear_dataset(100, 100, 100, 7).unwrap();
        assert_eq!(d.positives.len(), 100);
        assert_eq!(d.negatives.len(), 100);
        assert_eq!(d.shape().unwrap(), (1, 100));
    }

    #[test]
    fn noiseless_growth_and_decay() {
        let sys = LinearSystem { noise_variance: 0.0, ..Default::default() };
        let d = sys.generate(1, 1, 50, 0).unwrap();
        let p = d.positives[0].channel(0);
        let n = d.negatives[0].channel(0);
        assert!(p.windows(2).all(|w| w[1].abs() > w[0].abs()));
        assert!(n.windows(2).all(|w| w[1].abs() < w[0].abs()));
        assert!((p[49] - 1.03f64.powi(49)).abs() < 1e-9);
        assert!((n[49] - 0.97f64.powi(49)).abs() < 1e-12);
    }

    #[test]
    fn mean_endpoint_follows_growth() {
        // E[x_k] obeys the noiseless recurrence since the noise is zero-mean.
        let d = gen_linear_dataset(100, 0, 100, 11).unwrap();
        let mean: f64 = d.positives.iter().map(|t| t.value(0, 99)).sum::<f64>() / 100.0;
        let expected = 1.03f64.powi(99);
        // std of the endpoint is sqrt(0.04 * sum_k 1.03^(2k)) ~ 5.5, so the mean of 100 has std ~0.55
        assert!((mean - expected).abs() < 2.5, "mean {mean} vs {expected}");
    }

    #[test]
    fn rejects_short_traces() {
        assert!(gen_linear_dataset(1, 1, 1, 0).is_err());
    }
}
