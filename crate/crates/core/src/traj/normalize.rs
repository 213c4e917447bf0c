use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stl::{Atom, Formula, Interval, LabeledDataset, Trajectory};

/// Per-dimension mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl DatasetStats {
    /// Pooled over every sample of every trajectory, both classes together.
    pub fn from_dataset(d: &LabeledDataset) -> Result<Self> {
        let (dim, _) = d.shape()?;
        let mut mean = vec![0.0; dim];
        let mut std = vec![0.0; dim];
        for k in 0..dim {
            let mut count = 0usize;
            let mut sum = 0.0;
            for (_, t) in d.iter() {
                sum += t.channel(k).iter().sum::<f64>();
                count += t.n_points();
            }
            let m = sum / count as f64;
            let mut ss = 0.0;
            for (_, t) in d.iter() {
                ss += t.channel(k).iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            }
            let s = (ss / count as f64).sqrt();
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::ZeroVariance { dim: k });
            }
            mean[k] = m;
            std[k] = s;
        }
        Ok(Self { mean, std })
    }

    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, t: &Trajectory) -> Result<Trajectory> {
        self.check_dim(t)?;
        Ok(t.map_values(|d, v| (v - self.mean[d]) / self.std[d]))
    }

    pub fn invert(&self, t: &Trajectory) -> Result<Trajectory> {
        self.check_dim(t)?;
        Ok(t.map_values(|d, v| v * self.std[d] + self.mean[d]))
    }

    pub fn apply_dataset(&self, d: &LabeledDataset) -> Result<LabeledDataset> {
        Ok(LabeledDataset {
            positives: d.positives.iter().map(|t| self.apply(t)).collect::<Result<_>>()?,
            negatives: d.negatives.iter().map(|t| self.apply(t)).collect::<Result<_>>()?,
        })
    }

    pub fn invert_dataset(&self, d: &LabeledDataset) -> Result<LabeledDataset> {
        Ok(LabeledDataset {
            positives: d.positives.iter().map(|t| self.invert(t)).collect::<Result<_>>()?,
            negatives: d.negatives.iter().map(|t| self.invert(t)).collect::<Result<_>>()?,
        })
    }

    fn check_dim(&self, t: &Trajectory) -> Result<()> {
        if t.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: t.dim() });
        }
        Ok(())
    }
}

/// Standardizes every dimension with pooled statistics.
pub fn normalize(d: &LabeledDataset) -> Result<(LabeledDataset, DatasetStats)> {
    let stats = DatasetStats::from_dataset(d)?;
    Ok((stats.apply_dataset(d)?, stats))
}

pub fn denormalize(d: &LabeledDataset, stats: &DatasetStats) -> Result<LabeledDataset> {
    stats.invert_dataset(d)
}

/// Maps thresholds from normalized units back to the data's scale: `c * std + mean`.
pub fn denormalize_thresholds(f: &Formula, stats: &DatasetStats) -> Result<Formula> {
    f.try_map(
        &mut |a: &Atom| {
            if a.var >= stats.dim() {
                return Err(Error::MissingStats { var: a.var });
            }
            Ok(Atom::new(a.var, a.dir, a.threshold * stats.std[a.var] + stats.mean[a.var]))
        },
        &mut |i: &Interval| Ok(*i),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{parse_formula, satisfies};

    fn toy() -> LabeledDataset {
        let p = Trajectory::from_channels(vec![vec![1.0, 2.0, 3.0], vec![10.0, 12.0, 14.0]], 1.0).unwrap();
        let n = Trajectory::from_channels(vec![vec![-1.0, 0.0, 5.0], vec![9.0, 8.0, 7.0]], 1.0).unwrap();
        LabeledDataset::new(vec![p], vec![n]).unwrap()
    }

    #[test]
    fn standardizes_pooled() {
        let (nd, stats) = normalize(&toy()).unwrap();
        for k in 0..2 {
            let all: Vec<f64> = nd.iter().flat_map(|(_, t)| t.channel(k).to_vec()).collect();
            let m = all.iter().sum::<f64>() / all.len() as f64;
            let v = all.iter().map(|x| (x - m).powi(2)).sum::<f64>() / all.len() as f64;
            assert!(m.abs() < 1e-12);
            assert!((v - 1.0).abs() < 1e-12);
        }
        let back = denormalize(&nd, &stats).unwrap();
        for ((_, a), (_, b)) in back.iter().zip(toy().iter()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn standardized_data_is_fixed_point() {
        let (nd, _) = normalize(&toy()).unwrap();
        let (nd2, stats2) = normalize(&nd).unwrap();
        for k in 0..2 {
            assert!(stats2.mean[k].abs() < 1e-12);
            assert!((stats2.std[k] - 1.0).abs() < 1e-12);
        }
        for ((_, a), (_, b)) in nd.iter().zip(nd2.iter()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_dimension_rejected() {
        let t = Trajectory::univariate(vec![2.0; 4]).unwrap();
        let d = LabeledDataset::new(vec![t.clone()], vec![t]).unwrap();
        assert!(matches!(normalize(&d), Err(Error::ZeroVariance { dim: 0 })));
    }

    #[test]
    fn threshold_mapping() {
        let stats = DatasetStats { mean: vec![10.0], std: vec![2.0] };
        let f = parse_formula("x0 <= 1.0").unwrap();
        assert_eq!(denormalize_thresholds(&f, &stats).unwrap(), parse_formula("x0 <= 12.0").unwrap());
        let g = parse_formula("F[0,3] (x0 >= -0.5)").unwrap();
        assert_eq!(denormalize_thresholds(&g, &DatasetStats::identity(1)).unwrap(), g);
        let h = parse_formula("x1 <= 0").unwrap();
        assert!(matches!(denormalize_thresholds(&h, &stats), Err(Error::MissingStats { var: 1 })));
    }

    #[test]
    fn satisfaction_is_invariant() {
        let d = toy();
        let (nd, stats) = normalize(&d).unwrap();
        for text in ["x0 >= 0.3", "G[0,2] (x1 <= -0.1)", "(x0 <= 0) U[0,2] (x1 >= 1.2)"] {
            let f = parse_formula(text).unwrap();
            let g = denormalize_thresholds(&f, &stats).unwrap();
            for ((_, a), (_, b)) in nd.iter().zip(d.iter()) {
                assert_eq!(satisfies(&f, a, 0).unwrap(), satisfies(&g, b, 0).unwrap());
            }
        }
    }
}
