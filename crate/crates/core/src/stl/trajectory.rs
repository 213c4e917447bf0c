use crate::error::{Error, Result};

/// Uniformly sampled multivariate signal, stored one dimension after another.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    n_points: usize,
    dt: f64,
    values: Vec<f64>,
}

impl Trajectory {
    /// `values[d * n_points + t]` is dimension `d` at sample `t`.
    pub fn new(dim: usize, n_points: usize, values: Vec<f64>, dt: f64) -> Result<Self> {
        if dim == 0 || n_points == 0 {
            return Err(Error::InvalidTrajectory("dim and n_points must be positive".into()));
        }
        if values.len() != dim * n_points {
            return Err(Error::InvalidTrajectory(format!(
                "expected {} values for {dim}x{n_points}, got {}",
                dim * n_points,
                values.len()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTrajectory(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { dim, n_points, dt, values })
    }

    pub fn from_channels(channels: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        let dim = channels.len();
        let n_points = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != n_points) {
            return Err(Error::InvalidTrajectory("channels have different lengths".into()));
        }
        Self::new(dim, n_points, channels.concat(), dt)
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(1, n, values, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn channel(&self, d: usize) -> &[f64] {
        &self.values[d * self.n_points..(d + 1) * self.n_points]
    }

    #[inline]
    pub fn value(&self, d: usize, t: usize) -> f64 {
        self.values[d * self.n_points + t]
    }

    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Trajectory {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i / self.n_points, v))
            .collect();
        Trajectory { values, ..*self }
    }
}

/// Positive (regular) and negative (anomalous) trajectories.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub positives: Vec<Trajectory>,
    pub negatives: Vec<Trajectory>,
}

impl LabeledDataset {
    pub fn new(positives: Vec<Trajectory>, negatives: Vec<Trajectory>) -> Result<Self> {
        let d = Self { positives, negatives };
        d.shape()?;
        Ok(d)
    }

    /// Shared `(dim, n_points)`; errors if trajectories disagree or the set is empty.
    pub fn shape(&self) -> Result<(usize, usize)> {
        let first = self
            .positives
            .first()
            .or(self.negatives.first())
            .ok_or_else(|| Error::InvalidDataset("dataset is empty".into()))?;
        let shape = (first.dim(), first.n_points());
        if self.iter().any(|(_, t)| (t.dim(), t.n_points()) != shape) {
            return Err(Error::InvalidDataset("trajectories differ in dimension or length".into()));
        }
        Ok(shape)
    }

    pub fn require_both_classes(&self) -> Result<()> {
        if self.positives.is_empty() || self.negatives.is_empty() {
            return Err(Error::InvalidDataset("both classes must be non-empty".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(is_positive, trajectory)` over positives then negatives.
    pub fn iter(&self) -> impl Iterator<Item = (bool, &Trajectory)> {
        self.positives
            .iter()
            .map(|t| (true, t))
            .chain(self.negatives.iter().map(|t| (false, t)))
    }

    pub fn swapped(&self) -> LabeledDataset {
        LabeledDataset { positives: self.negatives.clone(), negatives: self.positives.clone() }
    }
}
