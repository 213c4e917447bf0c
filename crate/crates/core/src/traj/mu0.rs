//! Base measure over piecewise-linear trajectories.
//!
//! Each dimension starts at a Gaussian point, has a total variation drawn as a
//! squared Gaussian, splits that variation at sorted uniform cut points, and
//! walks with a slope sign that flips with probability `q` at every step.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stl::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Mu0Params {
    /// Sampling step.
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    /// Start point mean and standard deviation.
    pub start_mean: f64,
    pub start_std: f64,
    /// Total variation is the square of a Gaussian with these parameters.
    pub variation_mean: f64,
    pub variation_std: f64,
    /// Probability of a slope sign flip at each step.
    pub q: f64,
}

impl Default for Mu0Params {
    fn default() -> Self {
        Self {
            delta: 1.0,
            a: 0.0,
            b: 100.0,
            start_mean: 0.0,
            start_std: 1.0,
            variation_mean: 0.0,
            variation_std: 1.0,
            q: 0.1,
        }
    }
}

impl Mu0Params {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("mu0: {msg}")));
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !(self.b > self.a) {
            return bad("b must exceed a");
        }
        if !(self.start_std > 0.0 && self.variation_std > 0.0) {
            return bad("standard deviations must be positive");
        }
        if !(0.0..=1.0).contains(&self.q) {
            return bad("q must lie in [0, 1]");
        }
        if self.n_points() < 2 {
            return bad("interval must span at least two samples");
        }
        Ok(())
    }

    /// Number of samples: `(b - a) / delta`, i.e. 100 with the defaults.
    pub fn n_points(&self) -> usize {
        ((self.b - self.a) / self.delta).round() as usize
    }
}

/// One sampled dimension with the latent draws that produced it.
#[derive(Debug, Clone)]
pub struct Mu0Path {
    pub values: Vec<f64>,
    pub total_variation: f64,
    pub flips: usize,
}

pub fn sample_path<R: Rng + ?Sized>(p: &Mu0Params, rng: &mut R) -> Mu0Path {
    let n_points = p.n_points();
    let increments = n_points - 1;
    let start = Normal::new(p.start_mean, p.start_std).expect("validated std").sample(rng);
    let root = Normal::new(p.variation_mean, p.variation_std).expect("validated std").sample(rng);
    let total_variation = root * root;

    let mut levels = Vec::with_capacity(increments + 1);
    levels.push(0.0);
    for _ in 0..increments - 1 {
        levels.push(rng.random::<f64>() * total_variation);
    }
    levels.push(total_variation);
    levels[1..increments].sort_by(f64::total_cmp);

    let mut sign: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut flips = 0;
    let mut values = Vec::with_capacity(n_points);
    values.push(start);
    for i in 0..increments {
        if rng.random::<f64>() < p.q {
            sign = -sign;
            flips += 1;
        }
        let next = values[i] + sign * (levels[i + 1] - levels[i]);
        values.push(next);
    }
    Mu0Path { values, total_variation, flips }
}

/// Draws a `dim`-dimensional trajectory; dimensions are independent.
pub fn sample_mu0_with<R: Rng + ?Sized>(p: &Mu0Params, dim: usize, rng: &mut R) -> Trajectory {
    let channels = (0..dim).map(|_| sample_path(p, rng).values).collect();
    Trajectory::from_channels(channels, p.delta).expect("sampler output is rectangular")
}

pub fn sample_mu0(p: &Mu0Params, dim: usize, seed: u64) -> Result<Trajectory> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_mu0_with(p, dim, &mut rng))
}

/// `count` trajectories from one seeded stream.
pub fn sample_mu0_batch(p: &Mu0Params, dim: usize, count: usize, seed: u64) -> Result<Vec<Trajectory>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sample_mu0_with(p, dim, &mut rng)).collect())
}
