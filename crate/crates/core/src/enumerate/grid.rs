use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::template::{SlotKind, Template};
use crate::error::{Error, Result};
use crate::stl::Formula;

/// Threshold and time-endpoint grids used to instantiate templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterGrid {
    pub values: Vec<f64>,
    pub times: Vec<f64>,
}

impl Default for ParameterGrid {
    /// Ten thresholds in `[-4, 4]` and ten time endpoints in `[0, 100]`, the
    /// latter rounded to whole samples.
    fn default() -> Self {
        Self::linspace((-4.0, 4.0), 10, (0.0, 100.0), 10).expect("valid default grid")
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl ParameterGrid {
    pub fn new(values: Vec<f64>, times: Vec<f64>) -> Result<Self> {
        let g = Self { values, times };
        g.validate()?;
        Ok(g)
    }

    /// Evenly spaced thresholds; evenly spaced time endpoints rounded to integers.
    pub fn linspace(values: (f64, f64), n_values: usize, times: (f64, f64), n_times: usize) -> Result<Self> {
        let mut t: Vec<f64> = linspace(times.0, times.1, n_times).into_iter().map(f64::round).collect();
        t.dedup();
        Self::new(linspace(values.0, values.1, n_values), t)
    }

    pub fn validate(&self) -> Result<()> {
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite());
        if self.values.is_empty() || !sorted(&self.values) {
            return Err(Error::Config("value grid must be non-empty, finite and strictly increasing".into()));
        }
        if self.times.len() < 2 || !sorted(&self.times) || self.times[0] < 0.0 {
            return Err(Error::Config(
                "time grid needs at least two non-negative strictly increasing endpoints".into(),
            ));
        }
        Ok(())
    }

    /// All `(a, b)` with `a < b` taken from the time grid.
    pub fn time_pairs(&self) -> Vec<(f64, f64)> {
        let t = &self.times;
        (0..t.len()).flat_map(|i| (i + 1..t.len()).map(move |j| (t[i], t[j]))).collect()
    }

    /// Number of grid points for `t`, or `None` on overflow.
    pub fn instance_count(&self, t: &Template) -> Option<usize> {
        radices(t, self.values.len(), self.time_pairs().len())
            .into_iter()
            .try_fold(1usize, |acc, r| acc.checked_mul(r))
    }
}

/// One mixed-radix digit per threshold slot and per time pair, in slot order.
fn radices(t: &Template, n_values: usize, n_pairs: usize) -> Vec<usize> {
    t.slots()
        .into_iter()
        .filter_map(|s| match s {
            SlotKind::Threshold => Some(n_values),
            SlotKind::TimeLo => Some(n_pairs),
            SlotKind::TimeHi => None,
        })
        .collect()
}

/// 64-bit FNV-1a, used to derive stable per-template seeds.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Instantiates `t` at every grid point, or at `cap` of them drawn uniformly
/// without replacement when the grid is larger. Draws depend only on `seed`
/// and the template text, and come out in grid order.
pub fn instantiate_grid(t: &Template, grid: &ParameterGrid, cap: Option<usize>, seed: u64) -> Result<Vec<Formula>> {
    grid.validate()?;
    let pairs = grid.time_pairs();
    let radix = radices(t, grid.values.len(), pairs.len());
    let total = grid
        .instance_count(t)
        .ok_or_else(|| Error::Config(format!("grid for template {t} is too large to index")))?;
    let indices: Vec<usize> = match cap {
        Some(c) if c < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(t.to_string().as_bytes()));
            let mut v = index::sample(&mut rng, total, c).into_vec();
            v.sort_unstable();
            v
        }
        _ => (0..total).collect(),
    };
    let slots = t.slots();
    let mut params = vec![0.0; slots.len()];
    let mut digits = vec![0usize; radix.len()];
    indices
        .into_iter()
        .map(|mut idx| {
            for (d, r) in digits.iter_mut().zip(&radix).rev() {
                *d = idx % r;
                idx /= r;
            }
            let mut di = 0;
            let mut k = 0;
            while k < slots.len() {
                match slots[k] {
                    SlotKind::Threshold => {
                        params[k] = grid.values[digits[di]];
                        k += 1;
                    }
                    _ => {
                        let (a, b) = pairs[digits[di]];
                        params[k] = a;
                        params[k + 1] = b;
                        k += 2;
                    }
                }
                di += 1;
            }
            t.instantiate(&params)
        })
        .collect()
}
