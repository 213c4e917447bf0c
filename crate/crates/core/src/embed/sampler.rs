use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stl::{Atom, Direction, Formula, Interval};

/// Parameters of the random formula distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FDistParams {
    /// Probability that a node is an atom.
    pub p_leaf: f64,
    pub max_vars: usize,
    /// Thresholds are uniform on this range.
    pub value_range: (f64, f64),
    /// Time bounds are integers in this range.
    pub time_range: (u32, u32),
    /// Nodes at this depth are forced to be atoms.
    pub max_depth: Option<usize>,
    /// Trace length every sample must be evaluable on at time 0.
    pub n_points: usize,
}

impl Default for FDistParams {
    fn default() -> Self {
        Self {
            p_leaf: 0.5,
            max_vars: 3,
            value_range: (-4.0, 4.0),
            time_range: (0, 100),
            max_depth: Some(8),
            n_points: 100,
        }
    }
}

impl FDistParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("formula distribution: {m}")));
        if !(self.p_leaf > 0.0 && self.p_leaf < 1.0) {
            return bad("p_leaf must lie in (0, 1)");
        }
        if self.max_vars == 0 {
            return bad("max_vars must be positive");
        }
        let (lo, hi) = self.value_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad("value_range must be a finite increasing pair");
        }
        if self.time_range.0 >= self.time_range.1 {
            return bad("time_range must be increasing");
        }
        if self.n_points == 0 || self.time_range.0 as usize >= self.n_points {
            return bad("time_range must start inside the trace");
        }
        Ok(())
    }
}

const OPERATORS: usize = 6;

/// Recursive grower. `need` is the defined-prefix length the node must reach
/// for the whole formula to be evaluable at time 0; each temporal node adds
/// its lower bound to the requirement of its operands.
fn grow<R: Rng + ?Sized>(p: &FDistParams, rng: &mut R, depth: usize, need: usize) -> Formula {
    let depth_capped = p.max_depth.is_some_and(|d| depth >= d);
    if depth_capped || rng.random::<f64>() < p.p_leaf {
        return leaf(p, rng);
    }
    let op = rng.random_range(0..OPERATORS);
    match op {
        0 => Formula::not(grow(p, rng, depth + 1, need)),
        1 => Formula::and(grow(p, rng, depth + 1, need), grow(p, rng, depth + 1, need)),
        2 => Formula::or(grow(p, rng, depth + 1, need), grow(p, rng, depth + 1, need)),
        _ => {
            let Some((i, child_need)) = bounds(p, rng, need) else {
                return leaf(p, rng);
            };
            match op {
                3 => Formula::eventually(i, grow(p, rng, depth + 1, child_need)),
                4 => Formula::globally(i, grow(p, rng, depth + 1, child_need)),
                _ => {
                    let l = grow(p, rng, depth + 1, child_need);
                    Formula::until(i, l, grow(p, rng, depth + 1, child_need))
                }
            }
        }
    }
}

fn leaf<R: Rng + ?Sized>(p: &FDistParams, rng: &mut R) -> Formula {
    let var = rng.random_range(0..p.max_vars);
    let dir = if rng.random::<bool>() { Direction::Le } else { Direction::Ge };
    let (lo, hi) = p.value_range;
    Formula::Atom(Atom::new(var, dir, lo + (hi - lo) * rng.random::<f64>()))
}

/// Draws `a < b` from the time range, redrawing until `a + need <= n_points`.
/// Returns `None` when no lower bound can satisfy the requirement.
fn bounds<R: Rng + ?Sized>(p: &FDistParams, rng: &mut R, need: usize) -> Option<(Interval, usize)> {
    let (t0, t1) = p.time_range;
    if t0 as usize + need > p.n_points {
        return None;
    }
    loop {
        let a = rng.random_range(t0..t1);
        let b = rng.random_range(a + 1..=t1);
        if a as usize + need <= p.n_points {
            let i = Interval::new(a as f64, b as f64).expect("a < b");
            return Some((i, need + a as usize));
        }
    }
}

pub fn sample_formula_with<R: Rng + ?Sized>(p: &FDistParams, rng: &mut R) -> Formula {
    grow(p, rng, 0, 1)
}

pub fn sample_formula(p: &FDistParams, seed: u64) -> Result<Formula> {
    p.validate()?;
    Ok(sample_formula_with(p, &mut ChaCha8Rng::seed_from_u64(seed)))
}
