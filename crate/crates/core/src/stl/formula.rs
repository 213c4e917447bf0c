use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Time bounds of a temporal operator. `hi` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() {
            return Err(Error::InvalidInterval { lo, hi, reason: "lower bound must be finite" });
        }
        if lo < 0.0 {
            return Err(Error::InvalidInterval { lo, hi, reason: "lower bound is negative" });
        }
        if hi.is_nan() || hi <= lo {
            return Err(Error::InvalidInterval { lo, hi, reason: "upper bound must exceed lower bound" });
        }
        Ok(Self { lo, hi })
    }

    pub fn unbounded(lo: f64) -> Result<Self> {
        Self::new(lo, f64::INFINITY)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_unbounded(&self) -> bool {
        self.hi == f64::INFINITY
    }

    /// First sample offset covered by the interval for sampling step `dt`.
    pub fn lo_steps(&self, dt: f64) -> usize {
        (self.lo / dt).ceil() as usize
    }

    /// Last sample offset covered by the interval, `usize::MAX` when unbounded.
    pub fn hi_steps(&self, dt: f64) -> usize {
        if self.is_unbounded() {
            usize::MAX
        } else {
            (self.hi / dt).floor() as usize
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unbounded() {
            write!(f, "[{},inf]", self.lo)
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// `x_i <= c`
    Le,
    /// `x_i >= c`
    Ge,
}

impl Direction {
    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Le => "<=",
            Direction::Ge => ">=",
        }
    }
}

/// Single-variable linear predicate `x_var <= threshold` or `x_var >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub var: usize,
    pub dir: Direction,
    pub threshold: f64,
}

impl Atom {
    pub fn new(var: usize, dir: Direction, threshold: f64) -> Self {
        Self { var, dir, threshold }
    }

    pub fn le(var: usize, threshold: f64) -> Self {
        Self::new(var, Direction::Le, threshold)
    }

    pub fn ge(var: usize, threshold: f64) -> Self {
        Self::new(var, Direction::Ge, threshold)
    }

    /// Signed distance of `value` from the predicate boundary.
    #[inline]
    pub fn robustness(&self, value: f64) -> f64 {
        match self.dir {
            Direction::Le => self.threshold - value,
            Direction::Ge => value - self.threshold,
        }
    }

    #[inline]
    pub fn holds(&self, value: f64) -> bool {
        match self.dir {
            Direction::Le => value <= self.threshold,
            Direction::Ge => value >= self.threshold,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{} {} {}", self.var, self.dir.symbol(), self.threshold)
    }
}

/// Syntax tree of an STL formula.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Globally(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(atom: Atom) -> Self {
        Formula::Atom(atom)
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn eventually(i: Interval, f: Formula) -> Self {
        Formula::Eventually(i, Box::new(f))
    }

    pub fn globally(i: Interval, f: Formula) -> Self {
        Formula::Globally(i, Box::new(f))
    }

    pub fn until(i: Interval, l: Formula, r: Formula) -> Self {
        Formula::Until(i, Box::new(l), Box::new(r))
    }

    /// Every AST node, operators and leaves alike.
    pub fn node_count(&self) -> usize {
        match self {
            Formula::True | Formula::Atom(_) => 1,
            Formula::Not(f) | Formula::Eventually(_, f) | Formula::Globally(_, f) => 1 + f.node_count(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(_, l, r) => {
                1 + l.node_count() + r.node_count()
            }
        }
    }

    /// Distinct variable indices.
    pub fn vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            out.insert(a.var);
        });
        out
    }

    pub fn var_count(&self) -> usize {
        self.vars().len()
    }

    /// Largest variable index, `None` for atom-free formulae.
    pub fn max_var(&self) -> Option<usize> {
        self.vars().into_iter().next_back()
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::Atom(_) => 1,
            Formula::Not(f) | Formula::Eventually(_, f) | Formula::Globally(_, f) => 1 + f.depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn for_each_atom(&self, visit: &mut impl FnMut(&Atom)) {
        match self {
            Formula::True => {}
            Formula::Atom(a) => visit(a),
            Formula::Not(f) | Formula::Eventually(_, f) | Formula::Globally(_, f) => f.for_each_atom(visit),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(_, l, r) => {
                l.for_each_atom(visit);
                r.for_each_atom(visit);
            }
        }
    }

    /// Rebuilds the tree with atoms and intervals rewritten; structure is preserved.
    pub fn try_map(
        &self,
        atom_fn: &mut impl FnMut(&Atom) -> Result<Atom>,
        interval_fn: &mut impl FnMut(&Interval) -> Result<Interval>,
    ) -> Result<Formula> {
        Ok(match self {
            Formula::True => Formula::True,
            Formula::Atom(a) => Formula::Atom(atom_fn(a)?),
            Formula::Not(f) => Formula::not(f.try_map(atom_fn, interval_fn)?),
            Formula::And(l, r) => Formula::and(l.try_map(atom_fn, interval_fn)?, r.try_map(atom_fn, interval_fn)?),
            Formula::Or(l, r) => Formula::or(l.try_map(atom_fn, interval_fn)?, r.try_map(atom_fn, interval_fn)?),
            Formula::Eventually(i, f) => Formula::eventually(interval_fn(i)?, f.try_map(atom_fn, interval_fn)?),
            Formula::Globally(i, f) => Formula::globally(interval_fn(i)?, f.try_map(atom_fn, interval_fn)?),
            Formula::Until(i, l, r) => Formula::until(
                interval_fn(i)?,
                l.try_map(atom_fn, interval_fn)?,
                r.try_map(atom_fn, interval_fn)?,
            ),
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => write!(f, "not ({g})"),
            Formula::And(l, r) => write!(f, "({l}) and ({r})"),
            Formula::Or(l, r) => write!(f, "({l}) or ({r})"),
            Formula::Eventually(i, g) => write!(f, "F{i} ({g})"),
            Formula::Globally(i, g) => write!(f, "G{i} ({g})"),
            Formula::Until(i, l, r) => write!(f, "({l}) U{i} ({r})"),
        }
    }
}

/// Canonical text form; `parse_formula` is its inverse.
pub fn format_formula(f: &Formula) -> String {
    f.to_string()
}
