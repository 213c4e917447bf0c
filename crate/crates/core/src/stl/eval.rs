//! Discrete-time evaluation of formulae.
//!
//! A subformula's value is defined on a prefix `0..len` of the trace. Temporal
//! windows `[t + ceil(a/dt), t + floor(b/dt)]` are truncated to the defined
//! prefix of their operands; a time index whose window is empty lies outside
//! the defined prefix, and evaluating there is an error.

use std::collections::VecDeque;

use super::formula::{Atom, Formula, Interval};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};

/// Value domain of a semantics: a totally ordered lattice with negation.
trait Semantics: Copy + PartialOrd {
    const TOP: Self;
    fn atom(atom: &Atom, value: f64) -> Self;
    fn neg(self) -> Self;

    #[inline]
    fn meet(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    #[inline]
    fn join(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Semantics for f64 {
    const TOP: f64 = f64::INFINITY;

    #[inline]
    fn atom(atom: &Atom, value: f64) -> f64 {
        atom.robustness(value)
    }

    #[inline]
    fn neg(self) -> f64 {
        -self
    }
}

impl Semantics for bool {
    const TOP: bool = true;

    #[inline]
    fn atom(atom: &Atom, value: f64) -> bool {
        atom.holds(value)
    }

    #[inline]
    fn neg(self) -> bool {
        !self
    }
}

/// Length of the defined prefix of `f` on a trace of `n_points` samples.
pub fn defined_len(f: &Formula, n_points: usize, dt: f64) -> usize {
    match f {
        Formula::True | Formula::Atom(_) => n_points,
        Formula::Not(g) => defined_len(g, n_points, dt),
        Formula::And(l, r) | Formula::Or(l, r) => defined_len(l, n_points, dt).min(defined_len(r, n_points, dt)),
        Formula::Eventually(i, g) | Formula::Globally(i, g) => shift_len(defined_len(g, n_points, dt), i, dt),
        Formula::Until(i, l, r) => {
            shift_len(defined_len(l, n_points, dt).min(defined_len(r, n_points, dt)), i, dt)
        }
    }
}

/// Whether `f` can be evaluated at time 0 on traces of `n_points` samples.
pub fn is_evaluable(f: &Formula, n_points: usize, dt: f64) -> bool {
    defined_len(f, n_points, dt) > 0
}

fn shift_len(child_len: usize, i: &Interval, dt: f64) -> usize {
    let (lo, hi) = (i.lo_steps(dt), i.hi_steps(dt));
    if lo > hi {
        0
    } else {
        child_len.saturating_sub(lo)
    }
}

fn check(f: &Formula, traj: &Trajectory, t: usize) -> Result<()> {
    check_var(f.max_var(), traj, t)
}

fn check_var(max_var: Option<usize>, traj: &Trajectory, t: usize) -> Result<()> {
    if let Some(var) = max_var {
        if var >= traj.dim() {
            return Err(Error::VariableOutOfRange { var, dim: traj.dim() });
        }
    }
    if t >= traj.n_points() {
        return Err(Error::TimeOutOfRange { t, n_points: traj.n_points() });
    }
    Ok(())
}

/// Quantitative semantics at sample index `t`.
pub fn robustness(f: &Formula, traj: &Trajectory, t: usize) -> Result<f64> {
    check(f, traj, t)?;
    eval_at::<f64>(f, traj, t).ok_or(Error::EmptyWindow { t })
}

/// Robustness at time 0 on each trajectory in turn.
pub fn robustness_many(f: &Formula, trajs: &[Trajectory]) -> Result<Vec<f64>> {
    let max_var = f.max_var();
    trajs
        .iter()
        .map(|x| {
            check_var(max_var, x, 0)?;
            eval_at::<f64>(f, x, 0).ok_or(Error::EmptyWindow { t: 0 })
        })
        .collect()
}

/// Boolean semantics at sample index `t`.
pub fn satisfies(f: &Formula, traj: &Trajectory, t: usize) -> Result<bool> {
    check(f, traj, t)?;
    eval_at::<bool>(f, traj, t).ok_or(Error::EmptyWindow { t })
}

/// Robustness at every sample of the defined prefix.
pub fn robustness_signal(f: &Formula, traj: &Trajectory) -> Result<Vec<f64>> {
    check(f, traj, 0)?;
    Ok(signal::<f64>(f, traj))
}

pub fn satisfaction_signal(f: &Formula, traj: &Trajectory) -> Result<Vec<bool>> {
    check(f, traj, 0)?;
    Ok(signal::<bool>(f, traj))
}

/// Root evaluated at a single index; only temporal operators need operand signals.
fn eval_at<S: Semantics>(f: &Formula, traj: &Trajectory, t: usize) -> Option<S> {
    match f {
        Formula::True => Some(S::TOP),
        Formula::Atom(a) => Some(S::atom(a, traj.value(a.var, t))),
        Formula::Not(g) => eval_at::<S>(g, traj, t).map(S::neg),
        Formula::And(l, r) => Some(eval_at::<S>(l, traj, t)?.meet(eval_at::<S>(r, traj, t)?)),
        Formula::Or(l, r) => Some(eval_at::<S>(l, traj, t)?.join(eval_at::<S>(r, traj, t)?)),
        Formula::Eventually(i, g) | Formula::Globally(i, g) => {
            let child = signal::<S>(g, traj);
            let (start, end) = window(t, child.len(), i, traj.dt())?;
            let w = child[start..=end].iter().copied();
            Some(if matches!(f, Formula::Eventually(..)) {
                w.fold(child[start], S::join)
            } else {
                w.fold(child[start], S::meet)
            })
        }
        Formula::Until(i, l, r) => {
            let lhs = signal::<S>(l, traj);
            let rhs = signal::<S>(r, traj);
            let len = lhs.len().min(rhs.len());
            let (start, end) = window(t, len, i, traj.dt())?;
            Some(until_at(&lhs, &rhs, t, start, end))
        }
    }
}

/// Inclusive sample window of a temporal operator at `t` over an operand prefix of `len`.
fn window(t: usize, len: usize, i: &Interval, dt: f64) -> Option<(usize, usize)> {
    let (lo, hi) = (i.lo_steps(dt), i.hi_steps(dt));
    if lo > hi || len == 0 {
        return None;
    }
    let start = t.checked_add(lo)?;
    let end = t.saturating_add(hi).min(len - 1);
    (start <= end).then_some((start, end))
}

fn until_at<S: Semantics>(lhs: &[S], rhs: &[S], t: usize, start: usize, end: usize) -> S {
    let mut hold = S::TOP;
    let mut best: Option<S> = None;
    for k in t..=end {
        hold = hold.meet(lhs[k]);
        if k >= start {
            let v = rhs[k].meet(hold);
            best = Some(best.map_or(v, |b| b.join(v)));
        }
    }
    best.expect("window is non-empty")
}

fn signal<S: Semantics>(f: &Formula, traj: &Trajectory) -> Vec<S> {
    match f {
        Formula::True => vec![S::TOP; traj.n_points()],
        Formula::Atom(a) => traj.channel(a.var).iter().map(|&v| S::atom(a, v)).collect(),
        Formula::Not(g) => {
            let mut s = signal::<S>(g, traj);
            s.iter_mut().for_each(|v| *v = v.neg());
            s
        }
        Formula::And(l, r) | Formula::Or(l, r) => {
            let mut a = signal::<S>(l, traj);
            let b = signal::<S>(r, traj);
            a.truncate(b.len());
            let is_and = matches!(f, Formula::And(..));
            for (x, &y) in a.iter_mut().zip(&b) {
                *x = if is_and { x.meet(y) } else { x.join(y) };
            }
            a
        }
        Formula::Eventually(i, g) => sliding(&signal::<S>(g, traj), i, traj.dt(), true),
        Formula::Globally(i, g) => sliding(&signal::<S>(g, traj), i, traj.dt(), false),
        Formula::Until(i, l, r) => {
            let lhs = signal::<S>(l, traj);
            let rhs = signal::<S>(r, traj);
            until_signal(&lhs, &rhs, i, traj.dt())
        }
    }
}

/// Sliding-window max (`take_max`) or min with a monotone deque.
fn sliding<S: Semantics>(child: &[S], i: &Interval, dt: f64, take_max: bool) -> Vec<S> {
    let len = shift_len(child.len(), i, dt);
    sliding_steps(child, i.lo_steps(dt), i.hi_steps(dt), len, take_max)
}

/// Windows `[t + lo, min(t + hi, child.len() - 1)]` for `t < len`.
fn sliding_steps<S: Semantics>(child: &[S], lo: usize, hi: usize, len: usize, take_max: bool) -> Vec<S> {
    let dominates = |a: S, b: S| if take_max { a >= b } else { a <= b };
    let mut out = Vec::with_capacity(len);
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for t in 0..len {
        let start = t + lo;
        let end = t.saturating_add(hi).min(child.len() - 1);
        while next <= end {
            while let Some(&back) = deque.back() {
                if dominates(child[next], child[back]) {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(next);
            next += 1;
        }
        while let Some(&front) = deque.front() {
            if front < start {
                deque.pop_front();
            } else {
                break;
            }
        }
        out.push(child[*deque.front().expect("window is non-empty")]);
    }
    out
}

fn until_signal<S: Semantics>(lhs: &[S], rhs: &[S], i: &Interval, dt: f64) -> Vec<S> {
    let m = lhs.len().min(rhs.len());
    let len = shift_len(m, i, dt);
    if len == 0 {
        return Vec::new();
    }
    let (lo, hi) = (i.lo_steps(dt), i.hi_steps(dt));
    if hi < m - 1 {
        return (0..len)
            .map(|t| until_at(lhs, rhs, t, t + lo, (t + hi).min(m - 1)))
            .collect();
    }
    // Every window reaches the end of the operands: backward recursion for the
    // untimed until, then prefix the hold requirement on [t, t + lo).
    let mut untimed = vec![S::TOP; m];
    untimed[m - 1] = rhs[m - 1].meet(lhs[m - 1]);
    for s in (0..m - 1).rev() {
        untimed[s] = lhs[s].meet(rhs[s].join(untimed[s + 1]));
    }
    if lo == 0 {
        untimed.truncate(len);
        return untimed;
    }
    let hold = sliding_steps(lhs, 0, lo - 1, len, false);
    (0..len).map(|t| hold[t].meet(untimed[t + lo])).collect()
}
