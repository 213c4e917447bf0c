use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::stl::{Atom, Direction, Formula, Interval};

/// Formula skeleton whose thresholds and time bounds are parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Template {
    Atom { var: usize, dir: Direction },
    Not(Box<Template>),
    And(Box<Template>, Box<Template>),
    Or(Box<Template>, Box<Template>),
    Eventually(Box<Template>),
    Globally(Box<Template>),
    Until(Box<Template>, Box<Template>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Threshold,
    TimeLo,
    TimeHi,
}

impl Template {
    pub fn node_count(&self) -> usize {
        match self {
            Template::Atom { .. } => 1,
            Template::Not(t) | Template::Eventually(t) | Template::Globally(t) => 1 + t.node_count(),
            Template::And(l, r) | Template::Or(l, r) | Template::Until(l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    pub fn var_count(&self) -> usize {
        let mut vars = HashSet::new();
        self.collect_vars(&mut vars);
        vars.len()
    }

    fn collect_vars(&self, out: &mut HashSet<usize>) {
        match self {
            Template::Atom { var, .. } => {
                out.insert(*var);
            }
            Template::Not(t) | Template::Eventually(t) | Template::Globally(t) => t.collect_vars(out),
            Template::And(l, r) | Template::Or(l, r) | Template::Until(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Parameter slots in pre-order; a temporal node contributes `(TimeLo, TimeHi)`
    /// before its operands.
    pub fn slots(&self) -> Vec<SlotKind> {
        let mut out = Vec::new();
        self.collect_slots(&mut out);
        out
    }

    fn collect_slots(&self, out: &mut Vec<SlotKind>) {
        match self {
            Template::Atom { .. } => out.push(SlotKind::Threshold),
            Template::Not(t) => t.collect_slots(out),
            Template::Eventually(t) | Template::Globally(t) => {
                out.extend([SlotKind::TimeLo, SlotKind::TimeHi]);
                t.collect_slots(out);
            }
            Template::And(l, r) | Template::Or(l, r) => {
                l.collect_slots(out);
                r.collect_slots(out);
            }
            Template::Until(l, r) => {
                out.extend([SlotKind::TimeLo, SlotKind::TimeHi]);
                l.collect_slots(out);
                r.collect_slots(out);
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.slots().len()
    }

    pub fn instantiate(&self, params: &[f64]) -> Result<Formula> {
        let expected = self.arity();
        if params.len() != expected {
            return Err(Error::ArityMismatch { expected, got: params.len() });
        }
        let mut it = params.iter().copied();
        self.build(&mut it)
    }

    fn build(&self, p: &mut impl Iterator<Item = f64>) -> Result<Formula> {
        let interval = |p: &mut dyn Iterator<Item = f64>| -> Result<Interval> {
            let lo = p.next().expect("arity checked");
            let hi = p.next().expect("arity checked");
            Interval::new(lo, hi)
        };
        Ok(match self {
            Template::Atom { var, dir } => Formula::Atom(Atom::new(*var, *dir, p.next().expect("arity checked"))),
            Template::Not(t) => Formula::not(t.build(p)?),
            Template::And(l, r) => Formula::and(l.build(p)?, r.build(p)?),
            Template::Or(l, r) => Formula::or(l.build(p)?, r.build(p)?),
            Template::Eventually(t) => {
                let i = interval(p)?;
                Formula::eventually(i, t.build(p)?)
            }
            Template::Globally(t) => {
                let i = interval(p)?;
                Formula::globally(i, t.build(p)?)
            }
            Template::Until(l, r) => {
                let i = interval(p)?;
                let lhs = l.build(p)?;
                Formula::until(i, lhs, r.build(p)?)
            }
        })
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Template::Atom { var, dir } => write!(f, "x{var} {} θ", dir.symbol()),
            Template::Not(t) => write!(f, "not ({t})"),
            Template::And(l, r) => write!(f, "({l}) and ({r})"),
            Template::Or(l, r) => write!(f, "({l}) or ({r})"),
            Template::Eventually(t) => write!(f, "F[a,b] ({t})"),
            Template::Globally(t) => write!(f, "G[a,b] ({t})"),
            Template::Until(l, r) => write!(f, "({l}) U[a,b] ({r})"),
        }
    }
}

/// All templates with at most `max_nodes` nodes over variables `x0..x{max_vars-1}`.
///
/// Level 1 holds the atoms; level `m` applies F, G and negation to level `m-1`
/// and the binary operators to every split `l + r = m - 1` with `l <= r`.
/// Output is ordered by node count.
pub fn enumerate_templates(max_nodes: usize, max_vars: usize) -> Vec<Template> {
    if max_nodes == 0 || max_vars == 0 {
        return Vec::new();
    }
    let mut levels: Vec<Vec<Template>> = vec![Vec::new(); max_nodes + 1];
    levels[1] = (0..max_vars)
        .flat_map(|var| [Direction::Le, Direction::Ge].map(|dir| Template::Atom { var, dir }))
        .collect();
    for m in 2..=max_nodes {
        let mut level = Vec::new();
        let mut seen = HashSet::new();
        let mut push = |t: Template, level: &mut Vec<Template>| {
            if seen.insert(t.clone()) {
                level.push(t);
            }
        };
        for t in &levels[m - 1] {
            push(Template::Eventually(Box::new(t.clone())), &mut level);
            push(Template::Globally(Box::new(t.clone())), &mut level);
            push(Template::Not(Box::new(t.clone())), &mut level);
        }
        for l in 1..m - 1 {
            let r = m - 1 - l;
            if l > r {
                break;
            }
            for lt in &levels[l] {
                for rt in &levels[r] {
                    let (a, b) = (Box::new(lt.clone()), Box::new(rt.clone()));
                    push(Template::And(a.clone(), b.clone()), &mut level);
                    push(Template::Or(a.clone(), b.clone()), &mut level);
                    push(Template::Until(a, b), &mut level);
                }
            }
        }
        levels[m] = level;
    }
    levels.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    /// Independent generator over canonical strings, one exact node count at a time.
    fn brute(n: usize, vars: usize) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if n == 1 {
            for v in 0..vars {
                out.insert(format!("x{v} <= θ"));
                out.insert(format!("x{v} >= θ"));
            }
            return out;
        }
        for s in brute(n - 1, vars) {
            out.insert(format!("not ({s})"));
            out.insert(format!("F[a,b] ({s})"));
            out.insert(format!("G[a,b] ({s})"));
        }
        for l in 1..n - 1 {
            let r = n - 1 - l;
            if l <= r {
                for a in brute(l, vars) {
                    for b in brute(r, vars) {
                        out.insert(format!("({a}) and ({b})"));
                        out.insert(format!("({a}) or ({b})"));
                        out.insert(format!("({a}) U[a,b] ({b})"));
                    }
                }
            }
        }
        out
    }

    fn count_recurrence(m: usize, vars: usize) -> usize {
        let mut c = vec![0usize; m + 1];
        c[1] = 2 * vars;
        for n in 2..=m {
            c[n] = 3 * c[n - 1];
            for l in 1..n - 1 {
                let r = n - 1 - l;
                if l <= r {
                    c[n] += 3 * c[l] * c[r];
                }
            }
        }
        c[1..].iter().sum()
    }

    #[test]
    fn small_cases() {
        let t1 = enumerate_templates(1, 1);
        assert_eq!(t1.len(), 2);
        assert_eq!(t1[0].to_string(), "x0 <= θ");
        assert_eq!(t1[1].to_string(), "x0 >= θ");
        assert_eq!(enumerate_templates(2, 1).len(), 8);
    }

    #[test]
    fn matches_independent_generator() {
        for (m, n) in [(3, 1), (4, 2), (5, 3)] {
            let got: BTreeSet<String> = enumerate_templates(m, n).iter().map(|t| t.to_string()).collect();
            let want: BTreeSet<String> = (1..=m).flat_map(|k| brute(k, n)).collect();
            assert_eq!(got, want, "M={m} N={n}");
            assert_eq!(enumerate_templates(m, n).len(), count_recurrence(m, n));
        }
    }

    #[test]
    fn monotone_in_both_bounds() {
        let set = |m, n| enumerate_templates(m, n).into_iter().collect::<HashSet<_>>();
        assert!(set(3, 2).is_subset(&set(4, 2)));
        assert!(set(3, 2).is_subset(&set(3, 3)));
    }

    #[test]
    fn instantiate_roundtrip() {
        let atom = &enumerate_templates(1, 1)[0];
        assert_eq!(atom.instantiate(&[0.0]).unwrap().to_string(), "x0 <= 0");
        let ev = Template::Eventually(Box::new(Template::Atom { var: 0, dir: Direction::Le }));
        assert_eq!(ev.slots(), vec![SlotKind::TimeLo, SlotKind::TimeHi, SlotKind::Threshold]);
        let f = ev.instantiate(&[70.0, 100.0, 1.16]).unwrap();
        assert_eq!(f.to_string(), "F[70,100] (x0 <= 1.16)");
        assert_eq!(f.node_count(), ev.node_count());
        assert!(matches!(ev.instantiate(&[50.0, 50.0, 1.0]), Err(Error::InvalidInterval { .. })));
        assert!(matches!(ev.instantiate(&[1.0]), Err(Error::ArityMismatch { expected: 3, got: 1 })));
    }
}
