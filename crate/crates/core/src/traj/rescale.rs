use crate::error::Result;
use crate::stl::{Atom, Formula, Interval};

/// Length of the base-measure time domain that stored formulae refer to.
pub const REFERENCE_POINTS: usize = 100;

/// Maps `[a, b]` over the 100-sample reference domain onto a trace of
/// `n_test` samples: `[floor(a r), floor(a r) + ceil((b - a) r)]`, `r = n_test / 100`.
///
/// An unbounded interval is rescaled as if `b = 100` and stays unbounded when
/// the result reaches the last sample of the target trace.
pub fn rescale_interval(i: &Interval, n_test: usize) -> Interval {
    let n = n_test as f64;
    let scale = |x: f64| x * n / REFERENCE_POINTS as f64;
    let hi = if i.is_unbounded() { REFERENCE_POINTS as f64 } else { i.hi() };
    let lo = i.lo();
    let a_test = scale(lo).floor();
    let width = scale((hi - lo).max(0.0)).ceil().max(1.0);
    let b_test = a_test + width;
    if i.is_unbounded() && b_test >= n - 1.0 {
        return Interval::unbounded(a_test).expect("non-negative lower bound");
    }
    Interval::new(a_test, b_test).expect("width is at least one")
}

pub fn rescale_time_bounds(f: &Formula, n_test: usize) -> Formula {
    let out: Result<Formula> =
        f.try_map(&mut |a: &Atom| Ok(*a), &mut |i: &Interval| Ok(rescale_interval(i, n_test)));
    out.expect("rescaling is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_formula;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn identity_at_hundred_points() {
        for (lo, hi) in [(0.0, 36.0), (11.0, 89.0), (70.0, 100.0), (0.0, 1.0)] {
            assert_eq!(rescale_interval(&iv(lo, hi), 100), iv(lo, hi));
        }
        let f = parse_formula("G[0,36] (x0 <= 37)").unwrap();
        assert_eq!(rescale_time_bounds(&f, 100), f);
    }

    #[test]
    fn maritime_length() {
        assert_eq!(rescale_interval(&iv(70.0, 100.0), 61), iv(42.0, 61.0));
        let unbounded = Interval::unbounded(70.0).unwrap();
        assert_eq!(rescale_interval(&unbounded, 61), Interval::unbounded(42.0).unwrap());
        assert_eq!(rescale_interval(&unbounded, 100), unbounded);
    }

    #[test]
    fn width_never_vanishes() {
        for n in 1..200 {
            for (lo, hi) in [(0.0, 1.0), (98.0, 99.0), (44.0, 56.0), (3.0, 3.5)] {
                let r = rescale_interval(&iv(lo, hi), n);
                assert!(r.hi() > r.lo(), "n={n} [{lo},{hi}] -> {r}");
            }
        }
    }
}
