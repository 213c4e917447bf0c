//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stlmine::stl::{Atom, Direction, Formula, Interval, Trajectory};

/// Brute-force robustness by explicit window enumeration. `None` where the
/// formula is undefined because a temporal window falls off the trace.
pub fn brute_rho(f: &Formula, x: &Trajectory, t: usize) -> Option<f64> {
    let n = x.n_points();
    if t >= n {
        return None;
    }
    let bounds = |i: &Interval| {
        let lo = (i.lo() / x.dt()).ceil() as usize;
        let hi = if i.hi().is_infinite() { n } else { (i.hi() / x.dt()).floor() as usize };
        (t + lo, (t + hi).min(n - 1))
    };
    match f {
        Formula::True => Some(f64::INFINITY),
        Formula::Atom(a) => {
            let v = x.value(a.var, t);
            Some(match a.dir {
                Direction::Le => a.threshold - v,
                Direction::Ge => v - a.threshold,
            })
        }
        Formula::Not(g) => brute_rho(g, x, t).map(|v| -v),
        Formula::And(l, r) => Some(brute_rho(l, x, t)?.min(brute_rho(r, x, t)?)),
        Formula::Or(l, r) => Some(brute_rho(l, x, t)?.max(brute_rho(r, x, t)?)),
        Formula::Eventually(i, g) | Formula::Globally(i, g) => {
            let (a, b) = bounds(i);
            let vals: Vec<f64> = (a..=b).filter_map(|k| brute_rho(g, x, k)).collect();
            if vals.is_empty() {
                return None;
            }
            Some(if matches!(f, Formula::Eventually(..)) {
                vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.iter().cloned().fold(f64::INFINITY, f64::min)
            })
        }
        Formula::Until(i, l, r) => {
            let (a, b) = bounds(i);
            let mut best: Option<f64> = None;
            for k in a..=b {
                let Some(rk) = brute_rho(r, x, k) else { continue };
                let Some(lk) = brute_rho(l, x, k) else { continue };
                let hold = (t..=k).map(|j| brute_rho(l, x, j).unwrap()).fold(lk, f64::min);
                let v = rk.min(hold);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
            best
        }
    }
}

/// Brute-force Boolean satisfaction, defined exactly where `brute_rho` is.
pub fn brute_sat(f: &Formula, x: &Trajectory, t: usize) -> Option<bool> {
    let n = x.n_points();
    if t >= n {
        return None;
    }
    let bounds = |i: &Interval| {
        let lo = (i.lo() / x.dt()).ceil() as usize;
        let hi = if i.hi().is_infinite() { n } else { (i.hi() / x.dt()).floor() as usize };
        (t + lo, (t + hi).min(n - 1))
    };
    match f {
        Formula::True => Some(true),
        Formula::Atom(a) => Some(a.holds(x.value(a.var, t))),
        Formula::Not(g) => brute_sat(g, x, t).map(|v| !v),
        Formula::And(l, r) => Some(brute_sat(l, x, t)? & brute_sat(r, x, t)?),
        Formula::Or(l, r) => Some(brute_sat(l, x, t)? | brute_sat(r, x, t)?),
        Formula::Eventually(i, g) | Formula::Globally(i, g) => {
            let (a, b) = bounds(i);
            let vals: Vec<bool> = (a..=b).filter_map(|k| brute_sat(g, x, k)).collect();
            if vals.is_empty() {
                return None;
            }
            Some(if matches!(f, Formula::Eventually(..)) { vals.iter().any(|&v| v) } else { vals.iter().all(|&v| v) })
        }
        Formula::Until(i, l, r) => {
            let (a, b) = bounds(i);
            let mut any_defined = false;
            let mut out = false;
            for k in a..=b {
                let (Some(rk), Some(_)) = (brute_sat(r, x, k), brute_sat(l, x, k)) else { continue };
                any_defined = true;
                if rk && (t..=k).all(|j| brute_sat(l, x, j).unwrap()) {
                    out = true;
                }
            }
            any_defined.then_some(out)
        }
    }
}

fn random_interval(rng: &mut ChaCha8Rng, n_points: usize) -> Interval {
    let lo = rng.random_range(0..n_points / 2) as f64 + if rng.random_bool(0.2) { 0.5 } else { 0.0 };
    if rng.random_bool(0.15) {
        return Interval::unbounded(lo).unwrap();
    }
    let width = rng.random_range(1..n_points / 2) as f64 + if rng.random_bool(0.2) { 0.25 } else { 0.0 };
    Interval::new(lo, lo + width).unwrap()
}

/// Random formula with exactly `nodes` nodes over `dim` variables.
pub fn random_formula(rng: &mut ChaCha8Rng, nodes: usize, dim: usize, n_points: usize) -> Formula {
    if nodes == 1 {
        let var = rng.random_range(0..dim);
        let c = (rng.random_range(-2.0..2.0f64) * 4.0).round() / 4.0;
        return Formula::Atom(if rng.random_bool(0.5) { Atom::le(var, c) } else { Atom::ge(var, c) });
    }
    let unary = nodes == 2 || rng.random_bool(0.5);
    if unary {
        let g = random_formula(rng, nodes - 1, dim, n_points);
        match rng.random_range(0..3) {
            0 => Formula::not(g),
            1 => Formula::eventually(random_interval(rng, n_points), g),
            _ => Formula::globally(random_interval(rng, n_points), g),
        }
    } else {
        let left = rng.random_range(1..nodes - 1);
        let l = random_formula(rng, left, dim, n_points);
        let r = random_formula(rng, nodes - 1 - left, dim, n_points);
        match rng.random_range(0..3) {
            0 => Formula::and(l, r),
            1 => Formula::or(l, r),
            _ => Formula::until(random_interval(rng, n_points), l, r),
        }
    }
}

/// Gaussian random-walk trajectory with values quantized to quarters, so
/// that ties with thresholds occur.
pub fn random_trajectory(rng: &mut ChaCha8Rng, dim: usize, n_points: usize, dt: f64) -> Trajectory {
    let mut values = Vec::with_capacity(dim * n_points);
    for _ in 0..dim {
        let mut v: f64 = rng.random_range(-1.0..1.0);
        for _ in 0..n_points {
            v += rng.random_range(-0.75..0.75);
            values.push(if rng.random_bool(0.3) { (v * 4.0).round() / 4.0 } else { v });
        }
    }
    Trajectory::new(dim, n_points, values, dt).unwrap()
}

/// Inverse of a square matrix by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        assert!(piv.abs() > 1e-300, "singular matrix");
        m[c].iter_mut().for_each(|v| *v /= piv);
        for r in 0..n {
            if r != c {
                let factor = m[r][c];
                if factor != 0.0 {
                    for j in 0..2 * n {
                        m[r][j] -= factor * m[c][j];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn matern52_oracle(r: f64, l: f64, s2: f64) -> f64 {
    let a = 5f64.sqrt() * r / l;
    s2 * (1.0 + a + a * a / 3.0) * (-a).exp()
}

pub fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Dense GP posterior with an explicit inverse: `(mean, var)` of the latent
/// function for targets standardized by `(y_mean, y_scale)`.
pub fn dense_posterior(
    x: &[Vec<f64>],
    y: &[f64],
    l: f64,
    s2: f64,
    noise: f64,
    y_mean: f64,
    y_scale: f64,
    q: &[f64],
) -> (f64, f64) {
    let n = x.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| matern52_oracle(l2(&x[i], &x[j]), l, s2) + if i == j { noise } else { 0.0 }).collect())
        .collect();
    let inv = gauss_jordan_inverse(&k);
    let ks: Vec<f64> = x.iter().map(|xi| matern52_oracle(l2(q, xi), l, s2)).collect();
    let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();
    let mut mean = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            mean += ks[i] * inv[i][j] * ys[j];
            quad += ks[i] * inv[i][j] * ks[j];
        }
    }
    (y_mean + y_scale * mean, (s2 - quad).max(0.0) * y_scale * y_scale)
}

/// Population mean and standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m = a.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}
