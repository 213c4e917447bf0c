//! Gaussian-process regression with a Matern 5/2 kernel on standardized targets.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Matern 5/2 covariance at distance `r`.
pub fn matern52(r: f64, lengthscale: f64, signal_var: f64) -> f64 {
    let a = SQRT5 * r / lengthscale;
    signal_var * (1.0 + a + a * a / 3.0) * (-a).exp()
}

/// Derivative of [`matern52`] with respect to `r`.
fn matern52_dr(r: f64, lengthscale: f64, signal_var: f64) -> f64 {
    let a = SQRT5 * r / lengthscale;
    -signal_var * (SQRT5 / lengthscale) * (a / 3.0) * (1.0 + a) * (-a).exp()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub lengthscale: f64,
    pub signal_var: f64,
    /// Observation noise variance, in standardized target units.
    pub noise_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpConfig {
    pub noise_floor: f64,
    /// Number of gradient-ascent starts for the marginal likelihood.
    pub restarts: usize,
    pub steps: usize,
    /// Largest diagonal jitter tried before giving up on a factorization.
    pub max_jitter: f64,
    /// Lengthscale search range as multiples of the median pairwise distance.
    pub lengthscale_bounds: (f64, f64),
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self { noise_floor: 1e-6, restarts: 4, steps: 60, max_jitter: 1e-2, lengthscale_bounds: (0.2, 20.0), seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<Vec<f64>>,
    y_mean: f64,
    y_scale: f64,
    hyper: GpHyper,
    chol_l: DMatrix<f64>,
    /// `(K + s^2 I)^-1 y` for standardized `y`.
    alpha: DVector<f64>,
    jitter: f64,
}

struct Factor {
    l: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

fn factor(dists: &DMatrix<f64>, y: &DVector<f64>, h: &GpHyper, max_jitter: f64) -> Result<Factor> {
    let n = y.len();
    let k = DMatrix::from_fn(n, n, |i, j| matern52(dists[(i, j)], h.lengthscale, h.signal_var));
    let mut jitter = 0.0;
    loop {
        let mut a = k.clone();
        for i in 0..n {
            a[(i, i)] += h.noise_var + jitter;
        }
        if let Some(ch) = a.cholesky() {
            let alpha = ch.solve(y);
            return Ok(Factor { l: ch.unpack(), alpha, jitter });
        }
        jitter = if jitter == 0.0 { 1e-10 * h.signal_var.max(1e-300) } else { jitter * 10.0 };
        if jitter > max_jitter {
            return Err(Error::NotPositiveDefinite { jitter });
        }
    }
}

fn standardize(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    let s = (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
    (m, if s > 0.0 && s.is_finite() { s } else { 1.0 })
}

fn check_inputs(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::Config("a GP needs at least two observations".into()));
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Config("GP inputs and targets must be finite".into()));
    }
    Ok(d)
}

fn distance_matrix(x: &[Vec<f64>]) -> DMatrix<f64> {
    let n = x.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let d = dist(&x[i], &x[j]);
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    m
}

/// Log marginal likelihood and its gradient in `(log l, log s2, log noise)`.
fn lml_and_grad(dists: &DMatrix<f64>, y: &DVector<f64>, h: &GpHyper, max_jitter: f64) -> Option<(f64, [f64; 3])> {
    let f = factor(dists, y, h, max_jitter).ok()?;
    let n = y.len();
    let log_det: f64 = (0..n).map(|i| f.l[(i, i)].ln()).sum::<f64>() * 2.0;
    let lml = -0.5 * y.dot(&f.alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    let kinv = nalgebra::Cholesky::<f64, nalgebra::Dyn>::pack_dirty(f.l.clone()).inverse();
    let mut g = [0.0; 3];
    for i in 0..n {
        for j in 0..n {
            let w = f.alpha[i] * f.alpha[j] - kinv[(i, j)];
            let a = SQRT5 * dists[(i, j)] / h.lengthscale;
            let e = (-a).exp();
            let dk_dlogl = h.signal_var * e * (a * a / 3.0) * (1.0 + a);
            let dk_dlogs = h.signal_var * (1.0 + a + a * a / 3.0) * e;
            g[0] += w * dk_dlogl;
            g[1] += w * dk_dlogs;
            if i == j {
                g[2] += w * h.noise_var;
            }
        }
    }
    Some((lml, g.map(|v| 0.5 * v)))
}

impl GpModel {
    /// Fits hyperparameters by multi-start gradient ascent on the log marginal
    /// likelihood of the standardized targets.
    pub fn fit(x: &[Vec<f64>], y: &[f64], cfg: &GpConfig) -> Result<Self> {
        check_inputs(x, y)?;
        let (y_mean, y_scale) = standardize(y);
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_scale));
        let dists = distance_matrix(x);
        let mut off: Vec<f64> = (0..x.len()).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| dists[(i, j)]).filter(|d| *d > 0.0).collect();
        off.sort_by(f64::total_cmp);
        let med = if off.is_empty() { 1.0 } else { off[off.len() / 2] };

        let (lmin, lmax) = cfg.lengthscale_bounds;
        if !(lmin > 0.0 && lmax >= lmin) {
            return Err(Error::Config("lengthscale bounds must satisfy 0 < lo <= hi".into()));
        }
        let lo = [(med * lmin).ln(), (1e-3f64).ln(), cfg.noise_floor.max(1e-12).ln()];
        let hi = [(med * lmax).ln(), (1e3f64).ln(), 0.0];
        let clamp = |t: [f64; 3]| [0, 1, 2].map(|k| t[k].clamp(lo[k], hi[k]));
        let to_h = |t: [f64; 3]| GpHyper { lengthscale: t[0].exp(), signal_var: t[1].exp(), noise_var: t[2].exp() };

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut starts = vec![clamp([med.ln(), 0.0, (1e-2f64).ln()])];
        for _ in 1..cfg.restarts.max(1) {
            starts.push(clamp([
                rng.random_range(lo[0]..=hi[0]),
                rng.random_range(-1.0..1.0),
                rng.random_range(lo[2]..(0.1f64).ln()),
            ]));
        }
        let mut best: Option<(f64, [f64; 3])> = None;
        for start in starts {
            let Some((mut val, mut grad)) = lml_and_grad(&dists, &ys, &to_h(start), cfg.max_jitter) else {
                continue;
            };
            let mut theta = start;
            let mut step = 0.5;
            for _ in 0..cfg.steps {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm < 1e-9 || step < 1e-5 {
                    break;
                }
                let cand = clamp([0, 1, 2].map(|k| theta[k] + step * grad[k] / norm));
                match lml_and_grad(&dists, &ys, &to_h(cand), cfg.max_jitter) {
                    Some((v, g)) if v > val => {
                        (theta, val, grad) = (cand, v, g);
                        step *= 1.5;
                    }
                    _ => step *= 0.5,
                }
            }
            if best.is_none_or(|(b, _)| val > b) {
                best = Some((val, theta));
            }
        }
        let (_, theta) = best.ok_or(Error::NotPositiveDefinite { jitter: cfg.max_jitter })?;
        Self::build(x, y_mean, y_scale, &ys, &dists, to_h(theta), cfg.max_jitter)
    }

    /// Conditions on the data with fixed hyperparameters. With `standardize`
    /// false the targets are used as given.
    pub fn with_hyper(x: &[Vec<f64>], y: &[f64], hyper: GpHyper, standardize_targets: bool) -> Result<Self> {
        check_inputs(x, y)?;
        if !(hyper.lengthscale > 0.0 && hyper.signal_var > 0.0 && hyper.noise_var >= 0.0) {
            return Err(Error::Config("GP hyperparameters must be positive".into()));
        }
        let (y_mean, y_scale) = if standardize_targets { standardize(y) } else { (0.0, 1.0) };
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_scale));
        Self::build(x, y_mean, y_scale, &ys, &distance_matrix(x), hyper, GpConfig::default().max_jitter)
    }

    fn build(
        x: &[Vec<f64>],
        y_mean: f64,
        y_scale: f64,
        ys: &DVector<f64>,
        dists: &DMatrix<f64>,
        hyper: GpHyper,
        max_jitter: f64,
    ) -> Result<Self> {
        let f = factor(dists, ys, &hyper, max_jitter)?;
        Ok(Self { x: x.to_vec(), y_mean, y_scale, hyper, chol_l: f.l, alpha: f.alpha, jitter: f.jitter })
    }

    pub fn hyper(&self) -> GpHyper {
        self.hyper
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn n_train(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    fn kstar(&self, x: &[f64]) -> (DVector<f64>, Vec<f64>) {
        let d: Vec<f64> = self.x.iter().map(|xi| dist(x, xi)).collect();
        let k = DVector::from_iterator(d.len(), d.iter().map(|r| matern52(*r, self.hyper.lengthscale, self.hyper.signal_var)));
        (k, d)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Posterior mean and variance of the latent function, in target units.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        let (k, _) = self.kstar(x);
        let mean = k.dot(&self.alpha);
        let v = self.chol_l.solve_lower_triangular(&k).expect("non-singular factor");
        let mut var = self.hyper.signal_var - v.dot(&v);
        if var < 0.0 {
            // clamp round-off below zero
            var = 0.0;
        }
        Ok((self.y_mean + self.y_scale * mean, var * self.y_scale * self.y_scale))
    }

    /// Posterior mean and variance with their gradients with respect to `x`.
    pub fn posterior_grad(&self, x: &[f64]) -> Result<(f64, f64, Vec<f64>, Vec<f64>)> {
        self.check_dim(x)?;
        let (k, d) = self.kstar(x);
        let v = self.chol_l.solve_lower_triangular(&k).expect("non-singular factor");
        let w = self.chol_l.transpose().solve_upper_triangular(&v).expect("non-singular factor");
        let mean = k.dot(&self.alpha);
        let var = (self.hyper.signal_var - v.dot(&v)).max(0.0);
        let dim = x.len();
        let mut gm = vec![0.0; dim];
        let mut gv = vec![0.0; dim];
        for (i, xi) in self.x.iter().enumerate() {
            if d[i] == 0.0 {
                continue;
            }
            let s = matern52_dr(d[i], self.hyper.lengthscale, self.hyper.signal_var) / d[i];
            for j in 0..dim {
                let dk = s * (x[j] - xi[j]);
                gm[j] += self.alpha[i] * dk;
                gv[j] -= 2.0 * w[i] * dk;
            }
        }
        let s2 = self.y_scale * self.y_scale;
        gm.iter_mut().for_each(|g| *g *= self.y_scale);
        gv.iter_mut().for_each(|g| *g *= s2);
        Ok((self.y_mean + self.y_scale * mean, var * s2, gm, gv))
    }
}

pub fn ucb(mean: f64, var: f64, beta: f64) -> f64 {
    mean + beta.max(0.0).sqrt() * var.max(0.0).sqrt()
}

/// `min(2 log(t^2 pi^2 / 0.6), cap)` for iteration `t >= 1`.
pub fn beta_schedule(t: usize, cap: f64) -> f64 {
    let t = t.max(1) as f64;
    (2.0 * (t * t * std::f64::consts::PI.powi(2) / 0.6).ln()).min(cap)
}
