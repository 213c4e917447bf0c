use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::l2;
use crate::error::{Error, Result};

/// Inverted-file index: k-means centroids and the rows assigned to each.
#[derive(Debug, Clone, PartialEq)]
pub struct Ivf {
    dim: usize,
    /// Row-major `nlist x dim`, rounded to `f32` so a saved index reloads unchanged.
    centroids: Vec<f32>,
    lists: Vec<Vec<u32>>,
}

impl Ivf {
    /// Lloyd iterations from `nlist` distinct seeded rows; empty cells keep
    /// their previous centroid. The final assignment uses the stored centroids.
    pub fn train(data: &[f32], dim: usize, nlist: usize, iterations: usize, seed: u64) -> Result<Self> {
        let n = if dim == 0 { 0 } else { data.len() / dim };
        if nlist == 0 || nlist > n {
            return Err(Error::Config(format!("nlist = {nlist} must lie in 1..={n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = index::sample(&mut rng, n, nlist).into_vec();
        init.sort_unstable();
        let mut centroids: Vec<f64> = init.iter().flat_map(|&r| data[r * dim..(r + 1) * dim].iter().map(|v| *v as f64)).collect();
        let x: Vec<f64> = data.iter().map(|v| *v as f64).collect();
        let x_sq: Vec<f64> = x.chunks_exact(dim).map(|r| r.iter().map(|v| v * v).sum()).collect();

        for _ in 0..iterations {
            let assign = assign_dgemm(&x, &x_sq, &centroids, n, dim, nlist);
            let mut sums = vec![0.0; nlist * dim];
            let mut counts = vec![0usize; nlist];
            for (row, &c) in assign.iter().enumerate() {
                counts[c] += 1;
                for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(&x[row * dim..(row + 1) * dim]) {
                    *s += v;
                }
            }
            for c in 0..nlist {
                if counts[c] > 0 {
                    for (dst, s) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                        *dst = s / counts[c] as f64;
                    }
                }
            }
        }

        let centroids: Vec<f32> = centroids.iter().map(|v| *v as f32).collect();
        let assign: Vec<usize> = (0..n)
            .into_par_iter()
            .map(|row| nearest(&centroids, dim, &data[row * dim..(row + 1) * dim]))
            .collect();
        let mut lists = vec![Vec::new(); nlist];
        for (row, c) in assign.into_iter().enumerate() {
            lists[c].push(row as u32);
        }
        Ok(Self { dim, centroids, lists })
    }

    pub(crate) fn from_parts(dim: usize, centroids: Vec<f32>, lists: Vec<Vec<u32>>) -> Self {
        Self { dim, centroids, lists }
    }

    pub fn nlist(&self) -> usize {
        self.lists.len()
    }

    pub fn lists(&self) -> &[Vec<u32>] {
        &self.lists
    }

    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }

    pub fn centroid(&self, c: usize) -> &[f32] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    /// Rows of the `nprobe` cells whose centroids are nearest to `q`.
    pub fn probe(&self, q: &[f32], nprobe: usize) -> Vec<usize> {
        let mut cells: Vec<(f64, usize)> = (0..self.nlist()).map(|c| (l2(q, self.centroid(c)), c)).collect();
        cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cells
            .iter()
            .take(nprobe.clamp(1, self.nlist()))
            .flat_map(|&(_, c)| self.lists[c].iter().map(|&r| r as usize))
            .collect()
    }
}

fn nearest(centroids: &[f32], dim: usize, x: &[f32]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (c, cen) in centroids.chunks_exact(dim).enumerate() {
        let d = l2(x, cen);
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

/// Nearest centroid per row via `|x|^2 - 2 x.c + |c|^2`.
fn assign_dgemm(x: &[f64], x_sq: &[f64], c: &[f64], n: usize, dim: usize, nlist: usize) -> Vec<usize> {
    let c_sq: Vec<f64> = c.chunks_exact(dim).map(|r| r.iter().map(|v| v * v).sum()).collect();
    let mut g = vec![0.0; n * nlist];
    // SAFETY: x is n x dim, c is read transposed as dim x nlist, g is n x nlist.
    unsafe {
        matrixmultiply::dgemm(
            n, dim, nlist, 1.0,
            x.as_ptr(), dim as isize, 1,
            c.as_ptr(), 1, dim as isize,
            0.0,
            g.as_mut_ptr(), nlist as isize, 1,
        );
    }
    g.chunks_exact(nlist)
        .zip(x_sq)
        .map(|(row, xs)| {
            let mut best = (f64::INFINITY, 0);
            for (j, (gj, cs)) in row.iter().zip(&c_sq).enumerate() {
                let d = xs - 2.0 * gj + cs;
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect()
}
