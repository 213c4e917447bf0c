use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sampler::{sample_formula_with, FDistParams};
use crate::error::{Error, Result};
use crate::stl::{parse_formula, robustness_many, Formula, Trajectory};
use crate::traj::{sample_mu0_with, Mu0Params};

pub type Embedding = Vec<f64>;

const MAGIC: &[u8; 6] = b"STLREF";
const VERSION: u32 = 1;
/// Anchors whose self-norm falls below this are redrawn.
const MIN_SELF_NORM: f64 = 1e-9;
/// Formulae embedded per matrix product.
const CHUNK: usize = 256;

/// Anchor formulae and Monte-Carlo trajectories defining the embedding map.
///
/// Trajectory values are rounded to `f32` when sampled, so a saved set reloads
/// to exactly the same robustness values.
#[derive(Debug, Clone)]
pub struct ReferenceSet {
    anchors: Vec<Formula>,
    trajectories: Vec<Trajectory>,
    /// Row-major `n_train x n_mc`.
    anchor_rho: Vec<f64>,
    /// Unnormalized self-kernel of each anchor.
    anchor_sq: Vec<f64>,
    seed: u64,
    arctan: bool,
}

impl ReferenceSet {
    pub fn build(n_train: usize, n_mc: usize, fparams: &FDistParams, mu0: &Mu0Params, seed: u64) -> Result<Self> {
        Self::build_with(n_train, n_mc, fparams, mu0, seed, false)
    }

    /// `arctan` squashes robustness values through `atan` before they enter the kernel.
    pub fn build_with(
        n_train: usize,
        n_mc: usize,
        fparams: &FDistParams,
        mu0: &Mu0Params,
        seed: u64,
        arctan: bool,
    ) -> Result<Self> {
        if n_train == 0 || n_mc == 0 {
            return Err(Error::Config("reference set needs n_train >= 1 and n_mc >= 1".into()));
        }
        fparams.validate()?;
        mu0.validate()?;
        if fparams.n_points != mu0.n_points() {
            return Err(Error::Config(format!(
                "formula distribution targets {} points but trajectories have {}",
                fparams.n_points,
                mu0.n_points()
            )));
        }
        let mut traj_rng = ChaCha8Rng::seed_from_u64(seed);
        let trajectories: Vec<Trajectory> = (0..n_mc)
            .map(|_| sample_mu0_with(mu0, fparams.max_vars, &mut traj_rng).map_values(|_, v| v as f32 as f64))
            .collect();

        let mut set = Self { anchors: Vec::new(), trajectories, anchor_rho: Vec::new(), anchor_sq: Vec::new(), seed, arctan };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        while set.anchors.len() < n_train {
            let batch: Vec<Formula> =
                (0..n_train - set.anchors.len()).map(|_| sample_formula_with(fparams, &mut rng)).collect();
            let rows: Vec<Vec<f64>> = batch.par_iter().map(|f| set.rho(f)).collect::<Result<_>>()?;
            for (f, row) in batch.into_iter().zip(rows) {
                let sq = self_kernel(&row);
                if sq.sqrt() >= MIN_SELF_NORM {
                    set.anchors.push(f);
                    set.anchor_rho.extend(row);
                    set.anchor_sq.push(sq);
                }
            }
        }
        Ok(set)
    }

    pub fn n_train(&self) -> usize {
        self.anchors.len()
    }

    pub fn n_mc(&self) -> usize {
        self.trajectories.len()
    }

    /// Dimension of the Monte-Carlo trajectories.
    pub fn dim(&self) -> usize {
        self.trajectories[0].dim()
    }

    pub fn n_points(&self) -> usize {
        self.trajectories[0].n_points()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn arctan(&self) -> bool {
        self.arctan
    }

    pub fn anchors(&self) -> &[Formula] {
        &self.anchors
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn anchor_rho(&self, i: usize) -> &[f64] {
        &self.anchor_rho[i * self.n_mc()..(i + 1) * self.n_mc()]
    }

    /// `sqrt(k(psi, psi))` for anchor `i`.
    pub fn anchor_selfnorm(&self, i: usize) -> f64 {
        self.anchor_sq[i].sqrt()
    }

    /// Robustness of `f` on every Monte-Carlo trajectory, squashed if configured.
    pub fn rho(&self, f: &Formula) -> Result<Vec<f64>> {
        let mut r = robustness_many(f, &self.trajectories)?;
        if self.arctan {
            r.iter_mut().for_each(|v| *v = v.atan());
        }
        Ok(r)
    }

    /// Unnormalized Monte-Carlo kernel `(1/n_mc) sum_j rho(f, x_j) rho(g, x_j)`.
    pub fn raw_kernel(&self, f: &Formula, g: &Formula) -> Result<f64> {
        Ok(dot(&self.rho(f)?, &self.rho(g)?) / self.n_mc() as f64)
    }

    /// Kernel normalized so that `kernel(f, f) = 1`.
    pub fn kernel(&self, f: &Formula, g: &Formula) -> Result<f64> {
        let (rf, rg) = (self.rho(f)?, self.rho(g)?);
        let n = self.n_mc() as f64;
        let (kff, kgg) = (self_kernel(&rf), self_kernel(&rg));
        if kff.sqrt() < MIN_SELF_NORM || kgg.sqrt() < MIN_SELF_NORM {
            return Err(Error::ZeroSelfNorm);
        }
        Ok(dot(&rf, &rg) / n / (kff * kgg).sqrt())
    }

    pub fn embed(&self, f: &Formula) -> Result<Embedding> {
        self.embed_batch(std::slice::from_ref(f)).map(|mut v| v.pop().expect("one row"))
    }

    /// Embeds every formula; fails on the first error, including a zero self-norm.
    pub fn embed_batch(&self, fs: &[Formula]) -> Result<Vec<Embedding>> {
        self.try_embed_batch(fs)?.into_iter().map(|e| e.ok_or(Error::ZeroSelfNorm)).collect()
    }

    /// Like [`embed_batch`](Self::embed_batch) but yields `None` for formulae
    /// whose robustness vanishes on every Monte-Carlo trajectory.
    pub fn try_embed_batch(&self, fs: &[Formula]) -> Result<Vec<Option<Embedding>>> {
        let mut out = Vec::with_capacity(fs.len());
        for chunk in fs.chunks(CHUNK) {
            let rows: Vec<Vec<f64>> = chunk.par_iter().map(|f| self.rho(f)).collect::<Result<_>>()?;
            out.extend(self.embed_rows(&rows));
        }
        Ok(out)
    }

    fn embed_rows(&self, rows: &[Vec<f64>]) -> Vec<Option<Embedding>> {
        let (m, k, n) = (rows.len(), self.n_mc(), self.n_train());
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let mut c = vec![0.0; m * n];
        // SAFETY: the strides describe `flat` as m x k, `anchor_rho` read
        // transposed as k x n and `c` as m x n, all within their allocations.
        unsafe {
            matrixmultiply::dgemm(
                m, k, n, 1.0,
                flat.as_ptr(), k as isize, 1,
                self.anchor_rho.as_ptr(), 1, k as isize,
                0.0,
                c.as_mut_ptr(), n as isize, 1,
            );
        }
        let nf = k as f64;
        rows.iter()
            .zip(c.chunks_exact(n))
            .map(|(row, dots)| {
                let kff = self_kernel(row);
                if kff.sqrt() < MIN_SELF_NORM {
                    return None;
                }
                Some(dots.iter().zip(&self.anchor_sq).map(|(d, kaa)| d / nf / (kff * kaa).sqrt()).collect())
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for v in [self.n_train(), self.n_mc(), self.dim(), self.n_points()] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.trajectories[0].dt().to_le_bytes())?;
        w.write_all(&[self.arctan as u8])?;
        for f in &self.anchors {
            let text = f.to_string();
            w.write_all(&(text.len() as u64).to_le_bytes())?;
            w.write_all(text.as_bytes())?;
        }
        for t in &self.trajectories {
            write_f32s(w, t.values())?;
        }
        write_f32s(w, &self.anchor_rho)?;
        Ok(())
    }

    /// Reads a saved set and recomputes the anchor robustness from the stored
    /// formulae and trajectories, rejecting the file if it disagrees.
    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Corrupt("not a reference set file".into()));
        }
        let version = u32::from_le_bytes(read_array(r)?);
        if version != VERSION {
            return Err(Error::Corrupt(format!("unsupported reference set version {version}")));
        }
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = usize::try_from(u64::from_le_bytes(read_array(r)?)).map_err(|_| Error::Corrupt("size".into()))?;
        }
        let [n_train, n_mc, dim, n_points] = dims;
        if n_train == 0 || n_mc == 0 || dim == 0 || n_points == 0 {
            return Err(Error::Corrupt("empty reference set".into()));
        }
        let seed = u64::from_le_bytes(read_array(r)?);
        let dt = f64::from_le_bytes(read_array(r)?);
        let arctan = match read_array::<1, _>(r)?[0] {
            0 => false,
            1 => true,
            other => return Err(Error::Corrupt(format!("bad flag byte {other}"))),
        };
        let mut anchors = Vec::with_capacity(n_train.min(1 << 20));
        for _ in 0..n_train {
            let len = u64::from_le_bytes(read_array(r)?) as usize;
            if len > 1 << 20 {
                return Err(Error::Corrupt("anchor text too long".into()));
            }
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(truncated)?;
            let text = String::from_utf8(buf).map_err(|_| Error::Corrupt("anchor text is not UTF-8".into()))?;
            anchors.push(parse_formula(&text).map_err(|e| Error::Corrupt(format!("anchor {text:?}: {e}")))?);
        }
        let mut trajectories = Vec::with_capacity(n_mc);
        for _ in 0..n_mc {
            let values = read_f32s(r, dim * n_points)?;
            trajectories.push(Trajectory::new(dim, n_points, values, dt).map_err(|e| Error::Corrupt(e.to_string()))?);
        }
        let stored = read_f32s(r, n_train * n_mc)?;
        let mut set = Self { anchors, trajectories, anchor_rho: Vec::new(), anchor_sq: Vec::new(), seed, arctan };
        let rows: Vec<Vec<f64>> = set
            .anchors
            .par_iter()
            .map(|f| set.rho(f))
            .collect::<Result<_>>()
            .map_err(|e| Error::Corrupt(format!("anchor evaluation failed: {e}")))?;
        for row in rows {
            set.anchor_sq.push(self_kernel(&row));
            set.anchor_rho.extend(row);
        }
        let consistent = set.anchor_rho.iter().zip(&stored).all(|(a, b)| (*a as f32).to_bits() == (*b as f32).to_bits());
        if !consistent {
            return Err(Error::Corrupt("stored anchor robustness does not match anchors".into()));
        }
        Ok(set)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn self_kernel(row: &[f64]) -> f64 {
    dot(row, row) / row.len() as f64
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Corrupt("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

pub(crate) fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(buf)
}

pub(crate) fn write_f32s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub(crate) fn read_f32s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count.min(1 << 24));
    let mut buf = vec![0u8; 4 * 4096];
    let mut left = count;
    while left > 0 {
        let take = left.min(4096);
        r.read_exact(&mut buf[..4 * take]).map_err(truncated)?;
        out.extend(buf[..4 * take].chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64));
        left -= take;
    }
    Ok(out)
}
