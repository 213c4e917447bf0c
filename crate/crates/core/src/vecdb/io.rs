//! Database file: magic `STLDB`, a format version, a JSON manifest, then per
//! shard the formula texts, the `f32` embedding matrix and an optional
//! inverted-file block. Integers are little-endian, lengths 64-bit.

use std::io::{Read, Write};
use std::path::Path;

use super::{Ivf, Manifest, SemanticDb, Shard};
use crate::embed::read_array;
use crate::error::{Error, Result};
use crate::stl::parse_formula;

const MAGIC: &[u8; 5] = b"STLDB";
const VERSION: u32 = 1;
const MAX_TEXT: usize = 1 << 16;

fn put_u64<W: Write>(w: &mut W, v: usize) -> Result<()> {
    w.write_all(&(v as u64).to_le_bytes())?;
    Ok(())
}

fn get_len<R: Read>(r: &mut R, limit: usize, what: &str) -> Result<usize> {
    let v = u64::from_le_bytes(read_array(r)?);
    if v > limit as u64 {
        return Err(Error::Corrupt(format!("{what} length {v} exceeds {limit}")));
    }
    Ok(v as usize)
}

fn put_f32s<W: Write>(w: &mut W, v: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    w.write_all(&bytes)?;
    Ok(())
}

fn get_f32s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes).map_err(|_| Error::Corrupt("file is truncated".into()))?;
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

impl SemanticDb {
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
        let manifest = serde_json::to_vec_pretty(&self.manifest)?;
        put_u64(w, manifest.len())?;
        w.write_all(&manifest)?;
        for s in &self.shards {
            put_u64(w, s.len())?;
            for t in &s.texts {
                put_u64(w, t.len())?;
                w.write_all(t.as_bytes())?;
            }
            put_f32s(w, &s.data)?;
            match &s.ivf {
                None => w.write_all(&[0])?,
                Some(ivf) => {
                    w.write_all(&[1])?;
                    put_u64(w, ivf.nlist())?;
                    put_f32s(w, ivf.centroids())?;
                    for list in ivf.lists() {
                        put_u64(w, list.len())?;
                        let bytes: Vec<u8> = list.iter().flat_map(|r| r.to_le_bytes()).collect();
                        w.write_all(&bytes)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let magic: [u8; 5] = read_array(r)?;
        if &magic != MAGIC {
            return Err(Error::Corrupt("not a database file".into()));
        }
        let version = u32::from_le_bytes(read_array(r)?);
        if version != VERSION {
            return Err(Error::Corrupt(format!("unsupported database version {version}")));
        }
        let len = get_len(r, 1 << 26, "manifest")?;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf).map_err(|_| Error::Corrupt("file is truncated".into()))?;
        let manifest: Manifest =
            serde_json::from_slice(&buf).map_err(|e| Error::Corrupt(format!("manifest: {e}")))?;
        let dim = manifest.dim;
        let mut shards = Vec::with_capacity(manifest.shards.len());
        for info in &manifest.shards {
            let count = get_len(r, 1 << 32, "shard")?;
            if count != info.count {
                return Err(Error::Corrupt(format!("shard {} holds {count} rows, manifest says {}", info.key, info.count)));
            }
            let mut rows = Vec::with_capacity(count.min(1 << 20));
            for _ in 0..count {
                let n = get_len(r, MAX_TEXT, "formula")?;
                let mut t = vec![0u8; n];
                r.read_exact(&mut t).map_err(|_| Error::Corrupt("file is truncated".into()))?;
                let text = String::from_utf8(t).map_err(|_| Error::Corrupt("formula text is not UTF-8".into()))?;
                let f = parse_formula(&text).map_err(|e| Error::Corrupt(format!("formula {text:?}: {e}")))?;
                if !info.key.admits(&f) {
                    return Err(Error::Corrupt(format!("{text} does not belong in shard {}", info.key)));
                }
                rows.push(f);
            }
            let data = get_f32s(r, count * dim)?;
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Corrupt(format!("non-finite embedding in shard {}", info.key)));
            }
            let embeddings: Vec<Vec<f32>> =
                if dim == 0 { vec![Vec::new(); count] } else { data.chunks_exact(dim).map(<[f32]>::to_vec).collect() };
            let mut shard = Shard::new(info.key, dim, rows.into_iter().zip(embeddings).collect());
            let flag: [u8; 1] = read_array(r)?;
            shard.ivf = match flag[0] {
                0 => None,
                1 => Some(read_ivf(r, dim, count)?),
                other => return Err(Error::Corrupt(format!("bad index flag {other}"))),
            };
            shards.push(shard);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Corrupt("trailing bytes after last shard".into()));
        }
        Ok(Self { manifest, shards })
    }
}

fn read_ivf<R: Read>(r: &mut R, dim: usize, count: usize) -> Result<Ivf> {
    let nlist = get_len(r, count.max(1), "cell list")?;
    let centroids = get_f32s(r, nlist * dim)?;
    let mut lists = Vec::with_capacity(nlist);
    let mut seen = vec![false; count];
    for _ in 0..nlist {
        let n = get_len(r, count, "cell")?;
        let mut bytes = vec![0u8; n * 4];
        r.read_exact(&mut bytes).map_err(|_| Error::Corrupt("file is truncated".into()))?;
        let list: Vec<u32> = bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        for &row in &list {
            let row = row as usize;
            if row >= count || std::mem::replace(&mut seen[row], true) {
                return Err(Error::Corrupt("inverted lists do not partition the shard".into()));
            }
        }
        lists.push(list);
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Corrupt("inverted lists do not cover the shard".into()));
    }
    Ok(Ivf::from_parts(dim, centroids, lists))
}
