//! C interface to stlmine.
//!
//! Every fallible function returns an [`StlmineStatus`] code as `int32_t`.
//! On failure a message is kept per thread and read back with
//! [`stlmine_last_error`]. Objects are opaque handles released with their
//! `_free` function; passing NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use stlmine::embed::{FDistParams, ReferenceSet};
use stlmine::miner::{mine, BoConfig};
use stlmine::stl::{parse_formula, robustness, Formula, LabeledDataset, Trajectory};
use stlmine::traj::{load_dataset, Mu0Params};
use stlmine::vecdb::{QueryResult, SemanticDb, ShardKey};
use stlmine::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlmineStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Evaluation = 5,
    Io = 6,
    Corrupt = 7,
    NoCandidates = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Stored reference set: anchor formulae and base-measure trajectories.
pub struct StlmineReference(ReferenceSet);

/// Formula database.
pub struct StlmineDb(SemanticDb);

/// Result list of a database query.
pub struct StlmineHits {
    hits: Vec<QueryResult>,
    texts: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(StlmineStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) => StlmineStatus::Parse,
            Error::Io(_) => StlmineStatus::Io,
            Error::Corrupt(_) => StlmineStatus::Corrupt,
            Error::NoCandidates(_) => StlmineStatus::NoCandidates,
            Error::EmptyWindow { .. } | Error::VariableOutOfRange { .. } | Error::TimeOutOfRange { .. } | Error::ZeroSelfNorm => {
                StlmineStatus::Evaluation
            }
            _ => StlmineStatus::InvalidArgument,
        };
        Fail(code, e.to_string())
    }
}

fn fail<T>(code: StlmineStatus, msg: &str) -> Result<T, Fail> {
    Err(Fail(code, msg.to_string()))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StlmineStatus::Ok as i32,
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code as i32
        }
        Err(_) => {
            set_error("internal panic");
            StlmineStatus::Panic as i32
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return fail(StlmineStatus::NullPointer, &format!("{what} is NULL"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(StlmineStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(StlmineStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(StlmineStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(StlmineStatus::NullPointer, &format!("{what} is NULL"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `s` with a terminating nul into `buf`. `needed` receives the
/// buffer size required, nul included.
unsafe fn write_str(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), Fail> {
    if let Some(n) = needed.as_mut() {
        *n = s.len() + 1;
    }
    if buf.is_null() || len < s.len() + 1 {
        return fail(StlmineStatus::BufferTooSmall, &format!("buffer of {len} bytes cannot hold {} bytes", s.len() + 1));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

fn parse(text: &str) -> Result<Formula, Fail> {
    Ok(parse_formula(text).map_err(Error::from)?)
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stlmine_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn stlmine_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Rewrites `formula` in canonical text form.
///
/// # Safety
/// `formula` must be a nul-terminated string; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn stlmine_formula_canonical(formula: *const c_char, buf: *mut c_char, len: usize, needed: *mut usize) -> i32 {
    guard(|| {
        let f = parse(str_arg(formula, "formula")?)?;
        write_str(&f.to_string(), buf, len, needed)
    })
}

/// Robustness at sample `t` of a trajectory stored channel-major:
/// `values[d * n_points + k]` is variable `d` at sample `k`.
///
/// # Safety
/// `values` must point to `dim * n_points` doubles.
#[no_mangle]
pub unsafe extern "C" fn stlmine_robustness(
    formula: *const c_char,
    values: *const f64,
    dim: usize,
    n_points: usize,
    dt: f64,
    t: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let f = parse(str_arg(formula, "formula")?)?;
        let n = dim.checked_mul(n_points).ok_or_else(|| Fail(StlmineStatus::InvalidArgument, "size overflow".into()))?;
        let v = slice_arg(values, n, "values")?;
        let traj = Trajectory::new(dim, n_points, v.to_vec(), dt)?;
        *out_arg(out, "out")? = robustness(&f, &traj, t)?;
        Ok(())
    })
}

/// Builds a reference set with default sampler parameters.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to free
/// with [`stlmine_reference_free`].
#[no_mangle]
pub unsafe extern "C" fn stlmine_reference_build(n_train: usize, n_mc: usize, seed: u64, out: *mut *mut StlmineReference) -> i32 {
    guard(|| {
        let slot = out_arg(out, "out")?;
        let r = ReferenceSet::build(n_train, n_mc, &FDistParams::default(), &Mu0Params::default(), seed)?;
        *slot = Box::into_raw(Box::new(StlmineReference(r)));
        Ok(())
    })
}

/// # Safety
/// `path` must be nul-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn stlmine_reference_load(path: *const c_char, out: *mut *mut StlmineReference) -> i32 {
    guard(|| {
        let slot = out_arg(out, "out")?;
        let r = ReferenceSet::load(Path::new(str_arg(path, "path")?))?;
        *slot = Box::into_raw(Box::new(StlmineReference(r)));
        Ok(())
    })
}

/// # Safety
/// `r` must come from this library; `path` must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn stlmine_reference_save(r: *const StlmineReference, path: *const c_char) -> i32 {
    guard(|| {
        let r = ref_arg(r, "reference")?;
        r.0.save(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Embedding length, the number of anchor formulae; 0 for NULL.
///
/// # Safety
/// `r` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn stlmine_reference_embedding_len(r: *const StlmineReference) -> usize {
    r.as_ref().map_or(0, |r| r.0.n_train())
}

/// Writes the embedding of `formula` into `out`, which holds `len` doubles.
///
/// # Safety
/// `r` must come from this library, `formula` be nul-terminated and `out`
/// point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn stlmine_embed(r: *const StlmineReference, formula: *const c_char, out: *mut f64, len: usize) -> i32 {
    guard(|| {
        let r = ref_arg(r, "reference")?;
        let f = parse(str_arg(formula, "formula")?)?;
        if len != r.0.n_train() {
            return fail(StlmineStatus::InvalidArgument, &format!("output holds {len} values, embedding has {}", r.0.n_train()));
        }
        if out.is_null() {
            return fail(StlmineStatus::NullPointer, "out is NULL");
        }
        let e = r.0.embed(&f)?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&e);
        Ok(())
    })
}

/// Normalized kernel between two formulae.
///
/// # Safety
/// `r` must come from this library; the strings must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn stlmine_kernel(r: *const StlmineReference, a: *const c_char, b: *const c_char, out: *mut f64) -> i32 {
    guard(|| {
        let r = ref_arg(r, "reference")?;
        let fa = parse(str_arg(a, "a")?)?;
        let fb = parse(str_arg(b, "b")?)?;
        *out_arg(out, "out")? = r.0.kernel(&fa, &fb)?;
        Ok(())
    })
}

/// Frees a reference set.
///
/// # Safety
/// `r` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stlmine_reference_free(r: *mut StlmineReference) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `path` must be nul-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn stlmine_db_load(path: *const c_char, out: *mut *mut StlmineDb) -> i32 {
    guard(|| {
        let slot = out_arg(out, "out")?;
        let db = SemanticDb::load(Path::new(str_arg(path, "path")?))?;
        *slot = Box::into_raw(Box::new(StlmineDb(db)));
        Ok(())
    })
}

/// Number of stored rows over all shards; 0 for NULL.
///
/// # Safety
/// `db` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn stlmine_db_len(db: *const StlmineDb) -> usize {
    db.as_ref().map_or(0, |d| d.0.len())
}

/// Exact nearest-neighbour search. `max_nodes` selects the shard budget;
/// 0 searches the largest budget present.
///
/// # Safety
/// `db` must come from this library, `embedding` point to `len` doubles
/// and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn stlmine_db_query(
    db: *const StlmineDb,
    embedding: *const f64,
    len: usize,
    k: usize,
    max_nodes: usize,
    out: *mut *mut StlmineHits,
) -> i32 {
    guard(|| {
        let db = ref_arg(db, "db")?;
        let slot = out_arg(out, "out")?;
        let e = slice_arg(embedding, len, "embedding")?;
        let budget = if max_nodes == 0 { db.0.keys().iter().map(|k| k.max_nodes).max().unwrap_or(0) } else { max_nodes };
        let keys: Vec<ShardKey> = db.0.keys().into_iter().filter(|k| k.max_nodes == budget).collect();
        if keys.is_empty() {
            return fail(StlmineStatus::NoCandidates, &format!("no shard with node budget {budget}"));
        }
        let hits = db.0.query(e, k, &keys)?;
        let texts = hits.iter().map(|h| CString::new(h.text.as_str()).expect("formula text has no nul")).collect();
        *slot = Box::into_raw(Box::new(StlmineHits { hits, texts }));
        Ok(())
    })
}

/// # Safety
/// `db` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stlmine_db_free(db: *mut StlmineDb) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// # Safety
/// `h` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn stlmine_hits_len(h: *const StlmineHits) -> usize {
    h.as_ref().map_or(0, |h| h.hits.len())
}

/// Formula text of hit `i`, owned by the hit list; NULL when out of range.
///
/// # Safety
/// `h` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn stlmine_hits_text(h: *const StlmineHits, i: usize) -> *const c_char {
    h.as_ref().and_then(|h| h.texts.get(i)).map_or(std::ptr::null(), |s| s.as_ptr())
}

/// L2 distance of hit `i`; NaN when out of range.
///
/// # Safety
/// `h` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn stlmine_hits_distance(h: *const StlmineHits, i: usize) -> f64 {
    h.as_ref().and_then(|h| h.hits.get(i)).map_or(f64::NAN, |x| x.distance)
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stlmine_hits_free(h: *mut StlmineHits) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Mines a formula from a dataset CSV with default settings and writes it
/// into `buf`, denormalized and on the data's time scale.
///
/// # Safety
/// `db` must come from this library, `csv_path` be nul-terminated, `buf`
/// hold `len` bytes; `best_g` and `needed` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn stlmine_mine_csv(
    db: *const StlmineDb,
    csv_path: *const c_char,
    seed: u64,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
    best_g: *mut f64,
) -> i32 {
    guard(|| {
        let db = ref_arg(db, "db")?;
        let d: LabeledDataset = load_dataset(Path::new(str_arg(csv_path, "csv_path")?))?;
        let r = mine(&d, &db.0, &BoConfig::default(), seed)?;
        if let Some(g) = best_g.as_mut() {
            *g = r.best_g;
        }
        write_str(&r.formula, buf, len, needed)
    })
}
