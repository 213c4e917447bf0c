//! Kernel embeddings of formulae against a fixed set of anchor formulae.

mod reference;
mod sampler;

pub use reference::{Embedding, ReferenceSet};
pub(crate) use reference::read_array;
pub use sampler::{sample_formula, sample_formula_with, FDistParams};
