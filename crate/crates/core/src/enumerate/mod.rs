//! Template enumeration, grid instantiation and signature-based filtering.

mod grid;
mod signature;
mod template;

pub use grid::{instantiate_grid, ParameterGrid};
pub use signature::{signature, signature_filter, signature_filter_par, Signature, SignatureFilter};
pub use template::{enumerate_templates, SlotKind, Template};
