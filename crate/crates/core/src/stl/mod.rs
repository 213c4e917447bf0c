//! STL syntax, text format and discrete-time semantics.

mod eval;
mod formula;
mod parse;
mod trajectory;

pub use eval::{
    defined_len, is_evaluable, robustness, robustness_many, robustness_signal, satisfaction_signal, satisfies,
};
pub use formula::{format_formula, Atom, Direction, Formula, Interval};
pub use parse::{parse_formula, ParseError};
pub use trajectory::{LabeledDataset, Trajectory};
