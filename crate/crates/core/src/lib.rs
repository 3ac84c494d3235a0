//! Exact computations around the subrank of order-3 tensors.

pub mod bipartite;
pub mod bounds;
pub mod catalog;
pub mod degeneration;
pub mod error;
pub mod field;
pub mod io;
pub mod matrix;
pub mod minrank;
pub mod pivot;
pub mod scan;
pub mod slice_space;
pub mod subrank;
pub mod tensor;

pub use error::{Error, Result};
pub use field::{Field, FieldElem, FieldSize, FieldSpec, Fp, Rationals};
pub use matrix::{Matrix, Rref};
pub use tensor::{check_concise_format, concise_reduce, unit, verify_restriction, ConciseReduction, Restriction, SliceSpan, Tensor3};
