//! Linear algebra over GF(2).

mod bitvec;
mod elim;
mod sparse;

pub use bitvec::{BitVector, Ones};
pub use elim::{eliminate, kernel_basis, rank, solve, ColumnBasis, Elimination};
pub use sparse::SparseBitMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({row}, {col}) outside {n_rows}x{n_cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("duplicate entry ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("column order repeats or overruns column {col}")]
    InvalidColumnOrder { col: usize },
}
