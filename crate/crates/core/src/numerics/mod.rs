//! Dense f64 tensors with reverse-mode automatic differentiation.
//!
//! Everything is 64-bit and single-threaded so that finite-difference
//! gradient checks are meaningful and runs are bit-reproducible. The op
//! set is the minimum needed for LSTMs, additive attention, embeddings,
//! softmax cross-entropy and dropout. No broadcasting beyond same-shape
//! elementwise ops; mismatches are errors, not silent casts.

mod check;
mod lstm;
mod tape;
mod tensor;

pub use check::grad_check;
pub use lstm::{glorot, lstm_step, LstmParams, LstmVars};
pub use tape::{GradMap, Op, Tape, Var};
pub use tensor::{dropout_mask, Tensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    DimMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("index {index} out of range for {what} of size {size}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("dropout rate must lie in [0, 1), got {0}")]
    InvalidDropoutRate(f64),
    #[error("backward requires a scalar loss, got shape {0:?}")]
    LossNotScalar(Vec<usize>),
    #[error("shape {shape:?} implies {expected} elements, data has {actual}")]
    ShapeDataMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(String),
}
