//! Random products of 2x2 nonnegative matrices.
//!
//! * [`mat2`]: closed-form primitives for one matrix (singular values,
//!   Hilbert and sup column distances, Birkhoff coefficient, left eigenpairs).
//! * [`ensemble`]: a finite family with probabilities and its regime
//!   classification.
//! * [`engine`]: overflow-safe streaming products along seeded or explicit
//!   symbol sequences.
//! * [`analysis`]: Lyapunov estimates, convergence-rate classification,
//!   closed-form triangular oracles and verdicts.
//! * [`cli`]: run configurations, presets and the `classify` / `simulate` /
//!   `verify` commands behind the `rmp2` binary.

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod float_fmt;
pub mod mat2;

pub use ensemble::{classify, MatrixEnsemble, Regime, RegimeReport};
pub use error::{Error, Result};
pub use mat2::{ColumnVector2, Matrix2, SingularPair};
