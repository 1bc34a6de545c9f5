// SPDX-License-Identifier: Apache-2.0

//! Loop-level rewriting: constant folding, unrolling, scalar replacement
//! with feedback detection, and sliding-window extraction.

mod fold;
mod scalarize;
mod unroll;
mod window;

pub use fold::fold_constants;
pub use scalarize::{
    scalar_replace, Feedback, Load, LoopIndex, LoopSpec, ScalarOutput, ScalarizedKernel, Store,
};
pub use unroll::{
    apply_trip, trip_count, unroll, unroll_by, unroll_full, UnrollDirective, UnrollFactor,
    DEFAULT_UNROLL_LIMIT,
};
pub use window::{detect_window, WindowSpec};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("constant {value} does not fit in 32 bits")]
    Overflow { value: i128 },
    #[error("loop '{var}' does not have constant bounds")]
    NotConstantBounds { var: String },
    #[error("no loop with index '{0}'")]
    UnknownLoop(String),
    #[error("cannot unroll loop '{var}' by {factor}: trip count {trip} is not a multiple of it")]
    UnrollFactor { var: String, factor: i64, trip: i64 },
    #[error("loop '{var}' has trip count {trip}, above the unroll limit {limit}; only one loop nest can stay rolled")]
    UnrollLimit { var: String, trip: i64, limit: i64 },
    #[error("loop '{var}' has zero iterations")]
    ZeroTrip { var: String },
    #[error("{0}")]
    Restriction(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("array '{array}' is accessed with differing index coefficients")]
    NonUniformPattern { array: String },
    #[error("{0}")]
    Config(String),
}
