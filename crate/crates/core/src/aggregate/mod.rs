//! Streaming county/user count accumulation and the three county
//! feature aggregation schemes.
//!
//! The accumulator is the only stateful piece of the pipeline: shards
//! accumulate independently and merge pairwise (commutative,
//! associative, exact integer counts). Feature matrices are pure
//! functions of a frozen accumulator plus a vocabulary.

mod accumulator;
mod checkpoint;
mod matrix;

pub use accumulator::{CountAccumulator, CountyBreakdown, TokenTally, UserCounts};
pub use checkpoint::{checkpoint_string, dump_checkpoint, load_checkpoint};
pub use matrix::{
    county_bow, read_matrix_tsv, tweet_to_county, user_to_county, write_matrix_tsv,
    CountyFeatureMatrix, FilterSettings, MatrixProvenance, Scheme,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AggregateError {
    /// Merging accumulators built under different tokenizer/filter
    /// configurations would silently mix incomparable counts.
    #[error("accumulator config mismatch: `{left}` vs `{right}`")]
    ConfigMismatch { left: String, right: String },
    #[error("checkpoint line {line}: {reason}")]
    SchemaError { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
