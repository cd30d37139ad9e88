//! Record parsing, tokenization, and language identification.

mod langid;
mod record;
mod tokenize;

pub use langid::{LangVerdict, LanguageClassifier, TrigramClassifier};
pub use record::{parse_record, serialize_record, TweetRecord};
pub use tokenize::{token_class, tokenize, TokenClass, TokenSequence};

use thiserror::Error;

/// Errors raised while parsing one raw record line.
///
/// Callers on streaming paths count and skip these; a corrupt line is
/// never fatal to an ingestion run.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed record: {reason}")]
    MalformedRecord { reason: String },
    #[error("missing required field `{field}`")]
    MissingRequiredField { field: &'static str },
}
