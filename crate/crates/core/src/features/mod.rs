//! Vocabulary selection and topic projection.

mod topics;
mod vocab;

pub use topics::{
    load_topic_model, project_matrix, topic_loadings, TopicModel, TopicNormalization,
};
pub use vocab::{
    build_vocabulary, filter_vocabulary, load_vocabulary, reduce_vocabulary, write_vocabulary,
    Vocabulary,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("line {line}: {reason}")]
    SchemaError { line: usize, reason: String },
    #[error("line {line}: negative weight {weight} for topic {topic} token `{token}`")]
    NegativeWeight {
        line: usize,
        topic: u32,
        token: String,
        weight: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
