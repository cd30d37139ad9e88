//! County-level lexical nowcasting pipeline.
//!
//! The crate turns streams of social-media records into county feature
//! matrices under three aggregation schemes (tweet-to-county, county
//! bag-of-words, user-to-county) and predicts county outcomes with a
//! feature-selection + PCA + ridge stack evaluated by k-fold cross
//! validation.
//!
//! Modules follow the pipeline order:
//!
//! * [`corpus`] — record parsing, tokenization, language identification
//! * [`geomap`] — county resolution from coordinates or profile text
//! * [`aggregate`] — mergeable count accumulators and the three schemes
//! * [`features`] — vocabulary selection and topic projection
//! * [`model`] — outcome ingestion, selection, PCA, ridge, CV, metrics
//! * [`harness`] — experiment grids, subsampling, lexical-bank export,
//!   synthetic corpora

pub mod aggregate;
pub mod corpus;
pub mod features;
pub mod geomap;
pub mod harness;
pub mod model;
pub mod stablehash;
