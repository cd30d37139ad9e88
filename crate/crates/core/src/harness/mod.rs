//! Experiment orchestration: stream subsampling, year slicing,
//! sharded ingestion, the experiment grid, lexical-bank export, the
//! synthetic corpus generator, and a throughput probe.

mod bench;
mod experiment;
mod ingest;
mod lexbank;
mod subsample;
mod synth;
mod timeslice;

pub use bench::{measure_ingest_throughput, write_bench_report, ThroughputReport};
pub use experiment::{
    parse_pca_spec,
    align_rows, assemble_features, load_experiment_spec, run_experiment, write_report_json,
    write_report_tsv, EvalReport, ExperimentSpec, FeatureSet,
};
pub use ingest::{ingest_lines, ingest_records, IngestOptions, IngestStats};
pub use lexbank::{export_lexical_bank, load_lexical_bank, LexbankContents, LexbankSummary};
pub use subsample::{keep_record, subsample_stream};
pub use synth::{
    synth_accumulator, synth_gazetteer, synth_geo, synth_records, write_synthetic_world,
    RecordParams, SynthGeo, SynthParams, TraitWorld, WorldPaths,
};
pub use timeslice::{in_year, slice_by_year, year_bounds};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    FileIo {
        path: String,
        source: std::io::Error,
    },
    #[error("experiment spec: {reason}")]
    BadSpec { reason: String },
    #[error("{context}: {source}")]
    Cell {
        context: String,
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Geo(#[from] crate::geomap::GeoError),
    #[error(transparent)]
    Aggregate(#[from] crate::aggregate::AggregateError),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Wraps an error with the experiment cell it came from.
    pub fn in_cell(self, context: &str) -> HarnessError {
        HarnessError::Cell {
            context: context.to_string(),
            source: Box::new(self),
        }
    }
}
