//! Storage statistics and mode comparison, projections, and the competency
//! question suite with its reference answers.

pub mod manifest;
pub mod oracle;
pub mod stats;
pub mod suite;

use std::path::PathBuf;

use thiserror::Error;

pub use manifest::Manifest;
pub use stats::{
    compare_modes, dry_run_counts, graph_stats, project_mib_to_gib, project_storage, reduction,
    reference, CompareReport, DryRunCounts, GraphStats, GIB, MIB,
};
pub use suite::{run_question, run_suite, SuiteEntry, SuiteResult, QUESTION_IDS};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Build(#[from] crate::builder::BuildError),
    #[error(transparent)]
    Fixture(#[from] crate::fixture::FixtureError),
    #[error(transparent)]
    Query(#[from] crate::sparql::SparqlError),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("{id}: no value for parameter {param:?}")]
    MissingParam { id: String, param: String },
    #[error("{id}: parameter {param} has unusable value {value:?}")]
    BadParam {
        id: String,
        param: String,
        value: String,
    },
    #[error("unknown competency question {0}")]
    UnknownQuestion(String),
    #[error("{0}")]
    Shape(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
