//! RDF knowledge graphs for HPC operational data: term model and store,
//! ontology, ingestion, synthetic fixtures, graph construction, SPARQL subset
//! and benchmarking.

pub mod bench;
pub mod builder;
pub mod fixture;
pub mod ingest;
pub mod io;
pub mod ontology;
pub mod rdf;
pub mod sparql;
pub mod vocab;
