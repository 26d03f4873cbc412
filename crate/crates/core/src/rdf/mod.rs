//! RDF term model and the dictionary-encoded triple store.

pub mod lexical;
mod store;
mod term;

pub use store::{StoreStats, TermId, TripleStore};
pub(crate) use term::write_escaped;
pub use term::{is_valid_iri, Term, Triple, TriplePattern};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RdfError {
    #[error("invalid IRI {0:?}")]
    InvalidIri(String),
    #[error("invalid lexical form {lexical:?} for datatype <{datatype}>")]
    InvalidLiteral { lexical: String, datatype: String },
    #[error("invalid blank node label {0:?}")]
    InvalidBlankLabel(String),
    #[error("literal {0} cannot be a subject")]
    LiteralSubject(String),
    #[error("predicate {0} is not an IRI")]
    NonIriPredicate(String),
    #[error("term dictionary is full")]
    DictionaryFull,
}
