//! A SPARQL 1.1 SELECT subset: basic graph patterns with FILTER and BIND,
//! GROUP BY with COUNT/SUM/AVG/MIN/MAX, HAVING, ORDER BY, DISTINCT,
//! LIMIT/OFFSET, xsd constructor casts and dateTime arithmetic.

pub mod ast;
mod eval;
mod lexer;
mod parser;
mod results;
pub mod value;

use thiserror::Error;

pub use ast::QueryAst;
pub use eval::{evaluate, evaluate_with, EvalOptions};
pub use parser::parse_query;
pub use results::ResultTable;
pub use value::Value;

use crate::rdf::TripleStore;

#[derive(Debug, Error, PartialEq)]
pub enum SparqlError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared prefix {0:?}")]
    UnknownPrefix(String),
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("invalid query: {0}")]
    Invalid(String),
}

pub fn run_query(store: &TripleStore, text: &str) -> Result<ResultTable, SparqlError> {
    Ok(evaluate(&parse_query(text)?, store))
}
