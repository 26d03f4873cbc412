//! Competency question suite: instantiate, run and check every query.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use super::manifest::Manifest;
use super::oracle::{answer, rows_match, table_rows};
use super::BenchError;
use crate::ingest::Dataset;
use crate::rdf::TripleStore;
use crate::sparql::{evaluate, parse_query, ResultTable, Value};

pub const QUESTION_IDS: [&str; 36] = [
    "C1.1", "C1.2", "C1.3", "C1.4", "C1.5", "C1.6", "C2.1", "C2.2", "C2.3", "C2.4", "C2.5", "C2.6",
    "C2.7", "C2.8", "C3.1", "C3.2", "C3.3", "C3.4", "C3.5", "C3.6", "C3.7", "C3.8", "C3.9", "C4.1",
    "C4.2", "C4.3", "C4.4", "C4.5", "C4.6", "C5.1", "C5.2", "C6.1", "C6.2", "C6.3", "C6.4", "C6.5",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub id: String,
    pub parsed: bool,
    pub rows: usize,
    pub oracle_match: bool,
    pub elapsed: Duration,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteResult {
    pub entries: Vec<SuiteEntry>,
}

impl SuiteResult {
    pub fn parsed(&self) -> usize {
        self.entries.iter().filter(|e| e.parsed).count()
    }

    pub fn matched(&self) -> usize {
        self.entries.iter().filter(|e| e.oracle_match).count()
    }

    pub fn all_passed(&self) -> bool {
        self.entries.len() == QUESTION_IDS.len() && self.matched() == self.entries.len()
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<6} {:<7} {:>6} {:<7} {:>10}",
            "id", "parsed", "rows", "oracle", "ms"
        )?;
        for e in &self.entries {
            write!(
                f,
                "{:<6} {:<7} {:>6} {:<7} {:>10.2}",
                e.id,
                if e.parsed { "yes" } else { "no" },
                e.rows,
                if e.oracle_match { "match" } else { "DIFF" },
                e.elapsed.as_secs_f64() * 1e3
            )?;
            if let Some(err) = &e.error {
                write!(f, "  {err}")?;
            }
            writeln!(f)?;
        }
        writeln!(
            f,
            "{}/{} parsed, {}/{} match the reference answers",
            self.parsed(),
            self.entries.len(),
            self.matched(),
            self.entries.len()
        )
    }
}

/// Splits a query file into its queries (separated by a line holding `---`).
pub fn split_queries(text: &str) -> Vec<String> {
    let mut parts = vec![String::new()];
    for line in text.lines() {
        if line.trim() == "---" {
            parts.push(String::new());
        } else {
            let last = parts.last_mut().expect("non-empty");
            last.push_str(line);
            last.push('\n');
        }
    }
    parts
}

/// Runs the instantiated queries of one question. A second query must return
/// a single number; rows of the first whose last column is not below that
/// number are dropped.
pub fn run_question(
    store: &TripleStore,
    template: &str,
    id: &str,
    manifest: &Manifest,
) -> Result<ResultTable, BenchError> {
    let text = manifest.instantiate(template, id)?;
    let queries = split_queries(&text)
        .iter()
        .map(|q| parse_query(q))
        .collect::<Result<Vec<_>, _>>()?;
    let mut tables = queries.iter().map(|q| evaluate(q, store));
    let mut table = tables
        .next()
        .ok_or_else(|| BenchError::Shape(format!("{id}: empty query file")))?;
    for limit in tables {
        let bound = match limit.rows.as_slice() {
            [row] if row.len() == 1 => row[0].clone().unwrap_or(Value::Error),
            _ => {
                return Err(BenchError::Shape(format!(
                    "{id}: limit query must yield one value"
                )))
            }
        };
        table.rows.retain(|r| {
            let last = r.last().cloned().flatten().unwrap_or(Value::Error);
            crate::sparql::value::compare(crate::sparql::ast::CmpOp::Lt, &last, &bound)
                == Value::Boolean(true)
        });
    }
    Ok(table)
}

fn entry(
    id: &str,
    store: &TripleStore,
    template: Result<String, BenchError>,
    m: &Manifest,
    ds: &Dataset,
) -> SuiteEntry {
    let start = Instant::now();
    let result = template.and_then(|t| run_question(store, &t, id, m));
    let elapsed = start.elapsed();
    match result {
        Ok(table) => {
            let (oracle_match, error) = match answer(id, ds, m) {
                Ok(expected) => (rows_match(&table_rows(&table), &expected), None),
                Err(e) => (false, Some(e.to_string())),
            };
            SuiteEntry {
                id: id.to_owned(),
                parsed: true,
                rows: table.len(),
                oracle_match,
                elapsed,
                error,
            }
        }
        Err(e) => SuiteEntry {
            id: id.to_owned(),
            parsed: false,
            rows: 0,
            oracle_match: false,
            elapsed,
            error: Some(e.to_string()),
        },
    }
}

/// Runs the 36 queries `<id>.rq` of `query_dir` against `store` and checks
/// each against the reference answer computed from `oracle`. A missing or
/// broken query fails its own entry only.
pub fn run_suite(
    store: &TripleStore,
    query_dir: &Path,
    manifest: &Manifest,
    oracle: &Dataset,
) -> SuiteResult {
    let entries = QUESTION_IDS
        .iter()
        .map(|id| {
            let path = query_dir.join(format!("{id}.rq"));
            let template =
                std::fs::read_to_string(&path).map_err(|source| BenchError::Io { path, source });
            entry(id, store, template, manifest, oracle)
        })
        .collect();
    SuiteResult { entries }
}
