//! N-Triples and Turtle serialization.

mod ntriples;
mod turtle;

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::rdf::{RdfError, TripleStore};

pub use ntriples::{read_ntriples, write_ntriples};
pub use turtle::{read_turtle, write_turtle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdfFormat {
    NTriples,
    Turtle,
}

impl RdfFormat {
    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag.to_ascii_lowercase().as_str() {
            "nt" | "ntriples" | "n-triples" => Some(RdfFormat::NTriples),
            "ttl" | "turtle" => Some(RdfFormat::Turtle),
            _ => None,
        }
    }

    /// Guesses the format from a file extension; anything but `.ttl` is N-Triples.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ttl") => RdfFormat::Turtle,
            _ => RdfFormat::NTriples,
        }
    }
}

impl fmt::Display for RdfFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RdfFormat::NTriples => "N-Triples",
            RdfFormat::Turtle => "Turtle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SerializationReport {
    pub bytes_written: u64,
    pub triples_written: usize,
    pub format: RdfFormat,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Term { line: usize, source: RdfError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_graph<W: Write>(
    store: &TripleStore,
    sink: W,
    format: RdfFormat,
) -> io::Result<SerializationReport> {
    match format {
        RdfFormat::NTriples => write_ntriples(store, sink),
        RdfFormat::Turtle => write_turtle(store, sink),
    }
}

pub fn read_graph<R: BufRead>(source: R, format: RdfFormat) -> Result<TripleStore, ParseError> {
    match format {
        RdfFormat::NTriples => read_ntriples(source),
        RdfFormat::Turtle => read_turtle(source),
    }
}

/// Serialized N-Triples size of a store without keeping the bytes.
pub fn ntriples_size(store: &TripleStore) -> u64 {
    write_ntriples(store, io::sink())
        .map(|r| r.bytes_written)
        .unwrap_or_default()
}

/// Byte-counting adapter around a sink.
pub(crate) struct CountingWriter<W> {
    inner: W,
    pub count: u64,
}

impl<W: Write> CountingWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, count: 0 }
    }
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.count += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Decodes the escape sequence after a backslash. `allow_echar` is false inside
/// IRIs, where only `\u` / `\U` are permitted.
pub(crate) fn unescape_char(
    chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>,
    allow_echar: bool,
) -> Result<char, String> {
    let (_, c) = chars.next().ok_or("dangling escape")?;
    let hex = |chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>,
               n: usize|
     -> Result<char, String> {
        let mut code = 0u32;
        for _ in 0..n {
            let (_, h) = chars.next().ok_or("truncated unicode escape")?;
            code = code * 16
                + h.to_digit(16)
                    .ok_or_else(|| format!("bad hex digit {h:?} in escape"))?;
        }
        char::from_u32(code).ok_or_else(|| format!("invalid code point U+{code:X}"))
    };
    match c {
        'u' => hex(chars, 4),
        'U' => hex(chars, 8),
        _ if !allow_echar => Err(format!("escape \\{c} not allowed in IRI")),
        't' => Ok('\t'),
        'b' => Ok('\u{8}'),
        'n' => Ok('\n'),
        'r' => Ok('\r'),
        'f' => Ok('\u{c}'),
        '"' => Ok('"'),
        '\'' => Ok('\''),
        '\\' => Ok('\\'),
        other => Err(format!("unknown escape \\{other}")),
    }
}
