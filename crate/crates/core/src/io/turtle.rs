//! Turtle writer with subject grouping, and a reader for the subset of Turtle
//! that the writer (and hand-written ontology files in the same style) use:
//! prefixes, IRIs, prefixed names, blank node labels, quoted and numeric
//! literals, `a`, and `;` / `,` abbreviations.

use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};

use super::{unescape_char, CountingWriter, ParseError, RdfFormat, SerializationReport};
use crate::rdf::{write_escaped, Term, TermId, Triple, TripleStore};
use crate::vocab::{self, xsd};

fn local_is_simple(local: &str) -> bool {
    local.is_empty()
        || (local
            .bytes()
            .next()
            .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
            && local
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-'))
}

/// Index into [`vocab::TURTLE_PREFIXES`] and local part, if `iri` can be
/// written as a prefixed name.
fn split_prefixed(iri: &str) -> Option<(usize, &str)> {
    vocab::TURTLE_PREFIXES
        .iter()
        .enumerate()
        .filter_map(|(i, (_, ns))| iri.strip_prefix(ns).map(|local| (i, local)))
        .find(|(_, local)| local_is_simple(local))
}

struct TermWriter<'a> {
    store: &'a TripleStore,
    enabled: [bool; 5],
    rdf_type: Option<TermId>,
}

impl TermWriter<'_> {
    fn iri(&self, out: &mut String, iri: &str) {
        match split_prefixed(iri) {
            Some((i, local)) if self.enabled[i] => {
                out.push_str(vocab::TURTLE_PREFIXES[i].0);
                out.push(':');
                out.push_str(local);
            }
            _ => {
                out.push('<');
                out.push_str(iri);
                out.push('>');
            }
        }
    }

    fn term(&self, out: &mut String, id: TermId) {
        match self.store.resolve(id) {
            Term::Iri(iri) => self.iri(out, iri),
            Term::BlankNode(label) => {
                out.push_str("_:");
                out.push_str(label);
            }
            Term::Literal { lexical, datatype } => {
                out.push('"');
                let _ = write_escaped(out, lexical);
                out.push('"');
                if datatype != xsd::STRING {
                    out.push_str("^^");
                    self.iri(out, datatype);
                }
            }
        }
    }

    fn predicate(&self, out: &mut String, id: TermId) {
        if Some(id) == self.rdf_type {
            out.push('a');
        } else {
            self.term(out, id);
        }
    }
}

/// Writes Turtle, grouping by subject (`;`) and by predicate (`,`). A prefix is
/// declared only if at least two IRIs in the output use it, so the document is
/// never longer than the N-Triples form of the same graph.
pub fn write_turtle<W: Write>(
    store: &TripleStore,
    sink: W,
) -> std::io::Result<SerializationReport> {
    let rdf_type = store.lookup(&Term::Iri(vocab::RDF_TYPE.to_owned()));
    let mut uses = [0usize; 5];
    for [s, p, o] in store.iter_ids() {
        let ids: &[TermId] = if Some(p) == rdf_type {
            &[s, o]
        } else {
            &[s, p, o]
        };
        for &id in ids {
            let iri = match store.resolve(id) {
                Term::Iri(iri) => iri,
                Term::Literal { datatype, .. } if datatype != xsd::STRING => datatype,
                _ => continue,
            };
            if let Some((i, _)) = split_prefixed(iri) {
                uses[i] += 1;
            }
        }
    }
    let enabled = uses.map(|n| n >= 2);
    let writer = TermWriter {
        store,
        enabled,
        rdf_type,
    };

    let mut out = CountingWriter::new(BufWriter::new(sink));
    for (i, (prefix, ns)) in vocab::TURTLE_PREFIXES.iter().enumerate() {
        if enabled[i] {
            writeln!(out, "@prefix {prefix}: <{ns}> .")?;
        }
    }
    if enabled.iter().any(|&e| e) {
        out.write_all(b"\n")?;
    }

    let mut buf = String::new();
    let mut triples = 0;
    let mut current: Option<(TermId, TermId)> = None;
    for [s, p, o] in store.iter_ids() {
        buf.clear();
        match current {
            Some((cs, cp)) if cs == s && cp == p => buf.push_str(" ,\n    "),
            Some((cs, _)) if cs == s => {
                buf.push_str(" ;\n  ");
                writer.predicate(&mut buf, p);
                buf.push(' ');
            }
            prev => {
                if prev.is_some() {
                    buf.push_str(" .\n");
                }
                writer.term(&mut buf, s);
                buf.push(' ');
                writer.predicate(&mut buf, p);
                buf.push(' ');
            }
        }
        writer.term(&mut buf, o);
        out.write_all(buf.as_bytes())?;
        current = Some((s, p));
        triples += 1;
    }
    if current.is_some() {
        out.write_all(b" .\n")?;
    }
    out.flush()?;
    Ok(SerializationReport {
        bytes_written: out.count,
        triples_written: triples,
        format: RdfFormat::Turtle,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Iri(String),
    PName(String, String),
    Blank(String),
    Str(String),
    Number(String),
    Word(String),
    Punct(char),
    DoubleCaret,
    At(String),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1;
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while chars.peek().is_some_and(|&(_, c)| c != '\n') {
                    chars.next();
                }
            }
            '<' => {
                chars.next();
                let mut iri = String::new();
                loop {
                    match chars.next() {
                        Some((_, '>')) => break,
                        Some((_, '\\')) => {
                            iri.push(unescape_char(&mut chars, false).map_err(|m| syntax(line, m))?)
                        }
                        Some((_, '\n')) | None => return Err(syntax(line, "unterminated IRI")),
                        Some((_, c)) => iri.push(c),
                    }
                }
                toks.push((line, Tok::Iri(iri)));
            }
            '"' | '\'' => {
                let quote = c;
                chars.next();
                if text[start + 1..].starts_with([quote, quote])
                    && text[start + 1..].chars().nth(1) == Some(quote)
                {
                    return Err(syntax(line, "long string literals are not supported"));
                }
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, c)) if c == quote => break,
                        Some((_, '\\')) => {
                            s.push(unescape_char(&mut chars, true).map_err(|m| syntax(line, m))?)
                        }
                        Some((_, '\n')) | None => {
                            return Err(syntax(line, "unterminated string literal"))
                        }
                        Some((_, c)) => s.push(c),
                    }
                }
                toks.push((line, Tok::Str(s)));
            }
            '^' => {
                chars.next();
                if chars.next().map(|(_, c)| c) != Some('^') {
                    return Err(syntax(line, "expected '^^'"));
                }
                toks.push((line, Tok::DoubleCaret));
            }
            '@' => {
                chars.next();
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        word.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push((line, Tok::At(word)));
            }
            ';' | ',' | '[' | ']' | '(' | ')' => {
                chars.next();
                toks.push((line, Tok::Punct(c)));
            }
            '.' if !text[start + 1..].starts_with(|c: char| c.is_ascii_digit()) => {
                chars.next();
                toks.push((line, Tok::Punct('.')));
            }
            c if c.is_ascii_digit() || matches!(c, '+' | '-' | '.') => {
                let mut num = String::new();
                while let Some(&(i, c)) = chars.peek() {
                    let continues_number = c.is_ascii_digit()
                        || matches!(c, 'e' | 'E')
                        || (matches!(c, '+' | '-')
                            && (num.is_empty() || num.ends_with(['e', 'E'])))
                        || (c == '.' && text[i + 1..].starts_with(|c: char| c.is_ascii_digit()));
                    if !continues_number {
                        break;
                    }
                    num.push(c);
                    chars.next();
                }
                toks.push((line, Tok::Number(num)));
            }
            _ => {
                let mut word = String::new();
                while let Some(&(i, c)) = chars.peek() {
                    let trailing_dot = c == '.'
                        && !text[i + 1..].starts_with(|c: char| {
                            c.is_ascii_alphanumeric() || c == '_' || c == '-'
                        });
                    if c.is_whitespace()
                        || matches!(c, ';' | ',' | '<' | '"' | '#' | '[' | ']' | '(' | ')')
                        || trailing_dot
                    {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                if word.is_empty() {
                    return Err(syntax(line, format!("unexpected character {c:?}")));
                }
                let tok = if let Some(label) = word.strip_prefix("_:") {
                    Tok::Blank(label.to_owned())
                } else if let Some((prefix, local)) = word.split_once(':') {
                    Tok::PName(prefix.to_owned(), local.to_owned())
                } else {
                    Tok::Word(word)
                };
                toks.push((line, tok));
            }
        }
    }
    Ok(toks)
}

struct TurtleParser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    prefixes: HashMap<String, String>,
}

impl TurtleParser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map(|(l, _)| *l)
            .unwrap_or(1)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Result<Tok, ParseError> {
        let line = self.line();
        let tok = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        tok.ok_or_else(|| syntax(line, "unexpected end of input"))
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        let line = self.line();
        match self.next()? {
            Tok::Punct(p) if p == c => Ok(()),
            other => Err(syntax(line, format!("expected '{c}', found {other:?}"))),
        }
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<String, ParseError> {
        let ns = self
            .prefixes
            .get(prefix)
            .ok_or_else(|| syntax(self.line(), format!("unknown prefix {prefix:?}")))?;
        Ok(format!("{ns}{}", local.replace('\\', "")))
    }

    fn iri_tok(&self, tok: Tok) -> Result<String, ParseError> {
        match tok {
            Tok::Iri(iri) => Ok(iri),
            Tok::PName(p, l) => self.expand(&p, &l),
            other => Err(syntax(
                self.line(),
                format!("expected IRI, found {other:?}"),
            )),
        }
    }

    fn unsupported(&self, tok: &Tok) -> Option<ParseError> {
        match tok {
            Tok::Punct('[') | Tok::Punct(']') => Some(syntax(
                self.line(),
                "blank node property lists are not supported",
            )),
            Tok::Punct('(') | Tok::Punct(')') => {
                Some(syntax(self.line(), "collections are not supported"))
            }
            _ => None,
        }
    }

    fn term(&mut self, allow_literal: bool) -> Result<Term, ParseError> {
        let line = self.line();
        let tok = self.next()?;
        if let Some(err) = self.unsupported(&tok) {
            return Err(err);
        }
        let lit = |lex: String, dt: &str| Term::Literal {
            lexical: lex,
            datatype: dt.to_owned(),
        };
        let term = match tok {
            Tok::Iri(_) | Tok::PName(..) => Term::Iri(self.iri_tok(tok)?),
            Tok::Blank(label) => Term::BlankNode(label),
            Tok::Str(s) if allow_literal => match self.peek() {
                Some(Tok::DoubleCaret) => {
                    self.pos += 1;
                    let dt = self.next()?;
                    lit(s, &self.iri_tok(dt)?)
                }
                Some(Tok::At(_)) => {
                    return Err(syntax(line, "language-tagged literals are not supported"))
                }
                _ => lit(s, xsd::STRING),
            },
            Tok::Number(n) if allow_literal => {
                let dt = if n.contains(['e', 'E']) {
                    xsd::DOUBLE
                } else if n.contains('.') {
                    xsd::DECIMAL
                } else {
                    xsd::INTEGER
                };
                lit(n, dt)
            }
            Tok::Word(w) if allow_literal && (w == "true" || w == "false") => lit(w, xsd::BOOLEAN),
            other => return Err(syntax(line, format!("unexpected token {other:?}"))),
        };
        Ok(term)
    }

    fn verb(&mut self) -> Result<Term, ParseError> {
        if self.peek() == Some(&Tok::Word("a".into())) {
            self.pos += 1;
            return Ok(Term::Iri(vocab::RDF_TYPE.to_owned()));
        }
        let line = self.line();
        let tok = self.next()?;
        Ok(Term::Iri(
            self.iri_tok(tok)
                .map_err(|_| syntax(line, "expected predicate"))?,
        ))
    }

    fn parse(mut self) -> Result<Vec<(usize, Triple)>, ParseError> {
        let mut out = Vec::new();
        while let Some(tok) = self.peek().cloned() {
            match tok {
                Tok::At(ref w) if w == "prefix" => {
                    self.pos += 1;
                    self.prefix_decl()?;
                    self.expect_punct('.')?;
                }
                Tok::Word(ref w) if w.eq_ignore_ascii_case("prefix") => {
                    self.pos += 1;
                    self.prefix_decl()?;
                }
                Tok::At(w) | Tok::Word(w) if w.eq_ignore_ascii_case("base") => {
                    return Err(syntax(self.line(), "base declarations are not supported"));
                }
                _ => {
                    let line = self.line();
                    let subject = self.term(false)?;
                    loop {
                        let predicate = self.verb()?;
                        loop {
                            let object = self.term(true)?;
                            out.push((
                                line,
                                Triple {
                                    subject: subject.clone(),
                                    predicate: predicate.clone(),
                                    object,
                                },
                            ));
                            if self.peek() == Some(&Tok::Punct(',')) {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                        // `;` may repeat and may directly precede the final '.'.
                        let mut saw_semicolon = false;
                        while self.peek() == Some(&Tok::Punct(';')) {
                            self.pos += 1;
                            saw_semicolon = true;
                        }
                        if !saw_semicolon || self.peek() == Some(&Tok::Punct('.')) {
                            break;
                        }
                    }
                    self.expect_punct('.')?;
                }
            }
        }
        Ok(out)
    }

    fn prefix_decl(&mut self) -> Result<(), ParseError> {
        let line = self.line();
        let Tok::PName(prefix, local) = self.next()? else {
            return Err(syntax(line, "expected prefix name"));
        };
        if !local.is_empty() {
            return Err(syntax(line, "prefix name must end with ':'"));
        }
        let Tok::Iri(ns) = self.next()? else {
            return Err(syntax(line, "expected namespace IRI"));
        };
        self.prefixes.insert(prefix, ns);
        Ok(())
    }
}

pub fn read_turtle<R: BufRead>(mut source: R) -> Result<TripleStore, ParseError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let parser = TurtleParser {
        toks: tokenize(&text)?,
        pos: 0,
        prefixes: HashMap::new(),
    };
    let triples = parser.parse()?;
    let mut store = TripleStore::new();
    for (line, t) in triples {
        store
            .insert(t)
            .map_err(|source| ParseError::Term { line, source })?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{read_ntriples, write_ntriples};

    fn ttl(store: &TripleStore) -> (String, SerializationReport) {
        let mut buf = Vec::new();
        let report = write_turtle(store, &mut buf).unwrap();
        (String::from_utf8(buf).unwrap(), report)
    }

    fn nt_len(store: &TripleStore) -> u64 {
        write_ntriples(store, std::io::sink())
            .unwrap()
            .bytes_written
    }

    const SAMPLE: &str = "\
<http://ontology.hpc.org/sensor/1/p0> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://ontology.hpc.org/Sensor> .
<http://ontology.hpc.org/sensor/1/p0> <http://ontology.hpc.org/hasReading> _:r1_0_0 .
<http://ontology.hpc.org/sensor/1/p0> <http://ontology.hpc.org/hasReading> _:r1_0_20 .
<http://ontology.hpc.org/sensor/1/p0> <http://ontology.hpc.org/sensorName> \"p0\" .
_:r1_0_0 <http://ontology.hpc.org/value> \"1.5\"^^<http://www.w3.org/2001/XMLSchema#double> .
";

    #[test]
    fn groups_and_reparses() {
        let store = read_ntriples(SAMPLE.as_bytes()).unwrap();
        let (text, report) = ttl(&store);
        assert!(text.starts_with("@prefix hpc: <http://ontology.hpc.org/> ."));
        assert!(text.contains(" a hpc:Sensor ;"));
        assert!(text.contains("_:r1_0_0 ,\n    _:r1_0_20"));
        assert_eq!(report.triples_written, 5);
        assert_eq!(report.bytes_written, text.len() as u64);
        let back = read_turtle(text.as_bytes()).unwrap();
        assert!(back == store);
        assert!(report.bytes_written < nt_len(&store));
    }

    #[test]
    fn single_statement_document() {
        let store = read_ntriples("<http://a/s> <http://a/p> \"x\" .\n".as_bytes()).unwrap();
        let (text, _) = ttl(&store);
        assert_eq!(text, "<http://a/s> <http://a/p> \"x\" .\n");
        assert!(read_turtle(text.as_bytes()).unwrap() == store);
    }

    #[test]
    fn shared_subject_is_smaller_than_ntriples() {
        let store = read_ntriples(
            "_:a <http://a/p> \"x\" .\n_:a <http://a/q> <http://ontology.hpc.org/o> .\n".as_bytes(),
        )
        .unwrap();
        let (text, report) = ttl(&store);
        assert!(report.bytes_written < nt_len(&store), "{text}");
    }

    #[test]
    fn reads_hand_written_turtle() {
        let doc = r#"
PREFIX hpc: <http://ontology.hpc.org/>
@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
# comment
hpc:node1 a hpc:ComputeNode ;
    hpc:computeNodeId 1 ;
    hpc:load 0.5, 1e3 ;
    hpc:ok true ;
    hpc:label 'single' ;
    hpc:at "2022-02-01T00:00:00Z"^^xsd:dateTime ;
.
"#;
        let store = read_turtle(doc.as_bytes()).unwrap();
        assert_eq!(store.len(), 7);
        let id = Term::integer(1);
        assert!(store.lookup(&id).is_some());
        assert!(store
            .lookup(&Term::literal("0.5", xsd::DECIMAL).unwrap())
            .is_some());
    }

    #[test]
    fn unsupported_constructs() {
        for doc in [
            "@prefix h: <http://h/> . h:a h:b [ h:c 1 ] .",
            "@prefix h: <http://h/> . h:a h:b ( 1 2 ) .",
            "@prefix h: <http://h/> . h:a h:b \"x\"@en .",
            "h:a h:b h:c .",
        ] {
            assert!(read_turtle(doc.as_bytes()).is_err(), "{doc}");
        }
    }
}
