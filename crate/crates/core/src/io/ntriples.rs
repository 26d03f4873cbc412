use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufWriter, Write};

use super::{unescape_char, CountingWriter, ParseError, RdfFormat, SerializationReport};
use crate::rdf::{RdfError, Term, Triple, TripleStore};
use crate::vocab::xsd;

/// Writes one line per triple in (S, P, O) id order. Output is a pure function
/// of the store contents and its interning order.
pub fn write_ntriples<W: Write>(
    store: &TripleStore,
    sink: W,
) -> std::io::Result<SerializationReport> {
    let mut out = CountingWriter::new(BufWriter::new(sink));
    let mut line = String::new();
    let mut triples = 0;
    for [s, p, o] in store.iter_ids() {
        use std::fmt::Write as _;
        line.clear();
        // Writing into a String cannot fail.
        let _ = writeln!(
            line,
            "{} {} {} .",
            store.resolve(s),
            store.resolve(p),
            store.resolve(o)
        );
        out.write_all(line.as_bytes())?;
        triples += 1;
    }
    out.flush()?;
    Ok(SerializationReport {
        bytes_written: out.count,
        triples_written: triples,
        format: RdfFormat::NTriples,
    })
}

/// Reads N-Triples. Comments, blank lines and CRLF line endings are accepted.
///
/// Terms are interned in an order under which the file's own line order is
/// the (S, P, O) id order, so writing the result reproduces a file produced by
/// [`write_ntriples`] byte for byte.
pub fn read_ntriples<R: BufRead>(source: R) -> Result<TripleStore, ParseError> {
    let mut triples = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if let Some(triple) = parse_line(line).map_err(|message| ParseError::Syntax {
            line: line_no,
            message,
        })? {
            triples.push((line_no, triple));
        }
    }
    build_in_file_order(triples)
}

/// Inserts triples after interning their terms in a topological order of the
/// constraints "line i sorts before line i+1". Ties, and cycles from unsorted
/// input, fall back to first appearance.
pub(crate) fn build_in_file_order(
    triples: Vec<(usize, Triple)>,
) -> Result<TripleStore, ParseError> {
    let mut index: HashMap<&Term, usize> = HashMap::new();
    let mut order: Vec<&Term> = Vec::new();
    let mut ids: Vec<[usize; 3]> = Vec::with_capacity(triples.len());
    for (_, t) in &triples {
        let mut row = [0; 3];
        for (slot, term) in row.iter_mut().zip([&t.subject, &t.predicate, &t.object]) {
            *slot = *index.entry(term).or_insert_with(|| {
                order.push(term);
                order.len() - 1
            });
        }
        ids.push(row);
    }

    let n = order.len();
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for pair in ids.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if let Some(k) = (0..3).find(|&k| a[k] != b[k]) {
            successors[a[k]].push(b[k]);
            indegree[b[k]] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut remaining: BTreeSet<usize> = (0..n).collect();
    let mut ranked = Vec::with_capacity(n);
    while !remaining.is_empty() {
        let next = match ready.pop_first() {
            Some(i) => i,
            None => *remaining.first().expect("non-empty"),
        };
        if !remaining.remove(&next) {
            continue;
        }
        ranked.push(next);
        for &succ in &successors[next] {
            indegree[succ] = indegree[succ].saturating_sub(1);
            if indegree[succ] == 0 && remaining.contains(&succ) {
                ready.insert(succ);
            }
        }
    }

    let mut store = TripleStore::new();
    let first_line: Vec<usize> = {
        let mut lines = vec![0; n];
        for ((line, _), row) in triples.iter().zip(&ids).rev() {
            for &i in row {
                lines[i] = *line;
            }
        }
        lines
    };
    let mut assigned = vec![None; n];
    for i in ranked {
        let id = store
            .intern(order[i].clone())
            .map_err(|source| ParseError::Term {
                line: first_line[i],
                source,
            })?;
        assigned[i] = Some(id);
    }
    for ((line, t), row) in triples.iter().zip(&ids) {
        if t.subject.is_literal() {
            return Err(ParseError::Term {
                line: *line,
                source: RdfError::LiteralSubject(t.subject.to_string()),
            });
        }
        if !t.predicate.is_iri() {
            return Err(ParseError::Term {
                line: *line,
                source: RdfError::NonIriPredicate(t.predicate.to_string()),
            });
        }
        let [s, p, o] = row.map(|i| assigned[i].expect("every term ranked"));
        store.insert_ids(s, p, o);
    }
    Ok(store)
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start_matches([' ', '\t']).len();
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.text[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn at_end_or_comment(&self) -> bool {
        let rest = &self.text[self.pos..];
        rest.is_empty() || rest.starts_with('#')
    }

    fn iri(&mut self) -> Result<String, String> {
        if !self.eat("<") {
            return Err(format!("expected '<' at column {}", self.pos + 1));
        }
        let rest = &self.text[self.pos..];
        let mut out = String::new();
        let mut chars = rest.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            match c {
                '>' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => out.push(unescape_char(&mut chars, false)?),
                c => out.push(c),
            }
        }
        Err("unterminated IRI".into())
    }

    fn blank(&mut self) -> Result<String, String> {
        if !self.eat("_:") {
            return Err("expected blank node".into());
        }
        let rest = &self.text[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'))
            .unwrap_or(rest.len());
        let label = rest[..len].trim_end_matches('.');
        if label.is_empty() {
            return Err("empty blank node label".into());
        }
        self.pos += label.len();
        Ok(label.to_owned())
    }

    fn quoted(&mut self) -> Result<String, String> {
        if !self.eat("\"") {
            return Err("expected '\"'".into());
        }
        let rest = &self.text[self.pos..];
        let mut out = String::new();
        let mut chars = rest.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => out.push(unescape_char(&mut chars, true)?),
                c => out.push(c),
            }
        }
        Err("unterminated string literal".into())
    }

    fn subject(&mut self) -> Result<Term, String> {
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri()?)),
            Some('_') => Ok(Term::BlankNode(self.blank()?)),
            _ => Err(format!("expected subject at column {}", self.pos + 1)),
        }
    }

    fn object(&mut self) -> Result<Term, String> {
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri()?)),
            Some('_') => Ok(Term::BlankNode(self.blank()?)),
            Some('"') => {
                let lexical = self.quoted()?;
                if self.eat("^^") {
                    let datatype = self.iri()?;
                    Ok(Term::Literal { lexical, datatype })
                } else if self.peek() == Some('@') {
                    Err("language-tagged literals are not supported".into())
                } else {
                    Ok(Term::Literal {
                        lexical,
                        datatype: xsd::STRING.to_owned(),
                    })
                }
            }
            _ => Err(format!("expected object at column {}", self.pos + 1)),
        }
    }
}

fn parse_line(line: &str) -> Result<Option<Triple>, String> {
    let mut cur = Cursor { text: line, pos: 0 };
    cur.skip_ws();
    if cur.at_end_or_comment() {
        return Ok(None);
    }
    let subject = cur.subject()?;
    cur.skip_ws();
    if cur.peek() != Some('<') {
        return Err(format!("expected predicate IRI at column {}", cur.pos + 1));
    }
    let predicate = Term::Iri(cur.iri()?);
    cur.skip_ws();
    let object = cur.object()?;
    cur.skip_ws();
    if !cur.eat(".") {
        return Err(format!("expected '.' at column {}", cur.pos + 1));
    }
    cur.skip_ws();
    if !cur.at_end_or_comment() {
        return Err(format!("trailing content at column {}", cur.pos + 1));
    }
    Ok(Some(Triple {
        subject,
        predicate,
        object,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_to_vec(store: &TripleStore) -> (Vec<u8>, SerializationReport) {
        let mut buf = Vec::new();
        let report = write_ntriples(store, &mut buf).unwrap();
        (buf, report)
    }

    #[test]
    fn empty_store() {
        let (buf, report) = write_to_vec(&TripleStore::new());
        assert!(buf.is_empty());
        assert_eq!((report.bytes_written, report.triples_written), (0, 0));
    }

    #[test]
    fn single_line_length() {
        let line = "<http://ontology.hpc.org/sensor/1/p0> <http://ontology.hpc.org/hasReading> _:r1_0_0 .\n";
        let store = read_ntriples(line.as_bytes()).unwrap();
        let (buf, report) = write_to_vec(&store);
        assert_eq!(report.bytes_written, line.len() as u64);
        assert_eq!(String::from_utf8(buf).unwrap(), line);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = read_ntriples("malformed".as_bytes()).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, .. }), "{err}");
        let text = "<http://a/s> <http://a/p> <http://a/o> .\n<http://a/s> <http://a/p> .\n";
        assert!(matches!(
            read_ntriples(text.as_bytes()),
            Err(ParseError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn bad_literal_and_escape() {
        let bad_int =
            r#"<http://a/s> <http://a/p> "x"^^<http://www.w3.org/2001/XMLSchema#integer> ."#;
        assert!(matches!(
            read_ntriples(bad_int.as_bytes()),
            Err(ParseError::Term { line: 1, .. })
        ));
        let bad_escape = r#"<http://a/s> <http://a/p> "a\qb" ."#;
        assert!(matches!(
            read_ntriples(bad_escape.as_bytes()),
            Err(ParseError::Syntax { .. })
        ));
        let bad_iri = "<no scheme> <http://a/p> <http://a/o> .";
        assert!(read_ntriples(bad_iri.as_bytes()).is_err());
    }

    #[test]
    fn crlf_in_lf_out() {
        let text = "<http://a/s> <http://a/p> \"x\" .\r\n# comment\r\n\r\n<http://a/s> <http://a/p> \"y\" . # trailing\r\n";
        let store = read_ntriples(text.as_bytes()).unwrap();
        assert_eq!(store.len(), 2);
        let (buf, _) = write_to_vec(&store);
        let out = String::from_utf8(buf).unwrap();
        assert!(!out.contains('\r'));
        assert_eq!(out.lines().count(), 2);
    }

    #[test]
    fn escapes_round_trip() {
        let text = "<http://a/s> <http://a/p> \"tab\\there \\u00E9 \\\"q\\\" \\\\ nl\\n\" .\n";
        let store = read_ntriples(text.as_bytes()).unwrap();
        let t = store.iter().next().unwrap();
        assert_eq!(t.object, Term::string("tab\there é \"q\" \\ nl\n"));
        let (buf, _) = write_to_vec(&store);
        let again = read_ntriples(buf.as_slice()).unwrap();
        assert!(again == store);
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        prop_oneof![
            "[a-z]{1,6}".prop_map(|s| Term::iri(format!("http://ontology.hpc.org/{s}")).unwrap()),
            "[a-z0-9_]{1,6}".prop_map(|s| Term::blank(s).unwrap()),
            any::<i64>().prop_map(Term::integer),
            any::<f64>().prop_map(Term::double),
            "\\PC{0,8}".prop_map(Term::string),
        ]
    }

    proptest! {
        #[test]
        fn write_read_write_is_byte_identical(
            triples in prop::collection::vec((arb_term(), "[a-z]{1,4}", arb_term()), 0..60)
        ) {
            let mut store = TripleStore::new();
            for (s, p, o) in triples {
                let s = if s.is_literal() { Term::blank("lit").unwrap() } else { s };
                let p = Term::iri(format!("http://ontology.hpc.org/{p}")).unwrap();
                store.insert(Triple::new(s, p, o).unwrap()).unwrap();
            }
            let (first, report) = write_to_vec(&store);
            prop_assert_eq!(report.bytes_written, first.len() as u64);
            let reread = read_ntriples(first.as_slice()).unwrap();
            prop_assert!(reread == store);
            let (second, _) = write_to_vec(&reread);
            prop_assert_eq!(first, second);
        }
    }
}
