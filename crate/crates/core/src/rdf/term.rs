use std::fmt;

use super::lexical;
use super::RdfError;
use crate::vocab::xsd;

/// An RDF term. Equality is structural: two literals with the same value but
/// different lexical forms (`"01"` and `"1"`) are different terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Literal { lexical: String, datatype: String },
    BlankNode(String),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Result<Self, RdfError> {
        let iri = iri.into();
        if !is_valid_iri(&iri) {
            return Err(RdfError::InvalidIri(iri));
        }
        Ok(Term::Iri(iri))
    }

    pub fn literal(
        lexical: impl Into<String>,
        datatype: impl Into<String>,
    ) -> Result<Self, RdfError> {
        let lexical = lexical.into();
        let datatype = datatype.into();
        if !is_valid_iri(&datatype) {
            return Err(RdfError::InvalidIri(datatype));
        }
        if !lexical::is_valid(&lexical, &datatype) {
            return Err(RdfError::InvalidLiteral { lexical, datatype });
        }
        Ok(Term::Literal { lexical, datatype })
    }

    pub fn blank(label: impl Into<String>) -> Result<Self, RdfError> {
        let label = label.into();
        if label.is_empty()
            || !label
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'_')
        {
            return Err(RdfError::InvalidBlankLabel(label));
        }
        Ok(Term::BlankNode(label))
    }

    pub fn string(s: impl Into<String>) -> Self {
        Term::Literal {
            lexical: s.into(),
            datatype: xsd::STRING.to_owned(),
        }
    }

    pub fn integer(v: i64) -> Self {
        Term::Literal {
            lexical: v.to_string(),
            datatype: xsd::INTEGER.to_owned(),
        }
    }

    pub fn double(v: f64) -> Self {
        Term::Literal {
            lexical: lexical::format_double(v),
            datatype: xsd::DOUBLE.to_owned(),
        }
    }

    pub fn float(v: f64) -> Self {
        Term::Literal {
            lexical: lexical::format_double(v),
            datatype: xsd::FLOAT.to_owned(),
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal { .. })
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::BlankNode(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }
}

/// N-Triples rendering of the term (canonical escaping).
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::BlankNode(label) => write!(f, "_:{label}"),
            Term::Literal { lexical, datatype } => {
                f.write_str("\"")?;
                write_escaped(f, lexical)?;
                f.write_str("\"")?;
                if datatype != xsd::STRING {
                    write!(f, "^^<{datatype}>")?;
                }
                Ok(())
            }
        }
    }
}

pub(crate) fn write_escaped(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            c => f.write_char(c)?,
        }
    }
    Ok(())
}

/// Absolute IRI check: a scheme followed by ':' and no characters that
/// N-Triples forbids inside `<...>`.
pub fn is_valid_iri(iri: &str) -> bool {
    let Some((scheme, _)) = iri.split_once(':') else {
        return false;
    };
    let mut scheme_chars = scheme.chars();
    let scheme_ok = scheme_chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && scheme_chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok
        && !iri.chars().any(|c| {
            c.is_whitespace()
                || c.is_control()
                || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
        })
}

/// A subject-predicate-object statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, RdfError> {
        if subject.is_literal() {
            return Err(RdfError::LiteralSubject(subject.to_string()));
        }
        if !predicate.is_iri() {
            return Err(RdfError::NonIriPredicate(predicate.to_string()));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// A triple pattern for [`TripleStore::matches`](super::TripleStore::matches);
/// `None` is a wildcard.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: Option<Term>,
    pub predicate: Option<Term>,
    pub object: Option<Term>,
}

impl TriplePattern {
    pub fn new(subject: Option<Term>, predicate: Option<Term>, object: Option<Term>) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }

    pub fn any() -> Self {
        Self::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_validation() {
        assert!(Term::iri("http://ontology.hpc.org/Sensor").is_ok());
        assert!(Term::iri("").is_err());
        assert!(Term::iri("http://a b").is_err());
        assert!(Term::iri("no-scheme").is_err());
        assert!(Term::iri("http://x/<y>").is_err());
    }

    #[test]
    fn literal_validation() {
        assert!(Term::literal("42", xsd::INTEGER).is_ok());
        assert!(Term::literal("4x2", xsd::INTEGER).is_err());
        assert!(Term::literal("anything goes", xsd::STRING).is_ok());
        assert!(Term::literal("PT0S", xsd::DURATION).is_ok());
        assert!(Term::literal("1643673600", xsd::DATE_TIME).is_err());
    }

    #[test]
    fn datatype_distinguishes_terms() {
        let a = Term::literal("42", xsd::INTEGER).unwrap();
        let b = Term::literal("42", xsd::STRING).unwrap();
        assert_ne!(a, b);
        assert_ne!(Term::integer(1), Term::literal("01", xsd::INTEGER).unwrap());
    }

    #[test]
    fn blank_labels() {
        assert!(Term::blank("r1_0_1643673600").is_ok());
        assert!(Term::blank("").is_err());
        assert!(Term::blank("a-b").is_err());
    }

    #[test]
    fn triple_structure() {
        let s = Term::iri("http://x/s").unwrap();
        let p = Term::iri("http://x/p").unwrap();
        let lit = Term::integer(5);
        assert!(Triple::new(s.clone(), p.clone(), lit.clone()).is_ok());
        assert!(matches!(
            Triple::new(lit.clone(), p.clone(), s.clone()),
            Err(RdfError::LiteralSubject(_))
        ));
        assert!(matches!(
            Triple::new(s.clone(), Term::blank("b").unwrap(), s),
            Err(RdfError::NonIriPredicate(_))
        ));
    }

    #[test]
    fn display_escapes() {
        let t = Term::string("say \"hi\"\n\\");
        assert_eq!(t.to_string(), r#""say \"hi\"\n\\""#);
        assert_eq!(
            Term::integer(-3).to_string(),
            "\"-3\"^^<http://www.w3.org/2001/XMLSchema#integer>"
        );
    }
}
