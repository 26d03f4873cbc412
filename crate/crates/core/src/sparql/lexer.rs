//! Tokenizer for the query subset.

use super::SparqlError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Var(String),
    Iri(String),
    PName(String, String),
    Blank(String),
    Str(String),
    Integer(String),
    Decimal(String),
    Double(String),
    /// Bare word: keywords, `a`, `true`/`false`, function names.
    Word(String),
    LangTag(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

const PUNCTS: [&str; 23] = [
    "^^", "^", "&&", "||", "!=", "<=", ">=", "{", "}", "(", ")", "[", "]", ".", ";", ",", "*", "/",
    "+", "-", "=", "!", "|",
];

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, SparqlError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;
    while i < text.len() {
        let c = text[i..].chars().next().unwrap();
        let start = i;
        let err = |message: String| SparqlError::Syntax {
            line,
            column: start - line_start + 1,
            message,
        };
        if c == '\n' {
            line += 1;
            i += 1;
            line_start = i;
            continue;
        }
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '#' {
            while i < text.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let tok = match c {
            '?' | '$' => {
                let name: String = text[i + 1..]
                    .chars()
                    .take_while(|&c| c.is_alphanumeric() || c == '_')
                    .collect();
                if name.is_empty() {
                    // A lone `?` only occurs as a property path modifier.
                    i += 1;
                    Tok::Punct("?")
                } else {
                    i += 1 + name.len();
                    Tok::Var(name)
                }
            }
            '<' => {
                // IRI if a '>' closes it before any character not allowed in IRIs.
                let rest = &text[i + 1..];
                let end =
                    rest.find(|c: char| c == '>' || c.is_whitespace() || "<\"{}|^`".contains(c));
                match end {
                    Some(e) if rest[e..].starts_with('>') => {
                        i += e + 2;
                        Tok::Iri(rest[..e].to_owned())
                    }
                    _ if rest.starts_with('=') => {
                        i += 2;
                        Tok::Punct("<=")
                    }
                    _ => {
                        i += 1;
                        Tok::Punct("<")
                    }
                }
            }
            '>' => {
                if text[i + 1..].starts_with('=') {
                    i += 2;
                    Tok::Punct(">=")
                } else {
                    i += 1;
                    Tok::Punct(">")
                }
            }
            '"' | '\'' => {
                if text[i..].starts_with("\"\"\"") || text[i..].starts_with("'''") {
                    return Err(err("long string literals are not supported".into()));
                }
                let mut s = String::new();
                let mut chars = text[i + 1..].char_indices();
                loop {
                    match chars.next() {
                        Some((k, q)) if q == c => {
                            i += 1 + k + 1;
                            break;
                        }
                        Some((_, '\\')) => match chars.next() {
                            Some((_, e)) => s.push(match e {
                                't' => '\t',
                                'n' => '\n',
                                'r' => '\r',
                                'b' => '\u{8}',
                                'f' => '\u{c}',
                                '"' | '\'' | '\\' => e,
                                other => return Err(err(format!("unknown escape \\{other}"))),
                            }),
                            None => return Err(err("unterminated string".into())),
                        },
                        Some((_, '\n')) | None => return Err(err("unterminated string".into())),
                        Some((_, ch)) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            '@' => {
                let tag: String = text[i + 1..]
                    .chars()
                    .take_while(|&c| c.is_ascii_alphanumeric() || c == '-')
                    .collect();
                i += 1 + tag.len();
                Tok::LangTag(tag)
            }
            c if c.is_ascii_digit()
                || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) =>
            {
                let mut j = i;
                while j < text.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let mut decimal = false;
                if j < text.len()
                    && bytes[j] == b'.'
                    && bytes.get(j + 1).is_some_and(u8::is_ascii_digit)
                {
                    decimal = true;
                    j += 1;
                    while j < text.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let mut double = false;
                if j < text.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < text.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < text.len() && bytes[k].is_ascii_digit() {
                        while k < text.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                        double = true;
                    }
                }
                let lex = text[i..j].to_owned();
                i = j;
                if double {
                    Tok::Double(lex)
                } else if decimal {
                    Tok::Decimal(lex)
                } else {
                    Tok::Integer(lex)
                }
            }
            '_' if text[i..].starts_with("_:") => {
                let label: String = text[i + 2..]
                    .chars()
                    .take_while(|&c| c.is_alphanumeric() || c == '_')
                    .collect();
                i += 2 + label.len();
                Tok::Blank(label)
            }
            c if c.is_alphabetic() || c == '_' || c == ':' => {
                let mut j = i;
                let mut colon = None;
                for (k, ch) in text[i..].char_indices() {
                    let at = i + k;
                    if ch == ':' && colon.is_none() {
                        colon = Some(at);
                    } else if !(is_name_char(ch) || (ch == '.' && colon.is_some())) {
                        break;
                    }
                    j = at + ch.len_utf8();
                }
                // A local name cannot end with '.'.
                while colon.is_some_and(|c| j > c + 1) && text[..j].ends_with('.') {
                    j -= 1;
                }
                let word = &text[i..j];
                i = j;
                match colon {
                    Some(at) => Tok::PName(text[start..at].to_owned(), text[at + 1..j].to_owned()),
                    None => Tok::Word(word.to_owned()),
                }
            }
            _ => match PUNCTS.iter().find(|p| text[i..].starts_with(**p)) {
                Some(p) => {
                    i += p.len();
                    Tok::Punct(p)
                }
                None => return Err(err(format!("unexpected character {c:?}"))),
            },
        };
        out.push(Token {
            tok,
            line,
            column: start - line_start + 1,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("SELECT ?x WHERE { ?x a hpc:Sensor . }"),
            vec![
                Tok::Word("SELECT".into()),
                Tok::Var("x".into()),
                Tok::Word("WHERE".into()),
                Tok::Punct("{"),
                Tok::Var("x".into()),
                Tok::Word("a".into()),
                Tok::PName("hpc".into(), "Sensor".into()),
                Tok::Punct("."),
                Tok::Punct("}"),
            ]
        );
    }

    #[test]
    fn less_than_versus_iri() {
        assert_eq!(
            toks("?a < ?b <= 3 <http://x/y>"),
            vec![
                Tok::Var("a".into()),
                Tok::Punct("<"),
                Tok::Var("b".into()),
                Tok::Punct("<="),
                Tok::Integer("3".into()),
                Tok::Iri("http://x/y".into()),
            ]
        );
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(
            toks("1 2.5 1e3 .5 \"a\\\"b\"^^xsd:string 'c'"),
            vec![
                Tok::Integer("1".into()),
                Tok::Decimal("2.5".into()),
                Tok::Double("1e3".into()),
                Tok::Decimal(".5".into()),
                Tok::Str("a\"b".into()),
                Tok::Punct("^^"),
                Tok::PName("xsd".into(), "string".into()),
                Tok::Str("c".into()),
            ]
        );
    }

    #[test]
    fn pname_before_dot() {
        assert_eq!(
            toks("hpc:a hpc:b hpc:c."),
            vec![
                Tok::PName("hpc".into(), "a".into()),
                Tok::PName("hpc".into(), "b".into()),
                Tok::PName("hpc".into(), "c".into()),
                Tok::Punct("."),
            ]
        );
    }

    #[test]
    fn error_position() {
        match tokenize("SELECT\n  ~") {
            Err(SparqlError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
    }
}
