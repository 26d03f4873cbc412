//! Recursive-descent parser for the query subset.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SparqlError;
use crate::rdf::{lexical, Term};
use crate::vocab::{self, xsd};

/// Parses and checks a SELECT query.
pub fn parse_query(text: &str) -> Result<QueryAst, SparqlError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        prefixes: HashMap::new(),
        declared: Vec::new(),
        end: text.lines().count().max(1),
    };
    let ast = p.query()?;
    check(&ast)?;
    Ok(ast)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    prefixes: HashMap<String, String>,
    declared: Vec<(String, String)>,
    end: usize,
}

const UNSUPPORTED_WORDS: [&str; 12] = [
    "OPTIONAL",
    "UNION",
    "MINUS",
    "SERVICE",
    "GRAPH",
    "VALUES",
    "EXISTS",
    "NOT",
    "CONSTRUCT",
    "ASK",
    "DESCRIBE",
    "REDUCED",
];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn error(&self, message: impl Into<String>) -> SparqlError {
        let (line, column) = self
            .toks
            .get(self.pos)
            .map(|t| (t.line, t.column))
            .unwrap_or((self.end, 1));
        SparqlError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<Tok, SparqlError> {
        let t = self
            .toks
            .get(self.pos)
            .map(|t| t.tok.clone())
            .ok_or_else(|| self.error("unexpected end of query"))?;
        self.pos += 1;
        Ok(t)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x.eq_ignore_ascii_case(w))
    }

    fn eat_word(&mut self, w: &str) -> bool {
        let hit = self.is_word(w);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect_word(&mut self, w: &str) -> Result<(), SparqlError> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.error(format!("expected {w}")))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(x)) if *x == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), SparqlError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{p}'")))
        }
    }

    fn unsupported_here(&self) -> Option<SparqlError> {
        match self.peek()? {
            Tok::Word(w) => {
                let upper = w.to_ascii_uppercase();
                let name = if upper == "NOT" {
                    "NOT EXISTS".to_owned()
                } else {
                    upper
                };
                UNSUPPORTED_WORDS
                    .contains(&w.to_ascii_uppercase().as_str())
                    .then_some(SparqlError::Unsupported(name))
            }
            _ => None,
        }
    }

    fn var(&mut self) -> Result<String, SparqlError> {
        match self.next()? {
            Tok::Var(v) => Ok(v),
            _ => {
                self.pos -= 1;
                Err(self.error("expected variable"))
            }
        }
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<String, SparqlError> {
        self.prefixes
            .get(prefix)
            .map(|ns| format!("{ns}{local}"))
            .ok_or_else(|| SparqlError::UnknownPrefix(prefix.to_owned()))
    }

    fn query(&mut self) -> Result<QueryAst, SparqlError> {
        loop {
            if self.eat_word("PREFIX") {
                let Tok::PName(prefix, local) = self.next()? else {
                    self.pos -= 1;
                    return Err(self.error("expected prefix name"));
                };
                if !local.is_empty() {
                    return Err(self.error("prefix name must end with ':'"));
                }
                let Tok::Iri(ns) = self.next()? else {
                    self.pos -= 1;
                    return Err(self.error("expected namespace IRI"));
                };
                self.prefixes.insert(prefix.clone(), ns.clone());
                self.declared.push((prefix, ns));
            } else if self.is_word("BASE") {
                return Err(SparqlError::Unsupported("BASE".into()));
            } else {
                break;
            }
        }
        if let Some(e) = self.unsupported_here() {
            return Err(e);
        }
        self.expect_word("SELECT")?;
        if let Some(e) = self.unsupported_here() {
            return Err(e);
        }
        let distinct = self.eat_word("DISTINCT");
        let select = if self.eat_punct("*") {
            None
        } else {
            let mut items = Vec::new();
            loop {
                match self.peek() {
                    Some(Tok::Var(_)) => items.push(SelectItem::Var(self.var()?)),
                    Some(Tok::Punct("(")) => {
                        self.pos += 1;
                        let e = self.expr()?;
                        self.expect_word("AS")?;
                        let v = self.var()?;
                        self.expect_punct(")")?;
                        items.push(SelectItem::Expr(e, v));
                    }
                    _ => break,
                }
            }
            if items.is_empty() {
                return Err(self.error("expected projection"));
            }
            Some(items)
        };
        if self.is_word("FROM") {
            return Err(SparqlError::Unsupported("FROM".into()));
        }
        self.eat_word("WHERE");
        let where_clause = self.group_pattern()?;

        let mut group_by = Vec::new();
        let mut having = Vec::new();
        let mut order_by = Vec::new();
        let (mut limit, mut offset) = (None, None);
        if self.eat_word("GROUP") {
            self.expect_word("BY")?;
            loop {
                match self.peek() {
                    Some(Tok::Var(_)) => group_by.push(Expr::Var(self.var()?)),
                    Some(Tok::Punct("(")) => {
                        self.pos += 1;
                        let e = self.expr()?;
                        if self.is_word("AS") {
                            return Err(SparqlError::Unsupported(
                                "GROUP BY (expression AS ?var)".into(),
                            ));
                        }
                        self.expect_punct(")")?;
                        group_by.push(e);
                    }
                    _ => break,
                }
            }
            if group_by.is_empty() {
                return Err(self.error("expected grouping key"));
            }
        }
        if self.eat_word("HAVING") {
            while self.is_punct("(") || matches!(self.peek(), Some(Tok::Word(_) | Tok::PName(..))) {
                if self.is_word("ORDER") || self.is_word("LIMIT") || self.is_word("OFFSET") {
                    break;
                }
                having.push(self.primary()?);
            }
            if having.is_empty() {
                return Err(self.error("expected HAVING condition"));
            }
        }
        if self.eat_word("ORDER") {
            self.expect_word("BY")?;
            loop {
                let descending = if self.eat_word("DESC") {
                    true
                } else {
                    self.eat_word("ASC");
                    false
                };
                let key = match self.peek() {
                    Some(Tok::Var(_)) => Expr::Var(self.var()?),
                    Some(Tok::Punct("(")) => self.primary()?,
                    Some(Tok::Word(_) | Tok::PName(..))
                        if !self.is_word("LIMIT") && !self.is_word("OFFSET") =>
                    {
                        self.primary()?
                    }
                    _ => break,
                };
                order_by.push(OrderKey {
                    expr: key,
                    descending,
                });
            }
            if order_by.is_empty() {
                return Err(self.error("expected ordering key"));
            }
        }
        for _ in 0..2 {
            if self.eat_word("LIMIT") {
                limit = Some(self.count()?);
            } else if self.eat_word("OFFSET") {
                offset = Some(self.count()?);
            }
        }
        if self.pos < self.toks.len() {
            if let Some(e) = self.unsupported_here() {
                return Err(e);
            }
            return Err(self.error("unexpected trailing input"));
        }
        Ok(QueryAst {
            prefixes: self.declared.clone(),
            distinct,
            select,
            where_clause,
            group_by,
            having,
            order_by,
            limit,
            offset,
        })
    }

    fn count(&mut self) -> Result<usize, SparqlError> {
        match self.next()? {
            Tok::Integer(n) => n.parse().map_err(|_| self.error("count out of range")),
            _ => {
                self.pos -= 1;
                Err(self.error("expected non-negative integer"))
            }
        }
    }

    fn group_pattern(&mut self) -> Result<Vec<Element>, SparqlError> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        loop {
            if self.eat_punct("}") {
                return Ok(out);
            }
            if let Some(e) = self.unsupported_here() {
                return Err(e);
            }
            if self.eat_punct(".") {
                continue;
            }
            if self.is_punct("{") {
                return Err(match self.peek_at(1) {
                    Some(Tok::Word(w)) if w.eq_ignore_ascii_case("SELECT") => {
                        SparqlError::Unsupported("subquery".into())
                    }
                    _ => SparqlError::Unsupported("nested group pattern".into()),
                });
            }
            if self.eat_word("FILTER") {
                if let Some(e) = self.unsupported_here() {
                    return Err(e);
                }
                let e = self.primary()?;
                if e.has_aggregate() {
                    return Err(self.error("aggregate not allowed in FILTER"));
                }
                out.push(Element::Filter(e));
                continue;
            }
            if self.eat_word("BIND") {
                self.expect_punct("(")?;
                let e = self.expr()?;
                self.expect_word("AS")?;
                let v = self.var()?;
                self.expect_punct(")")?;
                if e.has_aggregate() {
                    return Err(self.error("aggregate not allowed in BIND"));
                }
                out.push(Element::Bind(e, v));
                continue;
            }
            self.triples_same_subject(&mut out)?;
            let keyword_follows = matches!(self.peek(), Some(Tok::Word(_)));
            if !self.is_punct("}") && !keyword_follows {
                self.expect_punct(".")
                    .map_err(|_| self.error("expected '.' or '}' after triple pattern"))?;
            }
        }
    }

    fn pattern_term(&mut self, position: &str) -> Result<PatternTerm, SparqlError> {
        if self.is_punct("[") {
            return Err(SparqlError::Unsupported("blank node property lists".into()));
        }
        if self.is_punct("(") {
            return Err(SparqlError::Unsupported("collections".into()));
        }
        match self.peek() {
            Some(Tok::Var(_)) => Ok(PatternTerm::Var(self.var()?)),
            Some(Tok::Blank(_)) => {
                let Tok::Blank(label) = self.next()? else {
                    unreachable!()
                };
                Ok(PatternTerm::Var(format!("_:{label}")))
            }
            Some(Tok::Iri(_) | Tok::PName(..)) => Ok(PatternTerm::Const(Term::Iri(self.iri()?))),
            Some(Tok::Str(_) | Tok::Integer(_) | Tok::Decimal(_) | Tok::Double(_))
                if position == "object" =>
            {
                Ok(PatternTerm::Const(self.literal()?))
            }
            Some(Tok::Punct("-" | "+")) if position == "object" => {
                Ok(PatternTerm::Const(self.literal()?))
            }
            Some(Tok::Word(w)) if position == "object" && (w == "true" || w == "false") => {
                Ok(PatternTerm::Const(self.literal()?))
            }
            _ => Err(self.error(format!("expected {position}"))),
        }
    }

    fn iri(&mut self) -> Result<String, SparqlError> {
        match self.next()? {
            Tok::Iri(i) => Ok(i),
            Tok::PName(p, l) => self.expand(&p, &l),
            _ => {
                self.pos -= 1;
                Err(self.error("expected IRI"))
            }
        }
    }

    fn literal(&mut self) -> Result<Term, SparqlError> {
        let negative = if self.eat_punct("-") {
            true
        } else {
            self.eat_punct("+");
            false
        };
        let sign = if negative { "-" } else { "" };
        let lit = |lex: String, dt: &str| Term::Literal {
            lexical: lex,
            datatype: dt.to_owned(),
        };
        let term = match self.next()? {
            Tok::Integer(n) => lit(format!("{sign}{n}"), xsd::INTEGER),
            Tok::Decimal(n) => lit(format!("{sign}{n}"), xsd::DECIMAL),
            Tok::Double(n) => lit(format!("{sign}{n}"), xsd::DOUBLE),
            Tok::Str(s) if !negative => {
                if let Some(Tok::LangTag(_)) = self.peek() {
                    return Err(SparqlError::Unsupported("language-tagged literals".into()));
                }
                if self.eat_punct("^^") {
                    let dt = self.iri()?;
                    if !lexical::is_valid(&s, &dt) {
                        return Err(self.error(format!("invalid lexical form {s:?} for <{dt}>")));
                    }
                    lit(s, &dt)
                } else {
                    lit(s, xsd::STRING)
                }
            }
            Tok::Word(w) if !negative && (w == "true" || w == "false") => lit(w, xsd::BOOLEAN),
            _ => {
                self.pos -= 1;
                return Err(self.error("expected literal"));
            }
        };
        Ok(term)
    }

    fn verb(&mut self) -> Result<PatternTerm, SparqlError> {
        if self.is_word("a") {
            self.pos += 1;
            return Ok(PatternTerm::Const(Term::Iri(vocab::RDF_TYPE.to_owned())));
        }
        if self.is_punct("^") || self.is_punct("!") || self.is_punct("(") {
            return Err(SparqlError::Unsupported("property paths".into()));
        }
        let p = self.pattern_term("predicate")?;
        if ["/", "|", "*", "+", "?"].iter().any(|x| self.is_punct(x)) {
            return Err(SparqlError::Unsupported("property paths".into()));
        }
        Ok(p)
    }

    fn triples_same_subject(&mut self, out: &mut Vec<Element>) -> Result<(), SparqlError> {
        let subject = self.pattern_term("subject")?;
        loop {
            let predicate = self.verb()?;
            loop {
                let object = self.pattern_term("object")?;
                out.push(Element::Triple(TriplePatternAst {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                }));
                if !self.eat_punct(",") {
                    break;
                }
            }
            if !self.eat_punct(";") {
                return Ok(());
            }
            while self.eat_punct(";") {}
            if self.is_punct(".") || self.is_punct("}") {
                return Ok(());
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, SparqlError> {
        let mut left = self.and_expr()?;
        while self.eat_punct("||") {
            left = Expr::Or(Box::new(left), Box::new(self.and_expr()?));
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, SparqlError> {
        let mut left = self.relational()?;
        while self.eat_punct("&&") {
            left = Expr::And(Box::new(left), Box::new(self.relational()?));
        }
        Ok(left)
    }

    fn relational(&mut self) -> Result<Expr, SparqlError> {
        let left = self.additive()?;
        let op = match self.peek() {
            Some(Tok::Punct("=")) => CmpOp::Eq,
            Some(Tok::Punct("!=")) => CmpOp::Ne,
            Some(Tok::Punct("<")) => CmpOp::Lt,
            Some(Tok::Punct("<=")) => CmpOp::Le,
            Some(Tok::Punct(">")) => CmpOp::Gt,
            Some(Tok::Punct(">=")) => CmpOp::Ge,
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case("IN") || w.eq_ignore_ascii_case("NOT") => {
                return Err(SparqlError::Unsupported("IN".into()));
            }
            _ => return Ok(left),
        };
        self.pos += 1;
        Ok(Expr::Cmp(op, Box::new(left), Box::new(self.additive()?)))
    }

    fn additive(&mut self) -> Result<Expr, SparqlError> {
        let mut left = self.multiplicative()?;
        loop {
            let op = if self.eat_punct("+") {
                ArithOp::Add
            } else if self.eat_punct("-") {
                ArithOp::Sub
            } else {
                return Ok(left);
            };
            left = Expr::Arith(op, Box::new(left), Box::new(self.multiplicative()?));
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, SparqlError> {
        let mut left = self.unary()?;
        loop {
            let op = if self.eat_punct("*") {
                ArithOp::Mul
            } else if self.eat_punct("/") {
                ArithOp::Div
            } else {
                return Ok(left);
            };
            left = Expr::Arith(op, Box::new(left), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, SparqlError> {
        if self.eat_punct("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat_punct("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_punct("+") {
            return self.unary();
        }
        self.primary()
    }

    fn args(&mut self, n: usize, name: &str) -> Result<Vec<Expr>, SparqlError> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            args.push(self.expr()?);
            while self.eat_punct(",") {
                args.push(self.expr()?);
            }
        }
        self.expect_punct(")")?;
        if args.len() != n {
            return Err(self.error(format!("{name} takes {n} argument(s), got {}", args.len())));
        }
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, SparqlError> {
        match self.peek().cloned() {
            Some(Tok::Punct("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Some(Tok::Var(v)) => {
                self.pos += 1;
                Ok(Expr::Var(v))
            }
            Some(Tok::Iri(_) | Tok::PName(..)) => {
                let iri = self.iri()?;
                if !self.is_punct("(") {
                    return Ok(Expr::Const(Term::Iri(iri)));
                }
                let kind = match iri.strip_prefix(vocab::XSD) {
                    Some("dateTime") => CastKind::DateTime,
                    Some("integer") => CastKind::Integer,
                    Some("decimal") => CastKind::Decimal,
                    Some("double") | Some("float") => CastKind::Double,
                    Some("string") => CastKind::String,
                    Some("boolean") => CastKind::Boolean,
                    _ => return Err(SparqlError::Unsupported(format!("function <{iri}>"))),
                };
                let mut args = self.args(1, "cast")?;
                Ok(Expr::Cast(kind, Box::new(args.pop().unwrap())))
            }
            Some(Tok::Word(w)) => {
                let upper = w.to_ascii_uppercase();
                let agg = match upper.as_str() {
                    "COUNT" => Some(AggKind::Count),
                    "SUM" => Some(AggKind::Sum),
                    "AVG" => Some(AggKind::Avg),
                    "MIN" => Some(AggKind::Min),
                    "MAX" => Some(AggKind::Max),
                    _ => None,
                };
                if let Some(kind) = agg {
                    self.pos += 1;
                    self.expect_punct("(")?;
                    let distinct = self.eat_word("DISTINCT");
                    let arg = if kind == AggKind::Count && self.eat_punct("*") {
                        None
                    } else {
                        let e = self.expr()?;
                        if e.has_aggregate() {
                            return Err(self.error("nested aggregates are not allowed"));
                        }
                        Some(Box::new(e))
                    };
                    self.expect_punct(")")?;
                    return Ok(Expr::Aggregate {
                        kind,
                        distinct,
                        arg,
                    });
                }
                let builtin = match upper.as_str() {
                    "STR" => Some(Builtin::Str),
                    "ABS" => Some(Builtin::Abs),
                    "BOUND" => Some(Builtin::Bound),
                    _ => None,
                };
                if let Some(b) = builtin {
                    self.pos += 1;
                    let args = self.args(1, &upper)?;
                    if b == Builtin::Bound && !matches!(args[0], Expr::Var(_)) {
                        return Err(self.error("BOUND takes a variable"));
                    }
                    return Ok(Expr::Call(b, args));
                }
                if w == "true" || w == "false" {
                    return Ok(Expr::Const(self.literal()?));
                }
                if let Some(e) = self.unsupported_here() {
                    return Err(e);
                }
                if self.peek_at(1) == Some(&Tok::Punct("(")) {
                    return Err(SparqlError::Unsupported(format!("function {upper}")));
                }
                Err(self.error(format!("unexpected {w:?} in expression")))
            }
            Some(Tok::Str(_) | Tok::Integer(_) | Tok::Decimal(_) | Tok::Double(_)) => {
                Ok(Expr::Const(self.literal()?))
            }
            _ => Err(self.error("expected expression")),
        }
    }
}

/// Scoping checks that need the whole query.
fn check(ast: &QueryAst) -> Result<(), SparqlError> {
    let invalid = |m: String| Err(SparqlError::Invalid(m));
    let mut bound: Vec<String> = Vec::new();
    for e in &ast.where_clause {
        match e {
            Element::Triple(t) => {
                for p in [&t.subject, &t.predicate, &t.object] {
                    if let PatternTerm::Var(v) = p {
                        if !bound.contains(v) {
                            bound.push(v.clone());
                        }
                    }
                }
            }
            Element::Bind(_, v) => {
                if bound.contains(v) {
                    return invalid(format!("BIND target ?{v} is already in scope"));
                }
                bound.push(v.clone());
            }
            Element::Filter(_) => {}
        }
    }
    let known =
        |v: &str, extra: &[String]| bound.iter().any(|b| b == v) || extra.iter().any(|b| b == v);
    for (expr, _) in ast.binds() {
        let mut vars = Vec::new();
        expr.all_vars(&mut vars);
        if let Some(v) = vars.iter().find(|v| !known(v, &[])) {
            return invalid(format!("unknown variable ?{v}"));
        }
    }

    let aggregate = ast.is_aggregate();
    let group_vars: Vec<&str> = ast
        .group_by
        .iter()
        .filter_map(|e| match e {
            Expr::Var(v) => Some(v.as_str()),
            _ => None,
        })
        .collect();
    for g in &ast.group_by {
        let mut vars = Vec::new();
        g.all_vars(&mut vars);
        if let Some(v) = vars.iter().find(|v| !known(v, &[])) {
            return invalid(format!("unknown variable ?{v} in GROUP BY"));
        }
    }
    let mut aliases: Vec<String> = Vec::new();
    for item in ast.select.iter().flatten() {
        match item {
            SelectItem::Var(v) => {
                if !known(v, &aliases) {
                    return invalid(format!("unknown variable ?{v} in SELECT"));
                }
                if aggregate && !group_vars.contains(&v.as_str()) {
                    return invalid(format!("variable ?{v} is neither grouped nor aggregated"));
                }
            }
            SelectItem::Expr(e, alias) => {
                let mut vars = Vec::new();
                e.all_vars(&mut vars);
                if let Some(v) = vars.iter().find(|v| !known(v, &aliases)) {
                    return invalid(format!("unknown variable ?{v} in SELECT"));
                }
                if aggregate {
                    let mut free = Vec::new();
                    e.free_vars(&mut free);
                    if let Some(v) = free
                        .iter()
                        .find(|v| !group_vars.contains(v) && !aliases.iter().any(|a| a == *v))
                    {
                        return invalid(format!("variable ?{v} is neither grouped nor aggregated"));
                    }
                }
                if bound.contains(alias) || aliases.contains(alias) {
                    return invalid(format!("projection alias ?{alias} is already in scope"));
                }
                aliases.push(alias.clone());
            }
        }
    }
    if ast.select.is_none() && aggregate {
        return invalid("SELECT * cannot be combined with grouping".into());
    }
    for e in ast
        .having
        .iter()
        .chain(ast.order_by.iter().map(|k| &k.expr))
    {
        let mut vars = Vec::new();
        e.all_vars(&mut vars);
        if let Some(v) = vars.iter().find(|v| !known(v, &aliases)) {
            return invalid(format!("unknown variable ?{v}"));
        }
    }
    Ok(())
}
