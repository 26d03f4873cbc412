//! Parsed form of a query.

use crate::rdf::Term;

#[derive(Debug, Clone, PartialEq)]
pub enum PatternTerm {
    Var(String),
    Const(Term),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriplePatternAst {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggKind {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

/// Target datatype of a constructor cast such as `xsd:dateTime(?x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CastKind {
    DateTime,
    Integer,
    Decimal,
    Double,
    String,
    Boolean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Str,
    Abs,
    Bound,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Const(Term),
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Cast(CastKind, Box<Expr>),
    Call(Builtin, Vec<Expr>),
    /// `arg == None` only for `COUNT(*)`.
    Aggregate {
        kind: AggKind,
        distinct: bool,
        arg: Option<Box<Expr>>,
    },
}

impl Expr {
    pub fn has_aggregate(&self) -> bool {
        match self {
            Expr::Aggregate { .. } => true,
            Expr::Var(_) | Expr::Const(_) => false,
            Expr::Or(a, b) | Expr::And(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                a.has_aggregate() || b.has_aggregate()
            }
            Expr::Not(a) | Expr::Neg(a) | Expr::Cast(_, a) => a.has_aggregate(),
            Expr::Call(_, args) => args.iter().any(Expr::has_aggregate),
        }
    }

    /// Variables referenced outside of aggregate arguments.
    pub fn free_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(v) => out.push(v),
            Expr::Const(_) | Expr::Aggregate { .. } => {}
            Expr::Or(a, b) | Expr::And(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            Expr::Not(a) | Expr::Neg(a) | Expr::Cast(_, a) => a.free_vars(out),
            Expr::Call(_, args) => args.iter().for_each(|e| e.free_vars(out)),
        }
    }

    /// All variables, including those inside aggregates.
    pub fn all_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(v) => out.push(v),
            Expr::Const(_) => {}
            Expr::Aggregate { arg, .. } => {
                if let Some(a) = arg {
                    a.all_vars(out);
                }
            }
            Expr::Or(a, b) | Expr::And(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                a.all_vars(out);
                b.all_vars(out);
            }
            Expr::Not(a) | Expr::Neg(a) | Expr::Cast(_, a) => a.all_vars(out),
            Expr::Call(_, args) => args.iter().for_each(|e| e.all_vars(out)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Triple(TriplePatternAst),
    Filter(Expr),
    Bind(Expr, String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Var(String),
    Expr(Expr, String),
}

impl SelectItem {
    pub fn name(&self) -> &str {
        match self {
            SelectItem::Var(v) | SelectItem::Expr(_, v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderKey {
    pub expr: Expr,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub prefixes: Vec<(String, String)>,
    pub distinct: bool,
    /// `None` for `SELECT *`.
    pub select: Option<Vec<SelectItem>>,
    pub where_clause: Vec<Element>,
    pub group_by: Vec<Expr>,
    pub having: Vec<Expr>,
    pub order_by: Vec<OrderKey>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

impl QueryAst {
    pub fn patterns(&self) -> impl Iterator<Item = &TriplePatternAst> {
        self.where_clause.iter().filter_map(|e| match e {
            Element::Triple(t) => Some(t),
            _ => None,
        })
    }

    pub fn binds(&self) -> impl Iterator<Item = (&Expr, &str)> {
        self.where_clause.iter().filter_map(|e| match e {
            Element::Bind(x, v) => Some((x, v.as_str())),
            _ => None,
        })
    }

    pub fn filters(&self) -> impl Iterator<Item = &Expr> {
        self.where_clause.iter().filter_map(|e| match e {
            Element::Filter(x) => Some(x),
            _ => None,
        })
    }

    /// True if the query groups or aggregates.
    pub fn is_aggregate(&self) -> bool {
        !self.group_by.is_empty()
            || !self.having.is_empty()
            || self.select.iter().flatten().any(|s| match s {
                SelectItem::Expr(e, _) => e.has_aggregate(),
                SelectItem::Var(_) => false,
            })
            || self.order_by.iter().any(|k| k.expr.has_aggregate())
    }

    /// Variables bound by the WHERE clause, in order of first appearance.
    pub fn where_vars(&self) -> Vec<String> {
        let mut vars: Vec<String> = Vec::new();
        let mut add = |v: &str| {
            if !vars.iter().any(|x| x == v) {
                vars.push(v.to_owned());
            }
        };
        for e in &self.where_clause {
            match e {
                Element::Triple(t) => {
                    for p in [&t.subject, &t.predicate, &t.object] {
                        if let PatternTerm::Var(v) = p {
                            add(v);
                        }
                    }
                }
                Element::Bind(_, v) => add(v),
                Element::Filter(_) => {}
            }
        }
        vars
    }
}
